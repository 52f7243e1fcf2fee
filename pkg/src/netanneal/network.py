"""Homogeneous network model: elements with bounded parameters and a correlation graph."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

FLOAT_FMT = "%.17g"  # round-trips IEEE doubles through text


@dataclass(frozen=True)
class ParameterSpec:
    """One regulated parameter, identical for every element of a network."""

    name: str
    min: float
    max: float

    def __post_init__(self) -> None:
        if not self.min < self.max:
            raise ValueError(f"parameter {self.name!r}: min ({self.min}) must be < max ({self.max})")
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"parameter name must be a non-empty identifier, got {self.name!r}")

    @property
    def range(self) -> float:
        return self.max - self.min


@dataclass
class Element:
    """A single network element: dense integer id, planar position (meters), parameter vector."""

    id: int
    position: tuple[float, float]
    params: np.ndarray

    def __post_init__(self) -> None:
        self.params = np.asarray(self.params, dtype=float)


class Network:
    """An ordered list of parameter specs plus elements that all satisfy them.

    Treated as immutable after construction; updates go through
    :meth:`with_params`, which returns a new instance.
    """

    def __init__(self, specs: Sequence[ParameterSpec], elements: Iterable[Element]):
        self.specs = list(specs)
        self.elements = list(elements)
        self._validate()

    def _validate(self) -> None:
        ids = [e.id for e in self.elements]
        if ids != list(range(len(ids))):
            raise ValueError("element ids must be exactly 0..N-1 in order")
        k = len(self.specs)
        lo = np.array([s.min for s in self.specs])
        hi = np.array([s.max for s in self.specs])
        for e in self.elements:
            if e.params.shape != (k,):
                raise ValueError(f"element {e.id}: expected {k} parameters, got {e.params.shape}")
            if np.any(e.params < lo) or np.any(e.params > hi):
                raise ValueError(f"element {e.id}: parameters out of bounds")

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def n_params(self) -> int:
        return len(self.specs)

    def params_matrix(self) -> np.ndarray:
        """Copy of all parameters as an (n_elements, n_params) array."""
        return np.array([e.params for e in self.elements], dtype=float)

    def positions(self) -> np.ndarray:
        return np.array([e.position for e in self.elements], dtype=float)

    def bounds(self) -> np.ndarray:
        """(n_params, 2) array of [min, max] per parameter."""
        return np.array([[s.min, s.max] for s in self.specs], dtype=float)

    def with_params(self, matrix: np.ndarray) -> "Network":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (self.n, self.n_params):
            raise ValueError(f"expected shape {(self.n, self.n_params)}, got {matrix.shape}")
        elems = [Element(e.id, e.position, matrix[i].copy()) for i, e in enumerate(self.elements)]
        return Network(self.specs, elems)

    # ---- text serialization -------------------------------------------------

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def dumps(self) -> str:
        lines = ["network-file v1"]
        for s in self.specs:
            lines.append(f"param {s.name} {FLOAT_FMT % s.min} {FLOAT_FMT % s.max}")
        for e in self.elements:
            vals = " ".join(FLOAT_FMT % v for v in e.params)
            lines.append(f"element {e.id} {FLOAT_FMT % e.position[0]} {FLOAT_FMT % e.position[1]} {vals}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "Network":
        return cls.loads(Path(path).read_text())

    @classmethod
    def loads(cls, text: str) -> "Network":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "network-file v1":
            raise ValueError("not a network file (missing 'network-file v1' header)")
        specs: list[ParameterSpec] = []
        elements: list[Element] = []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "param":
                specs.append(ParameterSpec(parts[1], float(parts[2]), float(parts[3])))
            elif parts[0] == "element":
                eid = int(parts[1])
                x, y = float(parts[2]), float(parts[3])
                params = np.array([float(v) for v in parts[4:]])
                elements.append(Element(eid, (x, y), params))
            else:
                raise ValueError(f"unrecognized record: {parts[0]!r}")
        return cls(specs, elements)


class CorrelationGraph:
    """Symmetric non-negative interaction weights over network elements, zero diagonal."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if np.any(np.diag(w) != 0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edge_count(self) -> int:
        """Number of undirected edges with positive weight."""
        return int(np.count_nonzero(np.triu(self.weights, k=1)))

    def edges(self) -> list[tuple[int, int, float]]:
        """Positive-weight edges as (i, j, weight) with i < j."""
        iu, ju = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]


def build_correlation_graph(net: Network, corr: Callable[[Element, Element], float]) -> CorrelationGraph:
    """Evaluate a pairwise correlation function into the full weighted complete graph."""
    if net.n < 2:
        raise ValueError("correlation graph needs at least 2 elements")
    w = np.zeros((net.n, net.n))
    for i in range(net.n):
        for j in range(i + 1, net.n):
            a = corr(net.elements[i], net.elements[j])
            b = corr(net.elements[j], net.elements[i])
            if a != b:
                raise ValueError(f"correlation function is asymmetric on pair ({i}, {j}): {a} != {b}")
            if a < 0:
                raise ValueError(f"correlation must be non-negative, got {a} on pair ({i}, {j})")
            w[i, j] = w[j, i] = a
    return CorrelationGraph(w)


def aggregate_quality(subnet_qualities: Sequence[tuple[float, float]]) -> float:
    """Weighted mean of subnet qualities; equal weights recover the plain mean."""
    if len(subnet_qualities) == 0:
        raise ValueError("aggregate_quality: empty list")
    qs = np.array([q for q, _ in subnet_qualities], dtype=float)
    ws = np.array([w for _, w in subnet_qualities], dtype=float)
    if np.any(ws <= 0):
        raise ValueError("aggregate_quality: weights must be positive")
    return float(np.dot(qs, ws) / ws.sum())
