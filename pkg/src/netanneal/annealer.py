"""Precision-restricted simulated annealing for one subnet.

The precision parameter p in [0, 1] simultaneously shrinks the proposal step
and lowers the temperature; at p = 1 the search is frozen and only strict
improvements are accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class AnnealConfig:
    max_step: float  # fraction of each parameter's range
    t0: float        # temperature scale
    iterations: int  # proposals per subnet visit
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.max_step <= 1:
            raise ValueError("max_step must be in (0, 1]")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class SubnetState:
    """Free parameters of one subnet plus a frozen snapshot of the rest of the network."""

    free_params: np.ndarray       # flat vector, element-major
    bounds: np.ndarray            # aligned (n_free, 2) min/max pairs
    frozen_env: object = None     # opaque, read-only

    def __post_init__(self) -> None:
        self.free_params = np.asarray(self.free_params, dtype=float)
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.bounds.shape != (self.free_params.shape[0], 2):
            raise ValueError("bounds must be (n_free, 2) aligned with free_params")
        if np.any(self.free_params < self.bounds[:, 0]) or np.any(self.free_params > self.bounds[:, 1]):
            raise ValueError("free parameters out of bounds")

    def replace_params(self, params: np.ndarray) -> "SubnetState":
        return SubnetState(params, self.bounds, self.frozen_env)


def step_size(max_step: float, p: float) -> float:
    """Proposal radius as a range fraction: max_step * (1 - p)."""
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    return max_step * (1.0 - p)


def temperature(x: float, t0: float) -> float:
    """Linear temperature t0 * x; x = 1 - p, so temperature falls as precision rises."""
    if not 0 <= x <= 1:
        raise ValueError("x must be in [0, 1]")
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    return t0 * x


def acceptance(e_old: float, e_new: float, t: float) -> float:
    """Metropolis acceptance probability; t = 0 accepts only non-worsening moves."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if e_new <= e_old:
        return 1.0
    if t == 0:
        return 0.0
    return math.exp((e_old - e_new) / t)


def random_neighbor(s: SubnetState, step: float, rng: np.random.Generator) -> SubnetState:
    """Perturb each free parameter uniformly within +-step*range, clamped to bounds."""
    if not 0 <= step <= 1:
        raise ValueError("step must be in [0, 1]")
    if step == 0:
        return s
    ranges = s.bounds[:, 1] - s.bounds[:, 0]
    delta = rng.uniform(-step, step, size=s.free_params.shape) * ranges
    params = np.clip(s.free_params + delta, s.bounds[:, 0], s.bounds[:, 1])
    return s.replace_params(params)


def optimize_subnet(s0: SubnetState, p: float, cfg: AnnealConfig,
                    energy: Callable[[SubnetState], float],
                    rng: np.random.Generator | None = None) -> tuple[SubnetState, float]:
    """Run cfg.iterations annealing proposals from s0 and return the best state visited.

    Never returns a state with energy above energy(s0). With an explicit rng the
    cfg.seed is ignored (used by the orchestrator to derive per-task streams).
    """
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    step = step_size(cfg.max_step, p)
    t = temperature(1.0 - p, cfg.t0)
    cur, e_cur = s0, energy(s0)
    best, e_best = cur, e_cur
    if step == 0:
        return best, e_best
    for _ in range(cfg.iterations):
        cand = random_neighbor(cur, step, rng)
        e_cand = energy(cand)
        if acceptance(e_cur, e_cand, t) >= rng.random():
            cur, e_cur = cand, e_cand
            if e_cur < e_best:
                best, e_best = cur, e_cur
    return best, e_best


def task_seed(master_seed: int, *indices: int) -> np.random.Generator:
    """Deterministic per-task RNG stream independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, *indices)))
