"""Command-line front door: generate benchmark networks, run either optimizer,
compare traces, and dump SINR rasters."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .annealer import AnnealConfig
from .network import Network
from .orchestrator import (RunTrace, Schedule, run_alternative,
                           run_sector_baseline)
from .wireless import (Grid, PropagationConfig, SinrEvaluator, compute_sinr_field,
                       correlation_wireless, generate_network, suggest_thresholds)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "alternative"
    schedule: Schedule = field(default_factory=lambda: Schedule(0.0, 0.25, 0.0, 1.0, 6))
    anneal: AnnealConfig = field(default_factory=lambda: AnnealConfig(0.5, 1.0, 30, 0))
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    workers: int = 4
    wall_clock_budget: float = 60.0
    master_seed: int = 0
    lanes: Optional[int] = None
    unit_size: int = 3
    sector_k: Optional[int] = None  # defaults to workers
    grid_resolution_m: float = 100.0
    auto_thresholds: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("alternative", "sector"):
            raise ConfigError(f"mode: expected 'alternative' or 'sector', got {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if self.wall_clock_budget <= 0:
            raise ConfigError("wall_clock_budget: must be > 0")
        if self.unit_size < 1:
            raise ConfigError("unit_size: must be >= 1")
        if self.grid_resolution_m <= 0:
            raise ConfigError("grid_resolution_m: must be > 0")


def load_run_config(path: str | Path, master_seed: int) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: invalid JSON ({e})")
    kwargs: dict = {}
    try:
        if "schedule" in raw:
            kwargs["schedule"] = Schedule(**raw.pop("schedule"))
            kwargs["auto_thresholds"] = False
        if "anneal" in raw:
            kwargs["anneal"] = AnnealConfig(**raw.pop("anneal"))
        if "propagation" in raw:
            kwargs["propagation"] = PropagationConfig(**raw.pop("propagation"))
        kwargs.update(raw)
        kwargs["master_seed"] = master_seed
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config: {e}")


def network_fingerprint(net: Network) -> str:
    return hashlib.md5(net.dumps().encode()).hexdigest()


# ---- compare helpers --------------------------------------------------------


def plateau_quality(trace: RunTrace, fraction: float = 0.1) -> float:
    """Stabilized quality: mean over the trailing fraction of trace records."""
    qs = trace.qualities()
    tail = max(1, int(round(len(qs) * fraction)))
    return float(qs[-tail:].mean())


def time_to_reach(trace: RunTrace, level: float, tol: float = 0.0) -> Optional[float]:
    """First time the trace quality crosses `level - tol`, linearly interpolated."""
    target = level - tol
    prev_t, prev_q = None, None
    for r in trace.records:
        if r.quality >= target:
            if prev_t is None or prev_q is None or r.quality == prev_q:
                return r.wall_time
            frac = (target - prev_q) / (r.quality - prev_q)
            return prev_t + frac * (r.wall_time - prev_t)
        prev_t, prev_q = r.wall_time, r.quality
    return None


def compare_traces(trace_a: RunTrace, trace_b: RunTrace, plateau_tol: float = 0.0) -> dict:
    """Plateau levels, mutual time-to-reach, and the speedup of A over B."""
    if trace_a.fingerprint and trace_b.fingerprint and trace_a.fingerprint != trace_b.fingerprint:
        raise ValueError("traces were produced on different networks")
    pa, pb = plateau_quality(trace_a), plateau_quality(trace_b)
    t_a_reaches_b = time_to_reach(trace_a, pb, plateau_tol)
    t_b_reaches_a = time_to_reach(trace_b, pa, plateau_tol)
    t_a_own = time_to_reach(trace_a, pa, plateau_tol)
    t_b_own = time_to_reach(trace_b, pb, plateau_tol)
    speedup = None
    if t_a_reaches_b is not None and t_b_own is not None and t_a_reaches_b > 0:
        speedup = t_b_own / t_a_reaches_b
    return {
        "plateau_a": pa,
        "plateau_b": pb,
        "time_a_reaches_plateau_b": t_a_reaches_b,
        "time_b_reaches_plateau_a": t_b_reaches_a,
        "time_a_own_plateau": t_a_own,
        "time_b_own_plateau": t_b_own,
        "speedup_a_over_b": speedup,
    }


# ---- subcommands --------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    net = generate_network(args.sites, args.sectors, args.area_km, args.seed)
    net.save(args.out)
    print(f"wrote {args.out}: {net.n} elements, {net.n * net.n_params} parameters")
    return EXIT_OK


def _wireless_setup(net: Network, cfg: RunConfig):
    area_m = float(net.positions().max()) if net.n else 1000.0
    grid = Grid.covering(area_m * 1.05 + cfg.grid_resolution_m, cfg.grid_resolution_m)
    return SinrEvaluator(net, grid, cfg.propagation)


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, args.seed)
    net = Network.load(args.network)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluator = _wireless_setup(net, cfg)
    sched = cfg.schedule
    if cfg.auto_thresholds:
        th_min, th_max = suggest_thresholds(net)
        sched = Schedule(sched.p, sched.p_increment, th_min, th_max, sched.patience)
    anneal = AnnealConfig(cfg.anneal.max_step, cfg.anneal.t0, cfg.anneal.iterations,
                          cfg.master_seed)
    t0 = time.perf_counter()
    if cfg.mode == "alternative":
        result, trace = run_alternative(
            net, sched, anneal, correlation_wireless, evaluator, cfg.workers,
            lanes=cfg.lanes, unit_size=cfg.unit_size, budget_s=cfg.wall_clock_budget,
            master_seed=cfg.master_seed)
    else:
        k = cfg.sector_k if cfg.sector_k is not None else cfg.workers
        result, trace = run_sector_baseline(
            net, k, anneal, correlation_wireless, evaluator, cfg.workers,
            budget_s=cfg.wall_clock_budget, master_seed=cfg.master_seed)
    elapsed = time.perf_counter() - t0
    trace.fingerprint = network_fingerprint(net)
    trace.to_csv(out_dir / "trace.csv")
    result.save(out_dir / "optimized_network.txt")
    summary = {
        "mode": cfg.mode,
        "final_quality": trace.records[-1].quality,
        "initial_quality": trace.records[0].quality,
        "elapsed_seconds": elapsed,
        "p_levels_visited": len(trace.levels),
        "splits_processed": sum(1 for r in trace.records if r.event == "merge"),
        "master_seed": cfg.master_seed,
        "workers": cfg.workers,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    report = compare_traces(RunTrace.from_csv(args.trace_a), RunTrace.from_csv(args.trace_b),
                            args.plateau_tolerance)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_sinr_field(args: argparse.Namespace) -> int:
    net = Network.load(args.network)
    prop = PropagationConfig(model=args.model, frequency_mhz=args.frequency,
                             area_type=args.area_type)
    area_m = float(net.positions().max())
    grid = Grid.covering(area_m * 1.05 + args.resolution, args.resolution)
    field_ = compute_sinr_field(net, grid, prop)
    field_.to_csv(args.out)
    print(f"wrote {args.out}: {grid.n_points} points, mean SINR "
          f"{field_.sinr_db.mean():.2f} dB")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netanneal",
                                 description="Decompose and optimize large homogeneous networks")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic cellular network file")
    g.add_argument("--sites", type=int, required=True)
    g.add_argument("--sectors", type=int, default=3)
    g.add_argument("--area-km", type=float, default=25.0)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    o = sub.add_parser("optimize", help="run an optimizer on a network file")
    o.add_argument("--config", required=True, help="JSON run configuration")
    o.add_argument("--network", required=True)
    o.add_argument("--out-dir", required=True)
    o.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    o.set_defaults(fn=cmd_optimize)

    c = sub.add_parser("compare", help="compare two trace CSVs")
    c.add_argument("trace_a")
    c.add_argument("trace_b")
    c.add_argument("--plateau-tolerance", type=float, default=0.0)
    c.set_defaults(fn=cmd_compare)

    s = sub.add_parser("sinr-field", help="dump the SINR raster for a network")
    s.add_argument("--network", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--resolution", type=float, default=50.0)
    s.add_argument("--model", default="okumura_hata")
    s.add_argument("--frequency", type=float, default=900.0)
    s.add_argument("--area-type", default="urban")
    s.set_defaults(fn=cmd_sinr_field)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
