"""Batch experiment runner.

Every command writes one CSV (12-significant-digit floats, header row,
deterministic bytes for a given spec and seed) plus a JSON manifest with
the full parameter set, seed, library versions, and wall time. Exit codes:
0 success, 2 parameter/usage error, 3 numeric or bracket error.

Range-valued flags accept `start:stop:step`, inclusive of both endpoints
when the step divides evenly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import BracketError, ParameterError, ProbFwdError, SubcriticalError
from .forwarding_sim import SimConfig, empirical_min_p, run_monte_carlo
from .grid_analytics import grid_min_p
from .percolation import ThetaTable, estimate_theta_curve
from .topology import Topology, build_grid, build_tree, load_edge_list
from .tree_analytics import sweep_rows
from . import tree_analytics

__all__ = ["ExperimentSpec", "run_experiment", "main", "DEFAULT_SEED"]

# Fixed default so any run is reproducible without remembering a seed.
DEFAULT_SEED = 1729

_FLOAT_FORMAT = ".12g"

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    parameters: dict


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, _FLOAT_FORMAT)
    return str(value)


def parse_range(text: str, integer: bool = False) -> list:
    """`start:stop:step` inclusive of both ends when step divides evenly,
    or a single scalar."""
    parts = text.split(":")
    if len(parts) == 1:
        return [int(parts[0])] if integer else [float(parts[0])]
    if len(parts) != 3:
        raise ParameterError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ParameterError(f"range step must be positive in {text!r}")
    if stop < start:
        raise ParameterError(f"range stop below start in {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [start + i * step for i in range(count)]
    if integer:
        out = []
        for v in values:
            r = round(v)
            if abs(v - r) > 1e-9:
                raise ParameterError(f"non-integer value {v} in integer range {text!r}")
            out.append(int(r))
        return out
    return values


def _build_topology(params: dict) -> Topology:
    choices = [params.get("grid_m"), params.get("tree_height"), params.get("edge_list")]
    if sum(c is not None for c in choices) != 1:
        raise ParameterError(
            "exactly one of --grid-m, --tree-height, --edge-list is required")
    if params.get("grid_m") is not None:
        return build_grid(params["grid_m"])
    if params.get("tree_height") is not None:
        return build_tree(params["tree_height"], params.get("tree_arity") or 2)
    with open(params["edge_list"], "r", encoding="utf-8") as fh:
        return load_edge_list(fh)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_manifest(spec: ExperimentSpec, out_path: Path, wall_time: float) -> None:
    manifest = {
        "command": spec.command,
        "parameters": {k: v for k, v in sorted(spec.parameters.items())
                       if k != "out" and v is not None},
        "seed": spec.parameters.get("seed"),
        "versions": {
            "probfwd": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall_time,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "output": str(out_path),
    }
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _cmd_tree_exact(params: dict) -> tuple[list[str], list[list]]:
    rows = sweep_rows(params["height"], params["k"], params["delta"], params["n"])
    return (["n", "p_min", "tau"], [[n, p, tau] for n, p, _, _, tau in rows])


def _cmd_tree_bounds(params: dict) -> tuple[list[str], list[list]]:
    out = []
    for n in params["n"]:
        out.append([
            n,
            tree_analytics.min_p_lower_bound(params["height"], params["k"], n),
            tree_analytics.min_p_upper_bound(params["height"], params["k"], n,
                                             params["delta"]),
        ])
    return (["n", "lower", "upper"], out)


def _cmd_tree_sweep(params: dict) -> tuple[list[str], list[list]]:
    rows = sweep_rows(params["height"], params["k"], params["delta"], params["n"])
    return (["n", "p_min", "lower", "upper", "tau"], [list(r) for r in rows])


def _cmd_simulate(params: dict) -> tuple[list[str], list[list]]:
    topo = _build_topology(params)
    rows = []
    sink = None
    if params.get("per_trial"):
        if len(params["p"]) > 1:
            raise ParameterError("--per-trial requires a single --p value")
        sink = open(params["per_trial"], "w", encoding="utf-8")
    try:
        for p in params["p"]:
            config = SimConfig(
                topology=topo, data_packets=params["k"],
                coded_packets=params["n"][0], forward_prob=p,
                trials=params["trials"], master_seed=params["seed"])
            s = run_monte_carlo(config, workers=params["threads"], per_trial_sink=sink)
            rows.append([p, s.mean_coverage, s.std_err_coverage,
                         s.mean_transmissions, s.std_err_transmissions, s.trials])
    finally:
        if sink is not None:
            sink.close()
    return (["p", "mean_coverage", "se_coverage", "mean_transmissions",
             "se_transmissions", "trials"], rows)


def _cmd_min_p_sim(params: dict) -> tuple[list[str], list[list]]:
    topo = _build_topology(params)
    rows = []
    for n in params["n"]:
        p_star = empirical_min_p(
            topo, params["k"], n, params["delta"], params["trials"],
            params["tol"], params["seed"], workers=params["threads"])
        config = SimConfig(
            topology=topo, data_packets=params["k"], coded_packets=n,
            forward_prob=p_star, trials=params["trials"],
            master_seed=params["seed"])
        s = run_monte_carlo(config, workers=params["threads"])
        rows.append([n, p_star, s.mean_coverage, s.mean_transmissions,
                     s.mean_transmissions / topo.node_count, s.trials])
    return (["n", "p_min", "mean_coverage", "mean_transmissions",
             "normalized_transmissions", "trials"], rows)


def _cmd_theta(params: dict) -> tuple[list[str], list[list]]:
    table = estimate_theta_curve(
        params["p"], params["m"], params["reps"], params["seed"],
        workers=params["threads"])
    rows = []
    for i in range(len(table)):
        rows.append([
            float(table.p[i]), float(table.theta[i]), float(table.theta_plus[i]),
            float(table.std_err[i]), table.m, table.reps,
            "unreliable" if table.unreliable[i] else "ok",
        ])
    return (list(ThetaTable.CSV_HEADER), rows)


def _grid_rows(params: dict) -> tuple[list[str], list[list]]:
    with open(params["theta_table"], "r", encoding="utf-8") as fh:
        table = ThetaTable.from_csv(fh)
    rows = []
    for n in params["n"]:
        pred = grid_min_p(params["k"], n, params["delta"], table)
        rows.append([n, pred.p_min, pred.tau_normalized, pred.theta_at_pmin,
                     pred.theta_plus_at_pmin, 1 if pred.reliable else 0])
    return (["n", "p_min", "tau_normalized", "theta", "theta_plus", "reliable"],
            rows)


_COMMANDS = {
    "tree-exact": _cmd_tree_exact,
    "tree-bounds": _cmd_tree_bounds,
    "tree-sweep": _cmd_tree_sweep,
    "simulate": _cmd_simulate,
    "min-p-sim": _cmd_min_p_sim,
    "theta": _cmd_theta,
    "grid-analytic": _grid_rows,
    "grid-sweep": _grid_rows,
}


def run_experiment(spec: ExperimentSpec) -> int:
    """Execute a validated spec; returns the process exit status."""
    if spec.command not in _COMMANDS:
        print(f"error: unknown command {spec.command!r}", file=sys.stderr)
        return EXIT_PARAMETER
    started = time.perf_counter()
    try:
        header, rows = _COMMANDS[spec.command](spec.parameters)
        out_path = Path(spec.parameters["out"])
        _write_csv(out_path, header, rows)
    except (ParameterError, FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (BracketError, SubcriticalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ProbFwdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    _write_manifest(spec, out_path, time.perf_counter() - started)
    return EXIT_OK


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", required=True, help="output CSV path")
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED,
                     help=f"master seed (default {DEFAULT_SEED})")
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="worker cap for parallel engines")


def _add_topology_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--grid-m", type=int, help="grid side (odd)")
    sub.add_argument("--tree-height", type=int, help="tree height")
    sub.add_argument("--tree-arity", type=int, default=2, help="tree arity")
    sub.add_argument("--edge-list", help="edge list file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probfwd",
        description="Probabilistic forwarding of coded packets: analytics and simulation")
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("tree-exact", "tree-bounds", "tree-sweep"):
        sub = subs.add_parser(name)
        sub.add_argument("--k", type=int, required=True)
        sub.add_argument("--n", required=True, help="coded packets, scalar or start:stop:step")
        sub.add_argument("--delta", type=float, required=True)
        sub.add_argument("--height", type=int, required=True)
        _add_common(sub)

    sub = subs.add_parser("simulate")
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--n", required=True, help="coded packets (scalar)")
    sub.add_argument("--p", required=True, help="forwarding probability, scalar or range")
    sub.add_argument("--trials", type=int, default=1000)
    sub.add_argument("--per-trial", help="also write per-trial CSV here (single --p only)")
    _add_topology_flags(sub)
    _add_common(sub)

    sub = subs.add_parser("min-p-sim")
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--n", required=True, help="coded packets, scalar or range")
    sub.add_argument("--delta", type=float, required=True)
    sub.add_argument("--trials", type=int, default=1000)
    sub.add_argument("--tol", type=float, default=0.005)
    _add_topology_flags(sub)
    _add_common(sub)

    sub = subs.add_parser("theta")
    sub.add_argument("--m", type=int, default=501)
    sub.add_argument("--reps", type=int, default=100)
    sub.add_argument("--p", default="0.55:1.0:0.005",
                     help="probability grid, scalar or range")
    _add_common(sub)

    for name in ("grid-analytic", "grid-sweep"):
        sub = subs.add_parser(name)
        sub.add_argument("--k", type=int, required=True)
        sub.add_argument("--n", required=True, help="coded packets, scalar or range")
        sub.add_argument("--delta", type=float, required=True)
        sub.add_argument("--theta-table", required=True, help="theta curve CSV")
        _add_common(sub)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = vars(args).copy()
    command = params.pop("command")
    try:
        if "n" in params:
            params["n"] = parse_range(params["n"], integer=True)
        if "p" in params and params["p"] is not None:
            params["p"] = parse_range(params["p"])
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    return run_experiment(ExperimentSpec(command=command, parameters=params))


if __name__ == "__main__":
    sys.exit(main())
