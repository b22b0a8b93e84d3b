"""The five figure recipes and their rendering.

Each recipe maps CSV files produced by the probfwd CLI onto one plot; the
renderer never computes anything beyond unit-changing display scalings
(an error-bar width divided by p, a reliability flag to a marker). Columns
are validated up front and an empty or malformed CSV aborts before any
output file is written.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["FigureError", "FigureRecipe", "RenderResult", "render", "FIGURE_IDS"]


class FigureError(Exception):
    """Missing file, missing column, or empty input."""


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    inputs: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class RenderResult:
    output: Path
    # series label -> number of plotted points
    point_counts: dict[str, int] = field(default_factory=dict)


def _read_csv(path: str, required: tuple[str, ...]) -> list[dict[str, str]]:
    p = Path(path)
    if not p.exists():
        raise FigureError(f"input CSV not found: {path}")
    with p.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise FigureError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return rows


def _floats(rows: list[dict[str, str]], column: str) -> list[float]:
    try:
        return [float(r[column]) for r in rows]
    except ValueError as exc:
        raise FigureError(f"column {column!r} has a non-numeric value: {exc}")


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(7, 4.5), dpi=120)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _render_tree_prob(inputs):
    rows = _read_csv(inputs[0], ("n", "p_min", "lower", "upper"))
    n = _floats(rows, "n")
    fig, ax = _new_axes("coded packets n", "forwarding probability",
                        "Minimum probability for a near-broadcast (tree)")
    counts = {}
    for column, label, style in (("lower", "lower bound", "--"),
                                 ("p_min", "exact", "-"),
                                 ("upper", "upper bound", "--")):
        values = _floats(rows, column)
        ax.plot(n, values, style, marker=".", label=label)
        counts[label] = len(values)
    ax.legend()
    return fig, counts


def _render_tree_trans(inputs):
    rows = _read_csv(inputs[0], ("n", "tau"))
    n = _floats(rows, "n")
    tau = _floats(rows, "tau")
    fig, ax = _new_axes("coded packets n", "expected transmissions",
                        "Expected transmissions at the minimum probability (tree)")
    ax.plot(n, tau, "-", marker=".", label="expected transmissions")
    ax.legend()
    return fig, {"expected transmissions": len(tau)}


def _render_theta_curves(inputs):
    rows = _read_csv(inputs[0], ("p", "theta", "theta_plus", "stderr"))
    p = _floats(rows, "p")
    theta = _floats(rows, "theta")
    theta_plus = _floats(rows, "theta_plus")
    err = _floats(rows, "stderr")
    fig, ax = _new_axes("site probability p", "largest-cluster fraction",
                        "Open and extended cluster curves")
    ax.errorbar(p, theta, yerr=err, fmt="o-", markersize=3, capsize=2,
                label="open cluster")
    ax.errorbar(p, theta_plus, yerr=[e / x for e, x in zip(err, p)],
                fmt="s--", markersize=3, capsize=2, label="extended cluster")
    ax.legend()
    return fig, {"open cluster": len(theta), "extended cluster": len(theta_plus)}


def _render_grid_prob_compare(inputs):
    if len(inputs) < 2:
        raise FigureError("grid_prob_compare needs two inputs: analytic CSV, simulated CSV")
    analytic = _read_csv(inputs[0], ("n", "p_min"))
    simulated = _read_csv(inputs[1], ("n", "p_min"))
    fig, ax = _new_axes("coded packets n", "forwarding probability",
                        "Minimum probability: percolation analysis vs simulation")
    ax.plot(_floats(analytic, "n"), _floats(analytic, "p_min"), "-", marker=".",
            label="analytic")
    ax.plot(_floats(simulated, "n"), _floats(simulated, "p_min"), "x--",
            label="simulated")
    ax.legend()
    return fig, {"analytic": len(analytic), "simulated": len(simulated)}


def _render_grid_trans_compare(inputs):
    if len(inputs) < 2:
        raise FigureError("grid_trans_compare needs two inputs: analytic CSV, simulated CSV")
    analytic = _read_csv(inputs[0], ("n", "tau_normalized"))
    simulated = _read_csv(inputs[1], ("n", "normalized_transmissions"))
    fig, ax = _new_axes("coded packets n", "transmissions per node",
                        "Normalized transmissions: percolation analysis vs simulation")
    ax.plot(_floats(analytic, "n"), _floats(analytic, "tau_normalized"), "-",
            marker=".", label="analytic")
    ax.plot(_floats(simulated, "n"), _floats(simulated, "normalized_transmissions"),
            "x--", label="simulated")
    ax.legend()
    return fig, {"analytic": len(analytic), "simulated": len(simulated)}


_RENDERERS = {
    "tree_prob": _render_tree_prob,
    "tree_trans": _render_tree_trans,
    "theta_curves": _render_theta_curves,
    "grid_prob_compare": _render_grid_prob_compare,
    "grid_trans_compare": _render_grid_trans_compare,
}

FIGURE_IDS = tuple(_RENDERERS)


def render(recipe: FigureRecipe) -> RenderResult:
    """Render one recipe to its output path.

    Raises FigureError (and writes nothing) on unknown figure id, missing
    file, missing column, or empty CSV.
    """
    if recipe.figure_id not in _RENDERERS:
        raise FigureError(
            f"unknown figure id {recipe.figure_id!r}; known: {', '.join(FIGURE_IDS)}")
    if not recipe.inputs:
        raise FigureError("recipe has no input CSVs")
    fig, counts = _RENDERERS[recipe.figure_id](tuple(recipe.inputs))
    out = Path(recipe.output)
    try:
        fig.savefig(out)
    finally:
        plt.close(fig)
    return RenderResult(output=out, point_counts=counts)
