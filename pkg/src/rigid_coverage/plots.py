"""Static SVG plot emission from trace/event streams."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import coverage as cov

LEVEL_BOUNDS = (0.25, 0.5, 0.75)
LEVEL_COLORS = ("#d73027", "#fdae61", "#a6d96a", "#1a9850")  # level 4 .. level 1


def _by_robot(traces):
    rows = defaultdict(list)
    for row in traces:
        rows[int(row[1])].append(row)
    return {robot: sorted(r, key=lambda t: t[0]) for robot, r in sorted(rows.items())}


def render_plots(traces, events, outdir, space=None, p_base=None) -> list[Path]:
    """Write trajectory, SOC and coverage-cost SVGs; returns the paths."""
    if not traces:
        raise ValueError("empty trace")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    per_robot = _by_robot(traces)
    departures = [e for e in events if e.kind == "mode_transition"
                  and e.payload.get("to") == 2]
    paths = []

    # trajectories with final cells
    fig, ax = plt.subplots(figsize=(6, 6))
    if space is not None:
        poly = np.vstack([space.vertices, space.vertices[:1]])
        ax.plot(poly[:, 0], poly[:, 1], "k-", lw=1.2)
        last_k = max(r[0] for r in traces)
        final_pos = [(robot, rows[-1]) for robot, rows in per_robot.items()
                     if rows[-1][0] == last_k and rows[-1][2] == 1]
        if final_pos:
            pts = np.array([[r[3], r[4]] for _, r in final_pos])
            for cell in cov.voronoi_partition(pts, space):
                if len(cell.polygon) >= 3:
                    ring = np.vstack([cell.polygon, cell.polygon[:1]])
                    ax.plot(ring[:, 0], ring[:, 1], color="0.7", lw=0.8)
    for robot, rows in per_robot.items():
        xs = [r[3] for r in rows]
        ys = [r[4] for r in rows]
        ax.plot(xs, ys, lw=0.9, label=f"robot {robot}")
        ax.plot(xs[-1], ys[-1], "o", ms=4)
    if p_base is not None:
        ax.plot(p_base[0], p_base[1], "ks", ms=8, label="base")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("trajectories")
    if len(per_robot) <= 12:
        ax.legend(fontsize=7, loc="upper right")
    path = outdir / "trajectories.svg"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    # SOC vs time with level bands and departure markers
    fig, ax = plt.subplots(figsize=(7, 4))
    bounds = (0.0,) + LEVEL_BOUNDS + (1.0,)
    for b0, b1, color in zip(bounds[:-1], bounds[1:], LEVEL_COLORS):
        ax.axhspan(b0, b1, color=color, alpha=0.12)
    for robot, rows in per_robot.items():
        ax.plot([r[0] for r in rows], [r[7] for r in rows], lw=1.0,
                label=f"robot {robot}")
    for e in departures:
        ax.axvline(e.k, color="0.4", lw=0.6, ls="--")
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("SOC")
    ax.set_title("state of charge")
    if len(per_robot) <= 12:
        ax.legend(fontsize=7, loc="upper right")
    path = outdir / "soc.svg"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    # coverage cost vs time (sum of per-cell costs of coverage robots)
    cost_by_k = defaultdict(float)
    seen_k = set()
    for row in traces:
        seen_k.add(row[0])
        if row[2] == 1 and row[11] is not None and row[11] != "":
            cost_by_k[row[0]] += float(row[11])
    ks = sorted(seen_k)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ks, [cost_by_k.get(k, 0.0) for k in ks], lw=1.2)
    for e in departures:
        ax.axvline(e.k, color="0.4", lw=0.6, ls="--")
    ax.set_xlabel("step")
    ax.set_ylabel("coverage cost")
    ax.set_title("locational coverage cost")
    path = outdir / "coverage_cost.svg"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)
    return paths
