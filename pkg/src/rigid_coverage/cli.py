"""Command-line interface.

Exit codes: 0 success, 1 property failure (e.g. framework not rigid),
2 input/parse error, 3 fatal simulation event.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import network as net
from . import planner as plannermod
from .coverage import MissionSpace
from .dynamics import RobotModel
from .errors import ConfigError, RigidCoverageError
from .rigidity import Configuration, Framework, Graph, is_ibr
from .scenario import config_from_json
from .simulate import Event, simulate, write_outputs

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_INPUT = 2
EXIT_FATAL = 3


def load_framework(path) -> Framework:
    raw = json.loads(Path(path).read_text())
    if raw.get("d", 2) != 2:
        raise ConfigError("only planar frameworks are supported")
    positions = np.asarray(raw["positions"], dtype=float)
    graph = Graph.make(len(positions), [tuple(e) for e in raw["edges"]])
    return Framework.make(graph, Configuration.make(positions))


def dump_framework(fw: Framework) -> dict:
    return {
        "d": 2,
        "positions": fw.positions.tolist(),
        "edges": [list(e) for e in fw.graph.edges],
    }


def _cmd_simulate(args) -> int:
    try:
        cfg = config_from_json(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.seed is not None:
        cfg.seed = args.seed
    if args.steps is not None:
        cfg.steps = args.steps
    if args.dump_cells:
        cfg.dump_cells = True
    if args.verbose_solver:
        cfg.verbose_solver = True
    result = simulate(cfg)
    paths = write_outputs(result, args.out)
    print(f"trace: {paths['trace']}")
    print(f"events: {paths['events']}")
    print(f"min SOC: {result.summary['min_soc']:.4f}")
    if result.summary["fatal"]:
        print(f"FATAL: {result.summary['fatal']}", file=sys.stderr)
        return EXIT_FATAL
    return EXIT_OK


def _cmd_check_rigidity(args) -> int:
    try:
        fw = load_framework(args.framework)
    except (OSError, json.JSONDecodeError, KeyError, ValueError,
            RigidCoverageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = is_ibr(fw)
    print(f"n={fw.n} m={fw.m} rank={report.rank} nullity={report.nullity} "
          f"rigid={report.rigid}")
    return EXIT_OK if report.rigid else EXIT_PROPERTY


def _cmd_build_network(args) -> int:
    try:
        raw = json.loads(Path(args.input).read_text())
        positions = np.asarray(raw["positions"], dtype=float)
        socs = np.asarray(raw["socs"], dtype=float)
        seed = int(raw.get("seed", 0))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        result = net.build_network(positions, socs, seed)
    except RigidCoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    out = Path(args.out)
    out.write_text(json.dumps(dump_framework(result.framework), indent=2) + "\n")
    record_path = Path(args.record) if args.record else out.with_suffix(".record.json")
    record_path.write_text(json.dumps(result.record.to_dict(), indent=2) + "\n")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"framework: {out}")
    print(f"record: {record_path}")
    return EXIT_OK


def _cmd_plan_return(args) -> int:
    try:
        raw = json.loads(Path(args.input).read_text())
        x0 = np.asarray(raw["state"], dtype=float)
        p_base = np.asarray(raw["p_base"], dtype=float)
        model_raw = raw["model"]
        model = RobotModel(
            kind=model_raw.get("kind", "double_integrator"),
            dt=float(model_raw["dt"]),
            pos_min=tuple(model_raw["pos_min"]),
            pos_max=tuple(model_raw["pos_max"]),
            v_max=float(model_raw["v_max"]),
            u_max=float(model_raw["u_max"]),
        )
        mu = float(raw.get("mu", 0.0))
        gamma = float(raw.get("gamma", 0.0))
        obstacles = np.asarray(raw.get("obstacles", []), dtype=float).reshape(-1, 2)
        r_safe = float(raw.get("r_safe", 0.0))
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        plan = plannermod.min_time_return(x0, p_base, model, obstacles,
                                          mu=mu, gamma=gamma, r_safe=r_safe)
    except RigidCoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    doc = {
        "tau_star": plan.tau_star,
        "energy_required": plan.energy_required,
        "states": plan.states.tolist(),
        "inputs": plan.inputs.tolist(),
    }
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".plan.json")
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"tau_star={plan.tau_star} s_star={plan.energy_required!r}")
    print(f"plan: {out}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plots import render_plots
    try:
        traces = _read_trace(args.trace)
        events = _read_events(args.events)
        space = None
        p_base = None
        if args.config:
            cfg = config_from_json(args.config)
            space = cfg.space
            p_base = cfg.p_base
    except (OSError, json.JSONDecodeError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    paths = render_plots(traces, events, args.out, space=space, p_base=p_base)
    for p in paths:
        print(p)
    return EXIT_OK


def _read_trace(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for raw in reader:
            row = [int(raw[0]), int(raw[1]), int(raw[2])]
            row += [float(v) for v in raw[3:9]]
            row += [None if v == "" else float(v) for v in raw[9:12]]
            rows.append(tuple(row))
    if not rows:
        raise ValueError("trace is empty")
    return rows


def _read_events(path):
    events = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        k = int(doc.pop("k"))
        kind = doc.pop("kind")
        events.append(Event(k, kind, doc))
    return events


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigid-coverage",
        description="Energy-constrained multi-robot coverage simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--dump-cells", action="store_true")
    p.add_argument("--verbose-solver", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check-rigidity", help="rank test for a framework file")
    p.add_argument("--framework", required=True)
    p.set_defaults(func=_cmd_check_rigidity)

    p = sub.add_parser("build-network", help="energy-aware rigid graph construction")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--record", default=None)
    p.set_defaults(func=_cmd_build_network)

    p = sub.add_parser("plan-return", help="minimum-time return plan")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plan_return)

    p = sub.add_parser("plot", help="render SVG plots from trace/events")
    p.add_argument("--trace", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
