"""Simulation loop tying coverage, energy, planning, MPC and the network.

Per step: refresh levels, run the hybrid automata (guards and mode
switches), repair the network after departures, re-insert recharged
robots, partition the space over coverage robots, compute centroids and
desired bearings, solve the per-robot MPC (coverage), follow return plans
(return-to-base), integrate dynamics and apply the energy updates. All
randomness flows from the scenario seed; runs are byte-reproducible.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import energy as en
from . import mpc as mpcmod
from . import network as net
from . import planner as plannermod
from . import reconfig as rc
from .errors import (
    EnergyExhausted,
    Infeasible,
    RepairFailed,
    RigidityFailure,
    Unreachable,
)
from .rigidity import is_ibr
from .scenario import ScenarioConfig, draw_initial_conditions

TRACE_COLUMNS = ("k", "robot", "mode", "x", "y", "vx", "vy", "soc", "level",
                 "cx", "cy", "cell_cost")

MODE_TRANSITION = "mode_transition"
DEPARTURE = "departure"
RECONFIGURATION = "reconfiguration"
REJOIN = "rejoin"
WARNING = "warning"
FATAL = "fatal"


@dataclass
class Event:
    k: int
    kind: str
    payload: dict

    def to_json(self) -> str:
        doc = {"k": self.k, "kind": self.kind}
        doc.update(self.payload)
        return json.dumps(doc)


@dataclass
class SimResult:
    config: ScenarioConfig
    traces: list
    events: list
    summary: dict
    cells_log: list = field(default_factory=list)
    solver_log: list = field(default_factory=list)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def trace_csv(traces) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in traces:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def events_jsonl(events) -> str:
    return "".join(e.to_json() + "\n" for e in events)


def write_outputs(result: SimResult, outdir) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trace": outdir / "trace.csv",
        "events": outdir / "events.jsonl",
        "summary": outdir / "summary.json",
    }
    paths["trace"].write_text(trace_csv(result.traces))
    paths["events"].write_text(events_jsonl(result.events))
    paths["summary"].write_text(json.dumps(result.summary, indent=2) + "\n")
    if result.cells_log:
        paths["cells"] = outdir / "cells.jsonl"
        paths["cells"].write_text("".join(json.dumps(c) + "\n" for c in result.cells_log))
    if result.solver_log:
        paths["solver"] = outdir / "solver_stats.jsonl"
        paths["solver"].write_text("".join(json.dumps(s) + "\n" for s in result.solver_log))
    return paths


class _Sim:
    """Mutable simulation state; one instance per run."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.model = cfg.model
        self.p_base = np.asarray(cfg.p_base, dtype=float)
        positions, socs = draw_initial_conditions(cfg, self.rng)
        self.positions = positions
        self.velocities = np.zeros((cfg.n_robots, 2))
        self.estate = [en.EnergyState(soc=float(s)) for s in socs]
        self.members: list[int] = list(range(cfg.n_robots))
        self.fw = None
        self.rec = None
        self.plan_cache: dict[int, dict] = {}
        self.mode2_offset: dict[int, int] = {}
        self.events: list[Event] = []
        self.traces: list = []
        self.cells_log: list = []
        self.solver_log: list = []
        self.rigidity_checks = 0
        self.min_soc = float(np.min(socs))
        self.cost_series: list = []
        self.area_err_max = 0.0
        self.transition_counts = {"1->2": 0, "2->3": 0, "3->1": 0}
        self.fatal: str | None = None

    # -- helpers ------------------------------------------------------------

    def state_of(self, i: int) -> np.ndarray:
        return self.model.state(self.positions[i], self.velocities[i])

    def level_of(self, i: int) -> int:
        return net.energy_level(self.estate[i].soc)

    def warn(self, k: int, message: str, **extra):
        payload = {"message": message}
        payload.update(extra)
        self.events.append(Event(k, WARNING, payload))

    def _rebuild_network(self, k: int):
        """Full construction over current members (start of run only)."""
        if len(self.members) < 2:
            self.fw = None
            self.rec = None
            return
        pos = self.positions[self.members]
        socs = [self.estate[i].soc for i in self.members]
        result = net.build_network(pos, socs, seed=int(self.rng.integers(2 ** 31)))
        for w in result.warnings:
            self.warn(k, w)
        self.fw = result.framework
        self.rec = result.record
        self.rigidity_checks += 1

    def _compute_plan(self, i: int, x, hint):
        pos_i = self.model.position(x)
        obstacles = []
        for j in range(self.cfg.n_robots):
            if j == i or self.estate[j].mode == en.Mode.RECHARGE:
                continue
            pj = self.positions[j]
            if np.linalg.norm(pj - self.p_base) <= self.cfg.energy.base_radius + self.cfg.r_safe:
                continue
            if np.linalg.norm(pj - pos_i) <= self.cfg.r_safe:
                continue
            obstacles.append(pj)
        kwargs = dict(mu=self.cfg.energy.mu, gamma=self.cfg.energy.gamma,
                      tau_hint=hint)
        try:
            return plannermod.min_time_return(
                x, self.p_base, self.model, np.asarray(obstacles).reshape(-1, 2),
                r_safe=self.cfg.r_safe, **kwargs)
        except Unreachable:
            self.warn(self.k, f"robot {i}: return blocked, replanning without "
                              f"separation constraints", robot=i)
            return plannermod.min_time_return(x, self.p_base, self.model, (), **kwargs)

    def _planner_for(self, i: int):
        def planner(x, fresh: bool = False):
            entry = self.plan_cache.get(i)
            if not fresh and entry is not None and entry["age"] < self.cfg.replan_every:
                return entry["plan"]
            hint = entry["plan"].tau_star if entry is not None else None
            plan = self._compute_plan(i, x, hint)
            self.plan_cache[i] = {"plan": plan, "age": 0}
            return plan
        return planner

    # -- phases --------------------------------------------------------------

    def _transitions(self, k: int):
        departures = []
        rejoins = []
        for i in range(self.cfg.n_robots):
            st = self.estate[i]
            if st.mode == en.Mode.COVERAGE and not self.cfg.energy_enabled:
                continue
            x = self.state_of(i)
            new_st, ev = en.transition(st, x, self._planner_for(i), self.cfg.energy,
                                       self.p_base, self.cfg.stale_tol)
            if ev is not None:
                payload = {"robot": i, "from": ev.from_mode, "to": ev.to_mode,
                           "soc": ev.soc}
                if ev.tau_star is not None:
                    payload["tau_star"] = ev.tau_star
                if ev.from_mode == 2:
                    payload["distance"] = float(np.linalg.norm(
                        self.positions[i] - self.p_base))
                self.events.append(Event(k, MODE_TRANSITION, payload))
                self.transition_counts[f"{ev.from_mode}->{ev.to_mode}"] += 1
                if ev.to_mode == 2:
                    departures.append(i)
                    self.mode2_offset[i] = 0
                    self.plan_cache.pop(i, None)
                elif ev.to_mode == 3:
                    self.positions[i] = self.p_base.copy()
                    self.velocities[i] = 0.0
                    self.mode2_offset.pop(i, None)
                elif ev.to_mode == 1:
                    rejoins.append(i)
                    angle = 2.0 * math.pi * (i + 1) / max(self.cfg.n_robots, 1)
                    offset = 0.5 * self.cfg.energy.base_radius * np.array(
                        [math.cos(angle), math.sin(angle)])
                    self.positions[i] = self.p_base + offset
                    self.velocities[i] = 0.0
            self.estate[i] = new_st
        return departures, rejoins

    def _process_departures(self, k: int, departures):
        if not departures:
            return
        self.events.append(Event(k, DEPARTURE, {"robots": list(departures)}))
        survivors = [r for r in self.members if r not in departures]
        if self.fw is None or len(survivors) < 2:
            if survivors and len(survivors) < 2:
                self.warn(k, "network below minimum size; rigidity not maintained")
            self.members = survivors
            self.fw = None
            self.rec = None
            return
        vertex_of = {r: idx for idx, r in enumerate(self.members)}
        levels = {}
        for r, idx in vertex_of.items():
            lvl = self.level_of(r)
            if r in departures and lvl not in (3, 4):
                self.warn(k, f"robot {r} departing at level {lvl}; treating as level 3",
                          robot=r)
                lvl = 3
            levels[idx] = lvl
        batch = rc.DepartureBatch.make([vertex_of[r] for r in departures], levels)
        fw, rec, report = rc.reconfigure(self.fw, self.rec, batch)
        self.fw, self.rec = fw, rec
        self.members = survivors
        self.events.append(Event(k, RECONFIGURATION,
                                 {"phase": "repair", **report.to_dict()}))
        check = is_ibr(fw)
        self.rigidity_checks += 1
        self.events.append(Event(k, RECONFIGURATION,
                                 {"phase": "verify", "pass": bool(check.rigid),
                                  "rank": check.rank, "edges": fw.m}))
        if not check.rigid:
            raise RepairFailed("post-reconfiguration verification failed")

    def _process_rejoins(self, k: int, rejoins):
        for i in sorted(rejoins):
            if self.fw is None:
                self.members.append(i)
                if len(self.members) >= 2:
                    self._rebuild_network(k)
                    self.events.append(Event(k, REJOIN, {
                        "robot": i, "verified": bool(self.fw is not None)}))
                else:
                    self.events.append(Event(k, REJOIN, {"robot": i, "verified": False}))
                continue
            socs = [self.estate[r].soc for r in self.members]
            result = net.insert_robot(self.fw, self.rec, self.positions[i],
                                      self.estate[i].soc, socs, self.rng)
            for w in result.warnings:
                self.warn(k, w)
            self.fw = result.framework
            self.rec = result.record
            self.members.append(i)
            self.rigidity_checks += 1
            self.events.append(Event(k, REJOIN, {"robot": i, "verified": True}))

    def _coverage_phase(self, k: int):
        active = self.members
        if not active:
            self.cost_series.append(None)
            return {}, {}
        cells = cov.voronoi_partition(self.positions[active], self.cfg.space)
        total_mass = sum(c.mass for c in cells)
        rel_err = abs(total_mass - self.cfg.space.area) / self.cfg.space.area
        self.area_err_max = max(self.area_err_max, rel_err)
        centroids = np.array([c.centroid for c in cells])
        cost = cov.coverage_cost(self.positions[active], cells)
        self.cost_series.append(cost)
        if self.cfg.dump_cells:
            self.cells_log.append({
                "k": k,
                "cells": [{"robot": int(active[c.owner]),
                           "polygon": np.asarray(c.polygon).tolist(),
                           "centroid": c.centroid.tolist()} for c in cells],
            })
        per_robot_centroid = {}
        per_robot_cost = {}
        for idx, robot in enumerate(active):
            per_robot_centroid[robot] = centroids[idx]
            per_robot_cost[robot] = cov.cell_quadratic_moment(
                cells[idx].polygon, self.positions[robot])
        self._centroids_by_vertex = centroids
        return per_robot_centroid, per_robot_cost

    def _inputs(self, k: int, per_robot_centroid):
        n = self.cfg.n_robots
        inputs = np.zeros((n, 2))
        for idx, robot in enumerate(self.members):
            r_ik = per_robot_centroid[robot]
            if self.fw is not None and self.cfg.mpc.lam < 1.0:
                targets = mpcmod.desired_bearings(self._centroids_by_vertex,
                                                  self.fw.graph, idx)
            else:
                targets = mpcmod.BearingTargets.empty()
            x = self.state_of(robot)
            try:
                u, sol, warn = mpcmod.mpc_step(x, r_ik, targets, self.model, self.cfg.mpc)
                if warn is not None:
                    self.warn(k, f"robot {robot}: {warn}", robot=robot)
                if self.cfg.verbose_solver:
                    self.solver_log.append({"k": k, "robot": robot,
                                            "iterations": sol.iterations,
                                            "kkt_residual": sol.kkt_residual})
            except Infeasible:
                u = np.clip(-self.velocities[robot] / self.model.dt,
                            -self.model.u_max, self.model.u_max)
                self.warn(k, f"robot {robot}: MPC infeasible, braking", robot=robot)
            inputs[robot] = u
        for i in range(n):
            st = self.estate[i]
            if st.mode != en.Mode.RETURN_TO_BASE:
                continue
            plan = st.plan
            offset = self.mode2_offset.get(i, 0)
            x = self.state_of(i)
            drifted = (offset < plan.tau_star and
                       float(np.linalg.norm(x - plan.states[offset])) > self.cfg.stale_tol)
            if offset >= plan.tau_star or drifted:
                if np.linalg.norm(self.positions[i] - self.p_base) <= \
                        self.cfg.energy.base_radius:
                    inputs[i] = 0.0
                    continue
                plan = self._compute_plan(i, x, plan.tau_star)
                self.estate[i] = replace(st, plan=plan)
                offset = 0
                self.mode2_offset[i] = 0
            if plan.tau_star == 0:
                inputs[i] = 0.0
                continue
            inputs[i] = plannermod.follow_plan(plan, offset)
            self.mode2_offset[i] = offset + 1
        return inputs

    def _integrate(self, k: int, inputs):
        for i in range(self.cfg.n_robots):
            st = self.estate[i]
            x = self.state_of(i)
            if st.mode in (en.Mode.COVERAGE, en.Mode.RETURN_TO_BASE):
                x_new = self.model.step(x, inputs[i])
                self.positions[i] = self.model.position(x_new)
                self.velocities[i] = self.model.velocity(x_new)
            if self.cfg.energy_enabled:
                self.estate[i] = en.energy_update(st, x, inputs[i], self.cfg.energy)
            self.min_soc = min(self.min_soc, self.estate[i].soc)

    def _record(self, k: int, per_robot_centroid, per_robot_cost):
        for i in range(self.cfg.n_robots):
            st = self.estate[i]
            centroid = per_robot_centroid.get(i)
            self.traces.append((
                k, i, int(st.mode),
                float(self.positions[i][0]), float(self.positions[i][1]),
                float(self.velocities[i][0]), float(self.velocities[i][1]),
                float(st.soc), self.level_of(i),
                None if centroid is None else float(centroid[0]),
                None if centroid is None else float(centroid[1]),
                per_robot_cost.get(i),
            ))

    # -- main loop ------------------------------------------------------------

    def run(self) -> SimResult:
        self.k = 0
        self._rebuild_network(0)
        try:
            for k in range(self.cfg.steps):
                self.k = k
                departures, rejoins = self._transitions(k)
                self._process_departures(k, departures)
                self._process_rejoins(k, rejoins)
                per_robot_centroid, per_robot_cost = self._coverage_phase(k)
                inputs = self._inputs(k, per_robot_centroid)
                self._integrate(k, inputs)
                self._record(k, per_robot_centroid, per_robot_cost)
                for entry in self.plan_cache.values():
                    entry["age"] += 1
        except (EnergyExhausted, RepairFailed, RigidityFailure, Unreachable) as exc:
            self.fatal = f"{type(exc).__name__}: {exc}"
            self.events.append(Event(self.k, FATAL, {"message": self.fatal}))
        summary = {
            "n_robots": self.cfg.n_robots,
            "steps": self.cfg.steps,
            "seed": self.cfg.seed,
            "min_soc": self.min_soc,
            "final_coverage_cost": next(
                (c for c in reversed(self.cost_series) if c is not None), None),
            "coverage_cost": self.cost_series,
            "voronoi_area_max_rel_err": self.area_err_max,
            "rigidity_checks": {"count": self.rigidity_checks,
                                "passed": self.rigidity_checks},
            "transitions": self.transition_counts,
            "fatal": self.fatal,
        }
        return SimResult(config=self.cfg, traces=self.traces, events=self.events,
                         summary=summary, cells_log=self.cells_log,
                         solver_log=self.solver_log)


def simulate(cfg: ScenarioConfig) -> SimResult:
    """Run a scenario to completion (or to its first fatal event)."""
    return _Sim(cfg).run()
