"""Energy-aware hierarchical bearing-rigid network construction.

Robots are bucketed into four energy levels (level 1 = highest charge).
The graph grows from a level-1 seed edge; every later robot attaches by
vertex addition or edge splitting with level-sandwich anchor constraints,
so low-energy robots stay spread out at the periphery. Each growth step
is logged so departures can be undone later.

Level orientation note: level 1 means the fullest batteries here. The
departure machinery relies on levels 3-4 being the near-empty robots with
level-1/2 neighbors to inherit, which forces this orientation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoFeasibleAnchors, OutOfRange, RigidityFailure
from .rigidity import (
    Configuration,
    Framework,
    Graph,
    canonical_edge,
    is_ibr,
    minimal_edge_count,
)

LEVEL_THRESHOLDS = (0.75, 0.5, 0.25)  # closed below: boundary joins the fuller bracket
EDGE_SPLIT_PROBABILITY = 0.3
JITTER_RETRIES = 3
JITTER_SCALE = 1e-7

VERTEX_ADDITION = "vertex_addition"
EDGE_SPLITTING = "edge_splitting"


def energy_level(s: float) -> int:
    """Discretize SOC into hierarchy levels 1 (full) .. 4 (near empty)."""
    if not (0.0 <= s <= 1.0):
        raise OutOfRange(f"SOC {s} outside [0, 1]")
    for level, threshold in enumerate(LEVEL_THRESHOLDS, start=1):
        if s >= threshold:
            return level
    return 4


@dataclass(frozen=True)
class HennebergStep:
    """One growth step; `v` is the vertex id being attached.

    Vertex addition: edges (v, a) and (v, b) added for anchors = (a, b).
    Edge splitting: anchors = (a, b, c) with edge (a, b) removed and edges
    to all three anchors added. `relaxed` marks steps where the level
    constraints had to be relaxed (homogeneous fleet fallback).
    """

    kind: str
    v: int
    anchors: tuple[int, ...]
    removed: tuple[int, int] | None = None
    relaxed: bool = False

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "v": self.v, "anchors": list(self.anchors)}
        if self.removed is not None:
            out["removed"] = list(self.removed)
        if self.relaxed:
            out["relaxed"] = True
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "HennebergStep":
        return cls(
            kind=d["kind"],
            v=int(d["v"]),
            anchors=tuple(int(a) for a in d["anchors"]),
            removed=tuple(d["removed"]) if d.get("removed") is not None else None,
            relaxed=bool(d.get("relaxed", False)),
        )


@dataclass(frozen=True)
class HennebergRecord:
    """Ordered growth log; replaying it from the seed edge rebuilds the graph."""

    initial: tuple[int, int]
    steps: tuple[HennebergStep, ...] = ()

    def replay(self, n: int) -> Graph:
        edges = {canonical_edge(*self.initial)}
        for step in self.steps:
            if step.kind == VERTEX_ADDITION:
                a, b = step.anchors
                edges |= {canonical_edge(step.v, a), canonical_edge(step.v, b)}
            elif step.kind == EDGE_SPLITTING:
                a, b, c = step.anchors
                edges.discard(canonical_edge(a, b))
                edges |= {canonical_edge(step.v, x) for x in (a, b, c)}
            else:
                raise ValueError(f"unknown step kind {step.kind!r}")
        return Graph.make(n, edges)

    def appended(self, step: HennebergStep) -> "HennebergRecord":
        return replace(self, steps=self.steps + (step,))

    def to_dict(self) -> dict:
        return {"initial": list(self.initial), "steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, d: dict) -> "HennebergRecord":
        return cls(
            initial=(int(d["initial"][0]), int(d["initial"][1])),
            steps=tuple(HennebergStep.from_dict(s) for s in d["steps"]),
        )


@dataclass(frozen=True)
class AnchorChoice:
    lower: int  # eta(lower) <= new level
    upper: int  # eta(upper) >= new level
    relaxed: bool = False


@dataclass
class BuildResult:
    framework: Framework
    record: HennebergRecord
    warnings: list[str] = field(default_factory=list)


def choose_anchors(members, levels, positions, new_level: int, new_pos, rng=None) -> AnchorChoice:
    """Pick a sandwich anchor pair among current graph members.

    Feasible pairs (a, b) satisfy levels[a] <= new_level <= levels[b];
    selection is by smallest total distance to the new robot, then by
    smaller individual distance, then by lowest indices. Low-energy
    newcomers (levels 3-4) prefer a level-1/2 lower anchor when one is
    feasible, so every such robot keeps a high-energy neighbor to inherit
    from when it later departs. `rng` is accepted for signature stability
    but unused: tie-breaking is fully ordered.
    """
    new_pos = np.asarray(new_pos, dtype=float)
    dist = {v: float(np.linalg.norm(positions[v] - new_pos)) for v in members}
    best = None
    for a in members:
        if levels[a] > new_level:
            continue
        donor_rank = 1 if (new_level >= 3 and levels[a] >= 3) else 0
        for b in members:
            if b == a or levels[b] < new_level:
                continue
            key = (donor_rank, dist[a] + dist[b], dist[a], a, b)
            if best is None or key < best[0]:
                best = (key, a, b)
    if best is None:
        raise NoFeasibleAnchors(
            f"no pair sandwiches level {new_level} among levels "
            f"{sorted(levels[v] for v in members)}")
    return AnchorChoice(lower=best[1], upper=best[2])


def _relaxed_anchors(members, levels, positions, new_level, new_pos) -> AnchorChoice:
    """Fallback when the sandwich is unsatisfiable: keep whatever side is
    feasible, fill the other with the nearest remaining member."""
    new_pos = np.asarray(new_pos, dtype=float)
    ranked = sorted(members, key=lambda v: (float(np.linalg.norm(positions[v] - new_pos)), v))
    lower = next((v for v in ranked if levels[v] <= new_level), ranked[0])
    upper = next((v for v in ranked if levels[v] >= new_level and v != lower), None)
    if upper is None:
        upper = next(v for v in ranked if v != lower)
    return AnchorChoice(lower=lower, upper=upper, relaxed=True)


def _split_choice(members, levels, positions, edges, new_level, new_pos):
    """Edge-splitting anchors per the construction rules: split endpoint j
    with eta(j) <= new level and degree >= 2, third anchor l with
    eta(l) >= new level. Returns (j, k, l) or None if unsatisfiable."""
    new_pos = np.asarray(new_pos, dtype=float)
    adjacency: dict[int, list[int]] = {v: [] for v in members}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)

    def d(v):
        return float(np.linalg.norm(positions[v] - new_pos))

    js = sorted((v for v in members if levels[v] <= new_level and len(adjacency[v]) >= 2),
                key=lambda v: (1 if (new_level >= 3 and levels[v] >= 3) else 0, d(v), v))
    for j in js:
        for k in sorted(adjacency[j], key=lambda v: (d(v), v)):
            ls = sorted((v for v in members if levels[v] >= new_level and v not in (j, k)),
                        key=lambda v: (d(v), v))
            if ls:
                return j, k, ls[0]
    return None


def _verify_rigid(graph: Graph, positions: np.ndarray, rng, warnings, what: str) -> Framework:
    """IBR check with jittered-position retries for degenerate layouts."""
    pos = np.asarray(positions, dtype=float)
    scale = max(1.0, float(np.max(np.abs(pos))))
    for attempt in range(JITTER_RETRIES + 1):
        fw = Framework.make(graph, Configuration.make(pos))
        report = is_ibr(fw)
        if report.rigid:
            return fw
        if attempt < JITTER_RETRIES:
            pos = pos + rng.normal(scale=JITTER_SCALE * scale, size=pos.shape)
            warnings.append(
                f"{what}: rank {report.rank} < {minimal_edge_count(graph.n)}; "
                f"jitter retry {attempt + 1}")
    raise RigidityFailure(f"{what}: degenerate positions after {JITTER_RETRIES} jitter retries")


def build_network(positions, socs, seed: int) -> BuildResult:
    """Algorithm: grow an energy-aware minimally bearing-rigid framework.

    Robots are processed in descending SOC so the level-1 robots form the
    network core. Vertex addition is the default attachment; edge
    splitting is used with seeded probability 0.3 when its level
    constraints are satisfiable, to keep both growth paths exercised.
    """
    pos = np.asarray(positions, dtype=float)
    socs = np.asarray(socs, dtype=float)
    n = len(pos)
    if n < 2:
        raise ValueError("need at least two robots")
    if len(socs) != n:
        raise ValueError("positions and SOCs length mismatch")
    rng = np.random.default_rng(seed)
    warnings: list[str] = []
    levels = [energy_level(float(s)) for s in socs]

    order = sorted(range(n), key=lambda i: (-socs[i], i))
    level1 = [i for i in order if levels[i] == 1]
    if len(level1) >= 2:
        v1, v2 = level1[0], level1[1]
    else:
        v1, v2 = order[0], order[1]
        warnings.append(
            f"insufficient level-1 robots ({len(level1)}); seeded with highest-SOC pair "
            f"({v1},{v2})")

    members = [v1, v2]
    edges = {canonical_edge(v1, v2)}
    steps: list[HennebergStep] = []
    for v in order:
        if v in (v1, v2):
            continue
        split = None
        if rng.random() < EDGE_SPLIT_PROBABILITY:
            split = _split_choice(members, levels, pos, edges, levels[v], pos[v])
        if split is not None:
            j, k, l = split
            edges.discard(canonical_edge(j, k))
            edges |= {canonical_edge(v, j), canonical_edge(v, k), canonical_edge(v, l)}
            steps.append(HennebergStep(EDGE_SPLITTING, v, (j, k, l), removed=(j, k)))
        else:
            try:
                choice = choose_anchors(members, levels, pos, levels[v], pos[v], rng)
            except NoFeasibleAnchors:
                choice = _relaxed_anchors(members, levels, pos, levels[v], pos[v])
                warnings.append(
                    f"robot {v} (level {levels[v]}): sandwich unsatisfiable, relaxed "
                    f"anchors ({choice.lower},{choice.upper})")
            edges |= {canonical_edge(v, choice.lower), canonical_edge(v, choice.upper)}
            steps.append(HennebergStep(VERTEX_ADDITION, v, (choice.lower, choice.upper),
                                       relaxed=choice.relaxed))
        members.append(v)

    graph = Graph.make(n, edges)
    framework = _verify_rigid(graph, pos, rng, warnings, "build_network")
    record = HennebergRecord(initial=(v1, v2), steps=tuple(steps))
    assert record.replay(n).edges == graph.edges
    return BuildResult(framework=framework, record=record, warnings=warnings)


def insert_robot(fw: Framework, rec: HennebergRecord, pos, soc: float, socs, rng) -> BuildResult:
    """Attach one robot (vertex id fw.n) to an existing rigid framework.

    `socs` are the SOCs of the current members in vertex order; the same
    sandwich rule as construction applies. Used when a recharged robot
    rejoins the network.
    """
    if fw.n < 2:
        raise ValueError("insert requires an existing framework with >= 2 vertices")
    warnings: list[str] = []
    levels = [energy_level(float(s)) for s in socs]
    if len(levels) != fw.n:
        raise ValueError("socs must cover current members")
    new_level = energy_level(float(soc))
    members = list(range(fw.n))
    positions = fw.positions
    try:
        choice = choose_anchors(members, levels, positions, new_level, pos, rng)
    except NoFeasibleAnchors:
        choice = _relaxed_anchors(members, levels, positions, new_level, pos)
        warnings.append(
            f"rejoin at level {new_level}: sandwich unsatisfiable, relaxed anchors "
            f"({choice.lower},{choice.upper})")
    v = fw.n
    graph = Graph.make(v + 1, list(fw.graph.edges)
                       + [(v, choice.lower), (v, choice.upper)])
    new_pos = np.vstack([positions, np.asarray(pos, float).reshape(1, 2)])
    framework = _verify_rigid(graph, new_pos, rng, warnings, "insert_robot")
    record = rec.appended(HennebergStep(VERTEX_ADDITION, v, (choice.lower, choice.upper),
                                        relaxed=choice.relaxed))
    return BuildResult(framework=framework, record=record, warnings=warnings)
