"""Rigidity recovery when robots depart to recharge.

Level-4 departures are undone as reverse Henneberg operations (degree-2
removal, or degree-3 removal plus one replacement edge). Level-3
departures use inheritance: the departing robot's low-energy neighbors
each gain an edge to one of its level-1/2 neighbors, screened by the
edge-contraction rule (an edge with two or more common neighbors is not
contractible). Every path ends with a mandatory rigidity verification; a
verified greedy fallback covers what the local moves cannot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    IrreversibleDegree,
    MissingEdge,
    RepairFailed,
    RepairImpossible,
)
from .network import (
    EDGE_SPLITTING,
    VERTEX_ADDITION,
    HennebergRecord,
    HennebergStep,
)
from .rigidity import (
    Configuration,
    Framework,
    Graph,
    bearing_rigidity_matrix_from,
    canonical_edge,
    is_ibr,
    is_rigid_subset,
    minimal_edge_count,
    numerical_rank,
)

Edge = tuple[int, int]


@dataclass(frozen=True)
class DepartureBatch:
    """Robots leaving this step plus the level table at departure time.

    `levels` must cover every vertex (survivors included); the repair
    rules need the neighbors' levels, not just the departing robots'.
    """

    departing: tuple[int, ...]
    levels: dict[int, int]

    @classmethod
    def make(cls, departing, levels) -> "DepartureBatch":
        dep = tuple(sorted(set(departing)))
        if not dep:
            raise ValueError("empty departure batch")
        for v in dep:
            if levels.get(v) not in (3, 4):
                raise ValueError(f"departing robot {v} at level {levels.get(v)}, expected 3 or 4")
        return cls(dep, dict(levels))


@dataclass
class RepairReport:
    removed_edges: tuple[Edge, ...] = ()
    added_edges: tuple[Edge, ...] = ()
    used_fallback: bool = False
    locality: int = 0
    departed: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "removed_edges": [list(e) for e in self.removed_edges],
            "added_edges": [list(e) for e in self.added_edges],
            "used_fallback": self.used_fallback,
            "locality": self.locality,
            "departed": list(self.departed),
        }


def common_neighbors(g: Graph, v: int, w: int) -> tuple[int, ...]:
    """Vertices adjacent to both v and w."""
    if v == w:
        raise ValueError("common neighbors need two distinct vertices")
    nv, nw = set(g.neighbors(v)), set(g.neighbors(w))
    return tuple(sorted(nv & nw))


def is_noncontractible(g: Graph, e: Edge) -> bool:
    """Edge-contraction screen: two or more common neighbors means the
    contracted graph loses edges and cannot stay minimally rigid."""
    i, j = canonical_edge(*e)
    if (i, j) not in set(g.edges):
        raise MissingEdge(f"edge ({i},{j}) not in graph")
    return len(common_neighbors(g, i, j)) >= 2


def contract_edge(g: Graph, e: Edge) -> Graph:
    """Merge the endpoints of e; the merged vertex keeps the lower index,
    duplicate edges collapse, and higher indices shift down by one."""
    i, j = canonical_edge(*e)
    if (i, j) not in set(g.edges):
        raise MissingEdge(f"edge ({i},{j}) not in graph")
    keep, drop = i, j

    def remap(v: int) -> int:
        if v == drop:
            v = keep
        return v - 1 if v > drop else v

    edges = set()
    for a, b in g.edges:
        ra, rb = remap(a), remap(b)
        if ra != rb:
            edges.add(canonical_edge(ra, rb))
    return Graph.make(g.n - 1, edges)


def hop_distances(g: Graph, source: int) -> dict[int, int]:
    """BFS hop distance from source; unreachable vertices are absent."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for v in frontier:
            for u in g.neighbors(v):
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


def _drop_vertex(fw: Framework, v: int, extra_edges=()) -> Framework:
    """Remove vertex v (and its edges), apply extra edges, reindex."""
    def remap(u: int) -> int:
        return u - 1 if u > v else u

    edges = [(remap(a), remap(b)) for a, b in fw.graph.edges if v not in (a, b)]
    edges += [(remap(a), remap(b)) for a, b in extra_edges]
    positions = np.delete(fw.positions, v, axis=0)
    return Framework.make(Graph.make(fw.n - 1, edges), Configuration.make(positions))


def _incident(g: Graph, v: int) -> tuple[Edge, ...]:
    return tuple(e for e in g.edges if v in e)


def remove_level4(fw: Framework, rec: HennebergRecord | None, v: int):
    """Reverse-growth removal for a near-empty robot.

    Degree 2 undoes a vertex addition. Degree 3 undoes an edge splitting:
    the three incident edges go and one edge between a non-adjacent pair
    of the former neighbors is added, chosen as the first pair (in
    lexicographic order) whose result passes the rigidity test. When the
    growth log ends exactly at v, its recorded reverse is applied directly.
    """
    g = fw.graph
    removed = _incident(g, v)
    degree = len(removed)
    nbrs = g.neighbors(v)

    if rec is not None and rec.steps and rec.steps[-1].v == v:
        step = rec.steps[-1]
        expected = {canonical_edge(v, a) for a in step.anchors}
        if set(removed) == expected:
            extra = [step.removed] if step.kind == EDGE_SPLITTING else []
            out = _drop_vertex(fw, v, extra)
            if is_ibr(out).rigid:
                report = RepairReport(removed_edges=removed,
                                      added_edges=tuple(extra),
                                      locality=1 if extra else 0,
                                      departed=(v,))
                return out, report
            raise RepairFailed(f"reverse of recorded step at vertex {v} not rigid")

    if degree == 2:
        out = _drop_vertex(fw, v)
        if not is_ibr(out).rigid:
            raise RepairFailed(f"degree-2 removal of vertex {v} not rigid")
        return out, RepairReport(removed_edges=removed, departed=(v,))

    if degree == 3:
        existing = set(g.edges)
        for a, b in combinations(sorted(nbrs), 2):
            if canonical_edge(a, b) in existing:
                continue
            out = _drop_vertex(fw, v, [(a, b)])
            if is_ibr(out).rigid:
                report = RepairReport(removed_edges=removed,
                                      added_edges=(canonical_edge(a, b),),
                                      locality=1, departed=(v,))
                return out, report
        raise RepairFailed(f"no replacement edge restores rigidity around vertex {v}")

    raise IrreversibleDegree(f"vertex {v} has degree {degree} > 3")


def remove_level3(fw: Framework, v: int, levels: dict[int, int]):
    """Inheritance-based removal for a level-3 robot.

    The departing robot's level-3/4 neighbors each inherit an edge to one
    of its level-1 neighbors (level-2 if no level-1 donor passes the
    contractibility screen); further local edges are added rank-greedily
    until the survivor graph is minimally rigid again. All additions stay
    within 2 hops of the departed vertex.
    """
    g = fw.graph
    n = g.n
    nbrs = g.neighbors(v)
    donors1 = [u for u in nbrs if levels.get(u) == 1]
    donors2 = [u for u in nbrs if levels.get(u) == 2]
    if not donors1 and not donors2:
        raise RepairFailed(f"vertex {v} has no level-1/2 neighbor to inherit from")

    def screened(cands):
        return [w for w in cands if not is_noncontractible(g, (v, w))]

    pool = screened(donors1) or screened(donors2)
    if pool:
        donor = pool[0]
    else:
        # all donor edges fail the screen; take the least-shared donor and
        # let the rank checks plus final verification arbitrate
        donor = min(donors1 + donors2,
                    key=lambda w: (len(common_neighbors(g, v, w)), w))

    orphans = [u for u in nbrs if levels.get(u) in (3, 4) and u != donor]
    hops = hop_distances(g, v)
    two_hop = sorted(u for u, d in hops.items() if 0 < d <= 2)

    survivors = [u for u in range(n) if u != v]
    base_edges = [e for e in g.edges if v not in e]
    target = minimal_edge_count(n - 1)

    candidates: list[Edge] = []
    seen = set(base_edges)

    def offer(a, b):
        if a == b:
            return
        e = canonical_edge(a, b)
        if e not in seen:
            seen.add(e)
            candidates.append(e)

    for u in orphans:
        offer(u, donor)
    for w in sorted(donors1 + donors2):
        for u in sorted(nbrs):
            offer(u, w)
    for a, b in combinations(sorted(nbrs), 2):
        offer(a, b)
    for a, b in combinations(two_hop, 2):
        offer(a, b)

    edges = list(base_edges)
    added: list[Edge] = []
    rank = _subset_rank(fw.positions, survivors, edges)
    for e in candidates:
        if len(edges) >= target:
            break
        trial = _subset_rank(fw.positions, survivors, edges + [e])
        if trial > rank:
            edges.append(e)
            added.append(e)
            rank = trial
    if len(edges) < target:
        raise RepairFailed(f"local candidates cannot restore rigidity after vertex {v}")
    if not is_rigid_subset(fw.positions, survivors, edges):
        raise RepairFailed(f"repair after vertex {v} failed the rigidity verification")

    out = _reindexed(fw.positions, v, edges)
    locality = max((max(hops.get(a, 99), hops.get(b, 99)) for a, b in added), default=0)
    report = RepairReport(removed_edges=_incident(g, v), added_edges=tuple(added),
                          locality=locality, departed=(v,))
    return out, report


def _reindexed(positions: np.ndarray, v: int, edges) -> Framework:
    def remap(u: int) -> int:
        return u - 1 if u > v else u

    new_edges = [(remap(a), remap(b)) for a, b in edges]
    pos = np.delete(positions, v, axis=0)
    return Framework.make(Graph.make(len(pos), new_edges), Configuration.make(pos))


def _subset_rank(positions, vertices, edges) -> int:
    if not edges:
        return 0
    remap = {u: k for k, u in enumerate(vertices)}
    local = [(remap[a], remap[b]) for a, b in edges]
    R = bearing_rigidity_matrix_from(np.asarray(positions)[list(vertices)], local)
    return numerical_rank(R)


def greedy_rigidity_repair(fw: Framework) -> Framework:
    """Fallback repair: add rank-increasing edges, nearest hops first,
    until the rigidity matrix reaches full rank 2n - 3."""
    n = fw.n
    target = minimal_edge_count(n)
    edges = list(fw.graph.edges)
    rank = _subset_rank(fw.positions, list(range(n)), edges)
    if rank >= target:
        return fw
    hop_all = {v: hop_distances(fw.graph, v) for v in range(n)}
    existing = set(edges)
    candidates = [canonical_edge(a, b) for a in range(n) for b in range(a + 1, n)
                  if canonical_edge(a, b) not in existing]
    candidates.sort(key=lambda e: (hop_all[e[0]].get(e[1], 10 ** 6), e))
    for e in candidates:
        if rank >= target:
            break
        trial = _subset_rank(fw.positions, list(range(n)), edges + [e])
        if trial > rank:
            edges.append(e)
            rank = trial
    if rank < target:
        raise RepairImpossible("rank cannot reach 2n-3 for this configuration")
    return Framework.make(Graph.make(n, edges), fw.config)


def derive_record(fw: Framework) -> HennebergRecord:
    """Rebuild a growth log for an existing minimally rigid framework by
    peeling degree-2/3 vertices, so future reverse operations stay valid."""
    vertices = set(range(fw.n))
    edges = set(fw.graph.edges)
    positions = fw.positions
    steps_rev: list[HennebergStep] = []

    def degree(u):
        return sum(1 for e in edges if u in e)

    def neighbors(u):
        return sorted(a if b == u else b for a, b in edges if u in (a, b))

    while len(vertices) > 2:
        progressed = False
        for v in sorted(vertices, key=lambda u: (degree(u), u)):
            deg = degree(v)
            nbrs = neighbors(v)
            if deg == 2:
                rem = {e for e in edges if v not in e}
                if is_rigid_subset(positions, vertices - {v}, rem):
                    steps_rev.append(HennebergStep(VERTEX_ADDITION, v, tuple(nbrs)))
                    vertices.discard(v)
                    edges = rem
                    progressed = True
                    break
            elif deg == 3:
                for a, b in combinations(nbrs, 2):
                    if canonical_edge(a, b) in edges:
                        continue
                    third = next(u for u in nbrs if u not in (a, b))
                    rem = {e for e in edges if v not in e} | {canonical_edge(a, b)}
                    if is_rigid_subset(positions, vertices - {v}, rem):
                        steps_rev.append(HennebergStep(
                            EDGE_SPLITTING, v, (a, b, third), removed=(a, b)))
                        vertices.discard(v)
                        edges = rem
                        progressed = True
                        break
                if progressed:
                    break
        if not progressed:
            raise RepairFailed("cannot derive a construction order by peeling")
    pair = tuple(sorted(vertices))
    if canonical_edge(*pair) not in edges:
        raise RepairFailed("peeling terminated without a seed edge")
    record = HennebergRecord(initial=pair, steps=tuple(reversed(steps_rev)))
    if record.replay(fw.n).edges != fw.graph.edges:
        raise RepairFailed("derived record does not replay the graph")
    return record


def reconfigure(fw: Framework, rec: HennebergRecord | None, batch: DepartureBatch):
    """Process a departure batch bottom-up (level 4, then level 3) and
    return the repaired framework, a freshly derived growth log and the
    merged repair report. Edges in the report use pre-batch labels."""
    if fw.n - len(batch.departing) < 2:
        raise ValueError("departures would leave fewer than two robots")

    order = sorted(batch.departing, key=lambda v: (-batch.levels[v], v))
    cur_fw = fw
    cur_to_orig = list(range(fw.n))
    levels_orig = dict(batch.levels)
    merged = RepairReport(departed=tuple(order))
    removed_acc: list[Edge] = []
    added_acc: list[Edge] = []
    fallback = False
    locality = 0

    for orig_v in order:
        v = cur_to_orig.index(orig_v)
        cur_levels = {i: levels_orig[r] for i, r in enumerate(cur_to_orig)}
        use_rec = rec if cur_to_orig == list(range(fw.n)) else None
        result = None
        if batch.levels[orig_v] == 4:
            try:
                result = remove_level4(cur_fw, use_rec, v)
            except (IrreversibleDegree, RepairFailed):
                result = None
        if result is None:
            try:
                result = remove_level3(cur_fw, v, cur_levels)
            except RepairFailed:
                stripped = _drop_vertex(cur_fw, v)
                pre_edges = set(cur_fw.graph.edges)
                try:
                    repaired = greedy_rigidity_repair(stripped)
                except RepairImpossible as exc:
                    raise RepairFailed(f"fallback repair failed: {exc}") from exc
                hops = hop_distances(cur_fw.graph, v)

                def unmap(u):
                    return u + 1 if u >= v else u

                added = [canonical_edge(unmap(a), unmap(b))
                         for a, b in repaired.graph.edges
                         if canonical_edge(unmap(a), unmap(b)) not in pre_edges]
                loc = max((max(hops.get(a, 99), hops.get(b, 99)) for a, b in added),
                          default=0)
                report = RepairReport(removed_edges=_incident(cur_fw.graph, v),
                                      added_edges=tuple(added), used_fallback=True,
                                      locality=loc, departed=(v,))
                result = (repaired, report)
        new_fw, report = result
        removed_acc += [_to_orig(e, cur_to_orig) for e in report.removed_edges]
        added_acc += [_to_orig(e, cur_to_orig) for e in report.added_edges]
        fallback = fallback or report.used_fallback
        locality = max(locality, report.locality)
        del cur_to_orig[v]
        cur_fw = new_fw

    final_report = is_ibr(cur_fw)
    if not final_report.rigid or cur_fw.m != minimal_edge_count(cur_fw.n):
        raise RepairFailed(
            f"post-batch framework not minimally rigid (rank {final_report.rank}, "
            f"m={cur_fw.m}, n={cur_fw.n})")
    new_record = derive_record(cur_fw)
    merged.removed_edges = tuple(removed_acc)
    merged.added_edges = tuple(added_acc)
    merged.used_fallback = fallback
    merged.locality = locality
    return cur_fw, new_record, merged


def _to_orig(e: Edge, cur_to_orig) -> Edge:
    return canonical_edge(cur_to_orig[e[0]], cur_to_orig[e[1]])
