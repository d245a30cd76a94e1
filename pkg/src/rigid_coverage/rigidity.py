"""Bearing rigidity in the plane.

Bearing function, rigidity matrix, numerical rank test for infinitesimal
bearing rigidity (IBR), the trivial-motion basis (translations + scaling),
and the two Henneberg growth operations on abstract graphs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentPoints,
    DegenerateConfiguration,
    InvalidAnchor,
    MissingEdge,
)

MIN_SEPARATION = 1e-9
RANK_TOL = 1e-8

Edge = tuple[int, int]


def canonical_edge(i: int, j: int) -> Edge:
    if i == j:
        raise InvalidAnchor(f"self-loop ({i},{j})")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices 0..n-1 with canonically ordered edges."""

    n: int
    edges: tuple[Edge, ...]

    @classmethod
    def make(cls, n: int, edges) -> "Graph":
        canon = sorted({canonical_edge(i, j) for i, j in edges})
        for i, j in canon:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidAnchor(f"edge ({i},{j}) outside vertex range [0,{n})")
        return cls(n, tuple(canon))

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return canonical_edge(i, j) in set(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        out = [j if i == v else i for i, j in self.edges if v in (i, j)]
        return tuple(sorted(out))

    def degree(self, v: int) -> int:
        return sum(1 for i, j in self.edges if v in (i, j))

    def with_edges(self, added=(), removed=()) -> "Graph":
        es = set(self.edges)
        es -= {canonical_edge(i, j) for i, j in removed}
        es |= {canonical_edge(i, j) for i, j in added}
        return Graph.make(self.n, es)


@dataclass(frozen=True)
class Configuration:
    """Planar point set; one position per vertex, pairwise distinct."""

    positions: np.ndarray  # (n, 2)

    @classmethod
    def make(cls, positions) -> "Configuration":
        p = np.asarray(positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise DegenerateConfiguration(f"positions must be (n,2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DegenerateConfiguration("non-finite coordinates")
        diff = p[:, None, :] - p[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        np.fill_diagonal(dist, np.inf)
        if np.min(dist) <= MIN_SEPARATION:
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            raise CoincidentPoints(f"points {i} and {j} closer than {MIN_SEPARATION}")
        p = p.copy()
        p.flags.writeable = False
        return cls(p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Framework:
    """A graph embedded at robot positions."""

    graph: Graph
    config: Configuration

    @classmethod
    def make(cls, graph: Graph, positions) -> "Framework":
        config = positions if isinstance(positions, Configuration) else Configuration.make(positions)
        if graph.n != config.n:
            raise DegenerateConfiguration(
                f"graph has {graph.n} vertices but configuration has {config.n}")
        return cls(graph, config)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def positions(self) -> np.ndarray:
        return self.config.positions


@dataclass(frozen=True)
class IbrReport:
    rigid: bool
    rank: int
    nullity: int


def minimal_edge_count(n: int) -> int:
    """Edge count of a minimally bearing-rigid planar graph."""
    return 2 * n - 3


def bearing_of(p_i, p_j) -> np.ndarray:
    """Unit vector from p_i toward p_j."""
    d = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm <= MIN_SEPARATION:
        raise CoincidentPoints(f"separation {norm:.3e} below {MIN_SEPARATION}")
    return d / norm


def bearing_function(fw: Framework) -> np.ndarray:
    """All edge bearings of the framework, stacked in canonical edge order.

    Returns an (m, 2) array of unit vectors; row e is the bearing of the
    e-th edge (i, j), pointing from i to j.
    """
    p = fw.positions
    out = np.zeros((fw.m, 2))
    for e, (i, j) in enumerate(fw.graph.edges):
        out[e] = bearing_of(p[i], p[j])
    return out


def bearing_rigidity_matrix_from(positions: np.ndarray, edges) -> np.ndarray:
    """Rigidity matrix rows for an explicit edge list over given positions."""
    p = np.asarray(positions, dtype=float)
    n = p.shape[0]
    edges = list(edges)
    R = np.zeros((2 * len(edges), 2 * n))
    for e, (i, j) in enumerate(edges):
        d = p[j] - p[i]
        norm = float(np.linalg.norm(d))
        if norm <= MIN_SEPARATION:
            raise CoincidentPoints(f"edge ({i},{j}) endpoints coincide")
        g = d / norm
        P = (np.eye(2) - np.outer(g, g)) / norm
        R[2 * e:2 * e + 2, 2 * i:2 * i + 2] = -P
        R[2 * e:2 * e + 2, 2 * j:2 * j + 2] = P
    return R


def bearing_rigidity_matrix(fw: Framework) -> np.ndarray:
    """Matrix whose null space is exactly the bearing-preserving motions.

    Row block of edge e = (i, j) applies P_g / ||p_ij|| with -I at vertex i
    and +I at vertex j, where P_g = I - g g^T projects onto the orthogonal
    complement of the bearing.
    """
    return bearing_rigidity_matrix_from(fw.positions, fw.graph.edges)


def numerical_rank(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank via singular values: count sigma > tol * sigma_max."""
    if matrix.size == 0:
        return 0
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def trivial_motion_basis(config: Configuration) -> np.ndarray:
    """Orthonormal basis of the trivial bearing motions.

    Spans the two rigid translations plus the uniform scaling about the
    centroid; shape (2n, 3).
    """
    p = config.positions
    n = p.shape[0]
    if n < 2:
        raise DegenerateConfiguration("need at least two points")
    tx = np.tile([1.0, 0.0], n)
    ty = np.tile([0.0, 1.0], n)
    scale = (p - p.mean(axis=0)).ravel()
    if np.linalg.norm(scale) <= MIN_SEPARATION:
        raise DegenerateConfiguration("all points coincide; no scaling direction")
    q, r = np.linalg.qr(np.column_stack([tx, ty, scale]))
    if np.min(np.abs(np.diag(r))) <= 1e-12:
        raise DegenerateConfiguration("trivial motions are linearly dependent")
    return q


def is_ibr(fw: Framework, tol: float = RANK_TOL) -> IbrReport:
    """Numerical test for infinitesimal bearing rigidity.

    Rigid iff the rigidity matrix has rank 2n - 3, i.e. the null space is
    exactly the trivial translation + scaling motions.
    """
    n = fw.n
    if n < 2:
        raise DegenerateConfiguration("rigidity is defined for n >= 2")
    if fw.m == 0:
        rank = 0
    else:
        rank = numerical_rank(bearing_rigidity_matrix(fw), tol)
    return IbrReport(rigid=rank == minimal_edge_count(n), rank=rank, nullity=2 * n - rank)


def is_rigid_subset(positions: np.ndarray, vertices, edges, tol: float = RANK_TOL) -> bool:
    """IBR test for an induced vertex subset with edges in original labels."""
    vertices = sorted(vertices)
    if len(vertices) < 2:
        return False
    remap = {v: k for k, v in enumerate(vertices)}
    local = [(remap[i], remap[j]) for i, j in edges]
    if len(local) == 0:
        return False
    R = bearing_rigidity_matrix_from(positions[vertices], local)
    return numerical_rank(R, tol) == minimal_edge_count(len(vertices))


def vertex_addition(g: Graph, anchors: tuple[int, int]) -> Graph:
    """Henneberg operation 1: new vertex v = g.n joined to two anchors."""
    i, j = anchors
    if i == j or not (0 <= i < g.n) or not (0 <= j < g.n):
        raise InvalidAnchor(f"anchors ({i},{j}) invalid for n={g.n}")
    v = g.n
    return Graph.make(g.n + 1, list(g.edges) + [(v, i), (v, j)])


def edge_splitting(g: Graph, split_edge: tuple[int, int], third: int) -> Graph:
    """Henneberg operation 2: split an edge through new vertex v = g.n.

    Removes (i, j), joins v to i, j and a third vertex k.
    """
    i, j = canonical_edge(*split_edge)
    if (i, j) not in set(g.edges):
        raise MissingEdge(f"edge ({i},{j}) not in graph")
    if third in (i, j) or not (0 <= third < g.n):
        raise InvalidAnchor(f"third vertex {third} invalid for split of ({i},{j})")
    v = g.n
    edges = [e for e in g.edges if e != (i, j)]
    edges += [(v, i), (v, j), (v, third)]
    return Graph.make(g.n + 1, edges)
