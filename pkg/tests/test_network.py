from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from rigid_coverage.errors import NoFeasibleAnchors, OutOfRange
from rigid_coverage.network import (
    EDGE_SPLITTING,
    VERTEX_ADDITION,
    HennebergRecord,
    build_network,
    choose_anchors,
    energy_level,
    insert_robot,
)
from rigid_coverage.rigidity import (
    Framework,
    Graph,
    canonical_edge,
    is_ibr,
    minimal_edge_count,
)

from conftest import generic_positions


def check_build_postconditions(result, positions, socs):
    """All construction post-conditions: edge count, rigidity, level-1 seed,
    sandwich constraints per non-relaxed step, split constraints, replay."""
    n = len(positions)
    fw = result.framework
    rec = result.record
    levels = [energy_level(float(s)) for s in socs]

    assert fw.m == minimal_edge_count(n)                    # (a)
    assert is_ibr(fw).rigid                                 # (b)

    level1 = [i for i in range(n) if levels[i] == 1]
    if len(level1) >= 2:                                    # (c)
        assert levels[rec.initial[0]] == 1 and levels[rec.initial[1]] == 1
    else:
        assert any("insufficient level-1" in w for w in result.warnings)
        top2 = sorted(range(n), key=lambda i: (-socs[i], i))[:2]
        assert set(rec.initial) == set(top2)

    # incremental replay validates step-time constraints
    edges = {canonical_edge(*rec.initial)}
    present = set(rec.initial)
    for step in rec.steps:
        if step.kind == VERTEX_ADDITION:
            lo, up = step.anchors
            assert lo in present and up in present
            if not step.relaxed:                            # (d)
                assert levels[lo] <= levels[step.v] <= levels[up]
            edges |= {canonical_edge(step.v, lo), canonical_edge(step.v, up)}
        else:
            j, k, l = step.anchors
            assert {j, k, l} <= present
            degree_j = sum(1 for e in edges if j in e)
            assert degree_j >= 2                            # (e) split endpoint
            assert canonical_edge(j, k) in edges
            if not step.relaxed:
                assert levels[j] <= levels[step.v] <= levels[l]
            edges.discard(canonical_edge(j, k))
            edges |= {canonical_edge(step.v, x) for x in (j, k, l)}
        present.add(step.v)
    assert edges == set(fw.graph.edges)                     # (f) replay
    assert rec.replay(n).edges == fw.graph.edges

    # no same-level clique of size > 3 when several levels are populated
    if len(set(levels)) >= 2:
        edge_set = set(fw.graph.edges)
        for level in set(levels):
            group = [i for i in range(n) if levels[i] == level]
            for four in combinations(group, 4):
                pairs = list(combinations(four, 2))
                assert not all(canonical_edge(*p) in edge_set for p in pairs)


# -- energy_level ----------------------------------------------------------------

@pytest.mark.parametrize("soc,expected", [
    (1.0, 1), (0.75, 1), (0.74, 2), (0.5, 2), (0.49, 3), (0.30, 3),
    (0.25, 3), (0.24, 4), (0.0, 4),
])
def test_energy_level_mapping(soc, expected):
    assert energy_level(soc) == expected


def test_energy_level_out_of_range():
    with pytest.raises(OutOfRange):
        energy_level(1.2)
    with pytest.raises(OutOfRange):
        energy_level(-0.01)


def test_energy_level_monotone(rng):
    socs = np.sort(rng.random(50))
    levels = [energy_level(float(s)) for s in socs]
    assert all(a >= b for a, b in zip(levels, levels[1:]))


# -- choose_anchors -----------------------------------------------------------------

def test_choose_anchors_unsatisfiable_upper():
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    levels = {0: 1, 1: 1, 2: 1}
    with pytest.raises(NoFeasibleAnchors):
        choose_anchors([0, 1, 2], levels, positions, 3, (0.5, 0.5))


def test_choose_anchors_sandwich_pair():
    positions = np.array([[0.0, 0.0], [1.0, 0.0]])
    levels = {0: 1, 1: 4}
    choice = choose_anchors([0, 1], levels, positions, 2, (0.5, 0.0))
    assert choice.lower == 0 and choice.upper == 1


def test_choose_anchors_equidistant_lowest_index():
    positions = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    levels = {i: 2 for i in range(4)}
    choice = choose_anchors([0, 1, 2, 3], levels, positions, 2, (0.0, 0.0))
    assert (choice.lower, choice.upper) == (0, 1)


# -- build_network -------------------------------------------------------------------

def test_build_two_robots_base_case():
    result = build_network([[0.0, 0.0], [1.0, 0.0]], [0.9, 0.8], seed=0)
    assert result.framework.m == 1
    assert result.record.steps == ()
    assert set(result.record.initial) == {0, 1}


def test_build_five_robot_example(rng):
    socs = [0.9, 0.8, 0.6, 0.4, 0.1]
    positions = generic_positions(rng, 5)
    result = build_network(positions, socs, seed=42)
    assert result.framework.m == 7
    assert is_ibr(result.framework).rigid
    check_build_postconditions(result, positions, socs)


def test_build_replay_determinism(rng):
    positions = generic_positions(rng, 8)
    socs = rng.random(8)
    r1 = build_network(positions, socs, seed=11)
    r2 = build_network(positions, socs, seed=11)
    assert r1.framework.graph.edges == r2.framework.graph.edges
    assert r1.record == r2.record


def test_build_uses_both_growth_operations(rng):
    kinds = set()
    for seed in range(12):
        positions = generic_positions(rng, 10)
        socs = rng.random(10)
        result = build_network(positions, socs, seed=seed)
        kinds |= {s.kind for s in result.record.steps}
    assert kinds == {VERTEX_ADDITION, EDGE_SPLITTING}


def test_build_many_seeds_postconditions(rng):
    for seed in range(25):
        positions = generic_positions(rng, 12)
        socs = rng.random(12)
        result = build_network(positions, socs, seed=seed)
        check_build_postconditions(result, positions, socs)


def test_build_homogeneous_fleet_relaxes_with_warning(rng):
    positions = generic_positions(rng, 6)
    result = build_network(positions, [0.6] * 6, seed=1)
    assert is_ibr(result.framework).rigid
    assert result.warnings  # no level-1 seed pair exists


# -- insert_robot --------------------------------------------------------------------

def test_insert_into_k2_gives_triangle(rng):
    base = build_network([[0.0, 0.0], [1.0, 0.0]], [0.9, 0.85], seed=0)
    out = insert_robot(base.framework, base.record, (0.4, 0.9), 0.7,
                       [0.9, 0.85], rng)
    assert out.framework.n == 3 and out.framework.m == 3
    assert len(out.record.steps) == 1
    assert out.record.steps[0].kind == VERTEX_ADDITION


def test_insert_full_charge_gets_level1_anchor(rng):
    positions = generic_positions(rng, 5, scale=3.0)
    socs = [0.9, 0.8, 0.6, 0.4, 0.1]
    base = build_network(positions, socs, seed=5)
    out = insert_robot(base.framework, base.record, (1.5, 1.5), 1.0, socs, rng)
    step = out.record.steps[-1]
    assert not step.relaxed
    anchor_levels = {energy_level(socs[a]) for a in step.anchors}
    assert 1 in anchor_levels
    assert is_ibr(out.framework).rigid
    assert out.framework.m == minimal_edge_count(6)


def test_insert_into_empty_framework_fails(rng):
    fw = Framework.make(Graph.make(1, []), np.array([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        insert_robot(fw, HennebergRecord((0, 0)), (1.0, 1.0), 0.5, [0.5], rng)
