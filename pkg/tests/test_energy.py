from __future__ import annotations

import numpy as np
import pytest

from rigid_coverage.energy import (
    EnergyParams,
    EnergyState,
    Mode,
    automaton_step,
    charge_step,
    consumption,
    default_guard_margin,
    discharge_step,
    energy_update,
    guard_1_to_2,
    guard_2_to_3,
    guard_3_to_1,
    transition,
)
from rigid_coverage.errors import EnergyExhausted, StalePlan
from rigid_coverage.planner import ReturnPlan, plan_energy

PARAMS = EnergyParams(mu=0.01, gamma=0.001, s_th=1.0, rho_c=0.05,
                      guard_margin=0.005, base_radius=0.5)


def synthetic_plan(tau: int, start_state=None, unit_inputs=True) -> ReturnPlan:
    nx = 4
    states = np.zeros((tau + 1, nx))
    if start_state is not None:
        states[:] = np.asarray(start_state, dtype=float)
    inputs = np.zeros((tau, 2))
    if unit_inputs and tau:
        inputs[:, 0] = 1.0
    return ReturnPlan(states=states, inputs=inputs, tau_star=tau,
                      energy_required=plan_energy(inputs, tau, PARAMS.mu, PARAMS.gamma))


# -- consumption / discharge / charge ------------------------------------------

def test_consumption_values():
    assert consumption(None, (0, 0)) == 0.0
    assert consumption(None, (3, 4)) == 25.0
    assert consumption(None, (-1, 0)) == 1.0


def test_discharge_hotel_load_only():
    assert discharge_step(0.5, None, (0, 0), PARAMS) == pytest.approx(0.499)


def test_discharge_with_unit_input():
    assert discharge_step(0.5, None, (1, 0), PARAMS) == pytest.approx(0.489)


def test_discharge_exhaustion_raises():
    with pytest.raises(EnergyExhausted):
        discharge_step(0.0005, None, (1, 0), PARAMS)


def test_charge_clamps_at_max():
    p = EnergyParams(mu=0.01, gamma=0.001, rho_c=0.1)
    assert charge_step(0.95, p) == 1.0
    assert charge_step(1.0, p) == 1.0


def test_charge_linear():
    assert charge_step(0.2, PARAMS) == pytest.approx(0.25)


def test_default_guard_margin():
    assert default_guard_margin(0.01, 0.001, 2.0) == pytest.approx(
        2 * (0.01 * 2 * 4 + 0.001))


# -- guards ---------------------------------------------------------------------

def test_guard_1_to_2_energy_sum():
    # tau=10 steps of mu*xi = 0.01 plus gamma = 0.001 each: 0.11 total
    plan = synthetic_plan(10)
    assert plan.energy_required == pytest.approx(0.11)
    x = np.zeros(4)
    assert guard_1_to_2(0.12, x, plan, PARAMS) is False
    assert guard_1_to_2(0.115, x, plan, PARAMS) is True


def test_guard_1_to_2_at_base_fires_at_margin():
    plan = synthetic_plan(0)
    x = np.zeros(4)
    assert plan.energy_required == 0.0
    assert guard_1_to_2(0.004, x, plan, PARAMS) is True
    assert guard_1_to_2(0.006, x, plan, PARAMS) is False


def test_guard_1_to_2_full_battery():
    assert guard_1_to_2(1.0, np.zeros(4), synthetic_plan(5), PARAMS) is False


def test_guard_1_to_2_stale_plan():
    plan = synthetic_plan(5, start_state=[1.0, 0.0, 0.0, 0.0])
    with pytest.raises(StalePlan):
        guard_1_to_2(0.5, np.zeros(4), plan, PARAMS, stale_tol=0.05)


def test_guard_1_to_2_monotone_in_soc():
    plan = synthetic_plan(10)
    x = np.zeros(4)
    fired = [s for s in np.linspace(0, 1, 101) if guard_1_to_2(s, x, plan, PARAMS)]
    assert fired == [s for s in np.linspace(0, 1, 101) if s <= max(fired)]


def test_guard_2_to_3_closed_ball():
    base = np.array([1.0, 1.0])
    assert guard_2_to_3(np.array([1.0, 1.0, 0, 0]), base, PARAMS) is True
    assert guard_2_to_3(np.array([1.5, 1.0, 0, 0]), base, PARAMS) is True  # at radius
    assert guard_2_to_3(np.array([3.0, 1.0, 0, 0]), base, PARAMS) is False


def test_guard_3_to_1_threshold():
    assert guard_3_to_1(1.0, PARAMS) is True
    assert guard_3_to_1(0.99, PARAMS) is False
    p = EnergyParams(mu=0.01, gamma=0.001, s_th=0.9, rho_c=0.05)
    assert guard_3_to_1(0.9, p) is True


# -- automaton -------------------------------------------------------------------

def test_automaton_coverage_no_fire_decrements_soc():
    plan = synthetic_plan(5)
    state = EnergyState(soc=0.9, mode=Mode.COVERAGE)
    new, event = automaton_step(state, np.zeros(4), (0, 0),
                                lambda x, fresh=False: plan, PARAMS, (5.0, 5.0))
    assert event is None
    assert new.mode == Mode.COVERAGE
    assert new.soc == pytest.approx(0.899)


def test_automaton_fires_1_to_2_with_plan():
    plan = synthetic_plan(10)
    state = EnergyState(soc=0.112, mode=Mode.COVERAGE)
    new, event = automaton_step(state, np.zeros(4), (1, 0),
                                lambda x, fresh=False: plan, PARAMS, (5.0, 5.0))
    assert event is not None and (event.from_mode, event.to_mode) == (1, 2)
    assert event.tau_star == 10
    assert new.mode == Mode.RETURN_TO_BASE
    assert new.plan is plan


def test_automaton_2_to_3_at_base():
    plan = synthetic_plan(3)
    state = EnergyState(soc=0.2, mode=Mode.RETURN_TO_BASE, plan=plan)
    new, event = automaton_step(state, np.zeros(4), (0, 0),
                                lambda x, fresh=False: plan, PARAMS, (0.0, 0.0))
    assert (event.from_mode, event.to_mode) == (2, 3)
    assert new.mode == Mode.RECHARGE and new.plan is None
    assert new.soc == pytest.approx(0.25)  # charging applies immediately


def test_automaton_3_to_1_at_threshold():
    state = EnergyState(soc=1.0, mode=Mode.RECHARGE)
    new, event = automaton_step(state, np.zeros(4), (0, 0),
                                lambda x, fresh=False: None, PARAMS, (0.0, 0.0))
    assert (event.from_mode, event.to_mode) == (3, 1)
    assert new.mode == Mode.COVERAGE


def test_automaton_full_cycle_order():
    """Mode sequence projected to transitions matches (1 2 3)*."""
    plan = synthetic_plan(0)
    params = EnergyParams(mu=0.0, gamma=0.01, s_th=1.0, rho_c=0.2,
                          guard_margin=0.02, base_radius=0.5)
    state = EnergyState(soc=0.05, mode=Mode.COVERAGE)
    seen = []
    x = np.zeros(4)
    for _ in range(30):
        state, event = automaton_step(state, x, (0, 0),
                                      lambda x_, fresh=False: plan, params, (0.0, 0.0))
        if event:
            seen.append((event.from_mode, event.to_mode))
    assert len(seen) >= 3
    expected = [(1, 2), (2, 3), (3, 1)]
    for idx, pair in enumerate(seen):
        assert pair == expected[idx % 3]


def test_soc_stays_in_unit_interval_random(rng):
    params = EnergyParams(mu=0.001, gamma=0.002, s_th=1.0, rho_c=0.03,
                          guard_margin=0.05, base_radius=0.5)
    plan = synthetic_plan(0)
    state = EnergyState(soc=0.5, mode=Mode.COVERAGE)
    x = np.zeros(4)
    for _ in range(500):
        u = rng.random(2) * 0.5
        state, _ = automaton_step(state, x, u,
                                  lambda x_, fresh=False: plan, params, (0.0, 0.0))
        assert 0.0 <= state.soc <= 1.0


def test_transition_does_not_change_soc():
    plan = synthetic_plan(0)
    state = EnergyState(soc=0.004, mode=Mode.COVERAGE)
    new, event = transition(state, np.zeros(4), lambda x, fresh=False: plan,
                            PARAMS, (9.0, 9.0))
    assert event is not None
    assert new.soc == state.soc


def test_energy_update_modes():
    st1 = energy_update(EnergyState(soc=0.5, mode=Mode.COVERAGE), None, (0, 0), PARAMS)
    assert st1.soc == pytest.approx(0.499)
    st3 = energy_update(EnergyState(soc=0.5, mode=Mode.RECHARGE), None, (0, 0), PARAMS)
    assert st3.soc == pytest.approx(0.55)
