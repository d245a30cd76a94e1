"""Per-robot hybrid energy automaton.

Three modes cycling Coverage -> ReturnToBase -> Recharge -> Coverage. The
coverage-to-return guard compares the SOC against the energy the current
minimum-time return plan needs (input term plus per-step hotel load), with
a safety margin absorbing discretization and replanning drift. SOC must
never go negative; a violation raises instead of clamping silently.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import EnergyExhausted, StalePlan
from .planner import ReturnPlan

SOC_FLOOR = -1e-12
DEFAULT_STALE_TOL = 0.05


class Mode(IntEnum):
    COVERAGE = 1
    RETURN_TO_BASE = 2
    RECHARGE = 3


@dataclass(frozen=True)
class EnergyParams:
    mu: float                 # discharge per unit consumption
    gamma: float              # constant drain per step
    s_th: float = 1.0         # recharge-complete threshold
    rho_c: float = 0.005      # charge rate per step
    s_max: float = 1.0
    guard_margin: float = 0.0
    base_radius: float = 0.25

    def __post_init__(self):
        if min(self.mu, self.gamma, self.guard_margin, self.base_radius) < 0:
            raise ValueError("energy parameters must be non-negative")
        if self.rho_c <= 0:
            raise ValueError("charge rate must be positive")
        if not (0 < self.s_th <= self.s_max):
            raise ValueError("need 0 < s_th <= s_max")


def default_guard_margin(params_mu: float, params_gamma: float, u_max: float) -> float:
    """Twice the worst-case one-step drain for the planar input box."""
    return 2.0 * (params_mu * 2.0 * u_max ** 2 + params_gamma)


@dataclass(frozen=True)
class EnergyState:
    soc: float
    mode: Mode = Mode.COVERAGE
    plan: ReturnPlan | None = None  # present exactly in RETURN_TO_BASE


@dataclass(frozen=True)
class TransitionEvent:
    from_mode: int
    to_mode: int
    soc: float
    tau_star: int | None = None


def consumption(x, u) -> float:
    """Per-step energy use of an input; squared input norm."""
    u = np.asarray(u, dtype=float)
    return float(u @ u)


def discharge_step(s: float, x, u, params: EnergyParams) -> float:
    """One step of the discharge dynamics s' = s - mu*xi - gamma."""
    s_new = s - params.mu * consumption(x, u) - params.gamma
    if s_new < SOC_FLOOR:
        raise EnergyExhausted(f"SOC would drop to {s_new:.3e}")
    return max(s_new, 0.0)


def charge_step(s: float, params: EnergyParams) -> float:
    return min(s + params.rho_c, params.s_max)


def guard_1_to_2(s: float, x, plan: ReturnPlan, params: EnergyParams,
                 stale_tol: float = DEFAULT_STALE_TOL) -> bool:
    """Fire when remaining charge barely covers the return plan.

    True iff s - plan.energy_required <= guard_margin. The plan must start
    near the current state; otherwise its energy total is meaningless and
    StalePlan asks the caller to replan.
    """
    x = np.asarray(x, dtype=float)
    start = np.asarray(plan.states[0], dtype=float)
    if np.linalg.norm(x - start) > stale_tol:
        raise StalePlan(
            f"plan starts {np.linalg.norm(x - start):.3f} away from current state")
    return s - plan.energy_required <= params.guard_margin


def guard_2_to_3(x, p_base, params: EnergyParams) -> bool:
    """Arrival test: inside the closed recharge disk."""
    pos = np.asarray(x, dtype=float)[:2]
    return float(np.linalg.norm(pos - np.asarray(p_base, float))) <= params.base_radius


def guard_3_to_1(s: float, params: EnergyParams) -> bool:
    return s >= params.s_th


def transition(state: EnergyState, x, planner, params: EnergyParams, p_base,
               stale_tol: float = DEFAULT_STALE_TOL):
    """Evaluate the single legal guard and switch modes when it fires.

    `planner` is a callable (x, fresh=False) -> ReturnPlan; a stale cached
    plan triggers one fresh replan before the guard decides. Energy is not
    updated here; pair with `energy_update`.
    """
    if state.mode == Mode.COVERAGE:
        plan = planner(x)
        try:
            fire = guard_1_to_2(state.soc, x, plan, params, stale_tol)
        except StalePlan:
            plan = planner(x, fresh=True)
            fire = guard_1_to_2(state.soc, x, plan, params, stale_tol)
        if fire:
            # commit to a plan computed from the exact current state so the
            # open-loop return tracks the guard's energy accounting
            if float(np.linalg.norm(np.asarray(x, float) - plan.states[0])) > 0:
                plan = planner(x, fresh=True)
            new = EnergyState(soc=state.soc, mode=Mode.RETURN_TO_BASE, plan=plan)
            return new, TransitionEvent(1, 2, state.soc, plan.tau_star)
        return state, None
    if state.mode == Mode.RETURN_TO_BASE:
        if guard_2_to_3(x, p_base, params):
            return EnergyState(soc=state.soc, mode=Mode.RECHARGE), TransitionEvent(
                2, 3, state.soc)
        return state, None
    if guard_3_to_1(state.soc, params):
        return EnergyState(soc=state.soc, mode=Mode.COVERAGE), TransitionEvent(
            3, 1, state.soc)
    return state, None


def energy_update(state: EnergyState, x, u, params: EnergyParams) -> EnergyState:
    """Apply the mode-appropriate SOC update for one step."""
    if state.mode == Mode.RECHARGE:
        return replace(state, soc=charge_step(state.soc, params))
    return replace(state, soc=discharge_step(state.soc, x, u, params))


def automaton_step(state: EnergyState, x, u, planner, params: EnergyParams, p_base,
                   stale_tol: float = DEFAULT_STALE_TOL):
    """One full automaton tick: guard evaluation, then the energy update
    for the (possibly new) mode, with `u` the input executed this step."""
    new_state, event = transition(state, x, planner, params, p_base, stale_tol)
    return energy_update(new_state, x, u, params), event
