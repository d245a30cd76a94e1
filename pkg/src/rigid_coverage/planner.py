"""Minimum-time return-to-base trajectory optimization.

The horizon search wraps a convex least-effort feasibility probe: for a
fixed step count T, minimize the summed squared inputs subject to the
exact linear dynamics, box constraints, terminal arrival at the base (at
rest for the double integrator) and half-plane separation constraints
linearized around the straight-line seed path. Feasibility is monotone in
T for these models, so the smallest feasible T is found by exponential
growth plus bisection; a hint from the previous plan usually settles it
in two probes. The plan's energy total (input term plus per-step hotel
load) is the quantity the mode-switch guard compares against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qp
from .dynamics import DOUBLE_INTEGRATOR, RobotModel, free_response, input_map
from .errors import PlanExhausted, SolverFailure, Unreachable

TERMINAL_TOL = 1e-8
DYNAMICS_TOL = 1e-9
BOUND_SLACK = 1e-7
MAX_HORIZON_CAP = 2000


@dataclass(frozen=True)
class ReturnPlan:
    """Open-loop minimum-time trajectory to the base plus its energy need."""

    states: np.ndarray          # (tau+1, nx)
    inputs: np.ndarray          # (tau, nu)
    tau_star: int
    energy_required: float

    def validate(self, model: RobotModel, p_base, base_radius: float) -> None:
        x = self.states
        u = self.inputs
        for l in range(self.tau_star):
            if np.max(np.abs(model.step(x[l], u[l]) - x[l + 1])) > DYNAMICS_TOL:
                raise AssertionError(f"dynamics residual at step {l}")
        if np.linalg.norm(model.position(x[-1]) - np.asarray(p_base, float)) > \
                max(base_radius, TERMINAL_TOL):
            raise AssertionError("terminal position misses the base")
        if self.tau_star and np.max(np.abs(u)) > model.u_max + BOUND_SLACK:
            raise AssertionError("input bound violated")


def default_max_horizon(model: RobotModel) -> int:
    """Step budget: four mission-space diagonals at cruise speed."""
    steps = int(np.ceil(4.0 * model.diagonal() / (model.v_max * model.dt)))
    return min(max(steps, 10), MAX_HORIZON_CAP)


def _terminal_ok(model: RobotModel, x0, p_base) -> bool:
    x0 = np.asarray(x0, dtype=float)
    if np.linalg.norm(model.position(x0) - np.asarray(p_base, float)) > TERMINAL_TOL:
        return False
    if model.kind == DOUBLE_INTEGRATOR and np.linalg.norm(model.velocity(x0)) > TERMINAL_TOL:
        return False
    return True


def _seed_direction(seed_point, obstacle, fallback) -> np.ndarray:
    d = seed_point - obstacle
    norm = float(np.linalg.norm(d))
    if norm < 1e-9:
        return fallback
    return d / norm


def feasibility_probe(T: int, x0, p_base, model: RobotModel, obstacles=(),
                      r_safe: float = 0.0, max_iter: int = 0):
    """Least-effort trajectory of exactly T steps, or None if infeasible.

    Separation from frozen obstacle points is enforced through half-planes
    oriented from the straight-line seed path, which is conservative but
    keeps the probe convex.
    """
    x0 = np.asarray(x0, dtype=float)
    p_base = np.asarray(p_base, dtype=float)
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        if _terminal_ok(model, x0, p_base):
            return x0.reshape(1, -1), np.zeros((0, model.nu))
        return None

    nx, nu = model.nx, model.nu
    Phi = free_response(model, x0, T)
    Gm = input_map(model, T)
    nz = T * nu

    H = 2.0 * np.eye(nz)
    q = np.zeros(nz)

    # terminal: position at the base; the double integrator also arrives at rest
    rows = [Gm[T * nx + 0], Gm[T * nx + 1]]
    rhs = [p_base[0] - Phi[T][0], p_base[1] - Phi[T][1]]
    if model.kind == DOUBLE_INTEGRATOR:
        rows += [Gm[T * nx + 2], Gm[T * nx + 3]]
        rhs += [-Phi[T][2], -Phi[T][3]]
    A_eq = np.vstack(rows)
    b_eq = np.asarray(rhs)

    G_rows, h_vals = [], []
    pos_min = np.asarray(model.pos_min, float)
    pos_max = np.asarray(model.pos_max, float)
    for l in range(1, T + 1):
        base_row = l * nx
        for d in range(2):
            G_rows.append(Gm[base_row + d])
            h_vals.append(pos_max[d] - Phi[l][d])
            G_rows.append(-Gm[base_row + d])
            h_vals.append(Phi[l][d] - pos_min[d])
        if model.kind == DOUBLE_INTEGRATOR:
            for d in range(2, 4):
                G_rows.append(Gm[base_row + d])
                h_vals.append(model.v_max - Phi[l][d])
                G_rows.append(-Gm[base_row + d])
                h_vals.append(model.v_max + Phi[l][d])
    eye = np.eye(nz)
    for r in range(nz):
        G_rows.append(eye[r])
        h_vals.append(model.u_max)
        G_rows.append(-eye[r])
        h_vals.append(model.u_max)

    obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    if len(obstacles) and r_safe > 0.0:
        start = model.position(x0)
        heading = p_base - start
        h_norm = float(np.linalg.norm(heading))
        fallback = (np.array([-heading[1], heading[0]]) / h_norm
                    if h_norm > 1e-9 else np.array([1.0, 0.0]))
        for l in range(1, T + 1):
            seed = start + (l / T) * (p_base - start)
            for o in obstacles:
                direction = _seed_direction(seed, o, fallback)
                # direction . pos_l >= direction . o + r_safe
                row = -(direction[0] * Gm[l * nx + 0] + direction[1] * Gm[l * nx + 1])
                bound = -(float(direction @ o) + r_safe
                          - direction[0] * Phi[l][0] - direction[1] * Phi[l][1])
                G_rows.append(row)
                h_vals.append(bound)

    result = qp.solve_qp(H, q, A_eq, b_eq, np.vstack(G_rows), np.asarray(h_vals),
                         max_iter=max_iter)
    if result.status == qp.INFEASIBLE:
        return None
    if result.status == qp.MAX_ITERATIONS:
        raise SolverFailure(f"probe at T={T} hit the iteration limit")
    U = result.x.reshape(T, nu)
    states = (Phi.ravel() + Gm @ result.x).reshape(T + 1, nx)
    return states, U


def plan_energy(inputs: np.ndarray, tau: int, mu: float, gamma: float) -> float:
    """Energy over the horizon: sum of mu*||u||^2 + gamma per step."""
    if tau == 0:
        return 0.0
    return float(mu * np.sum(np.asarray(inputs) ** 2) + gamma * tau)


def min_time_return(x0, p_base, model: RobotModel, obstacles=(), *,
                    mu: float, gamma: float, r_safe: float = 0.0,
                    t_max: int | None = None, tau_hint: int | None = None) -> ReturnPlan:
    """Smallest-horizon feasible return trajectory and its energy total.

    The least-effort objective inside the probe makes the plan unique and
    keeps its energy minimal among minimum-time solutions, so the guard it
    feeds errs toward firing earlier, never later.
    """
    x0 = np.asarray(x0, dtype=float)
    t_max = t_max if t_max is not None else default_max_horizon(model)

    def probe(T):
        return feasibility_probe(T, x0, p_base, model, obstacles, r_safe)

    traj = probe(0)
    if traj is not None:
        return _finish(traj, 0, model, p_base, mu, gamma)

    lo, hi, best = 0, None, None
    if tau_hint is not None and 0 < tau_hint <= t_max:
        cand = probe(tau_hint)
        if cand is not None:
            below = probe(tau_hint - 1) if tau_hint - 1 > 0 else None
            if below is None:
                return _finish(cand, tau_hint, model, p_base, mu, gamma)
            hi, best = tau_hint - 1, below
            lo = 0
        else:
            lo = tau_hint
    if hi is None:
        t = max(1, lo + 1)
        while t <= t_max:
            cand = probe(t)
            if cand is not None:
                hi, best = t, cand
                break
            lo = t
            t = min(2 * t, t_max) if t < t_max else t_max + 1
        if hi is None:
            raise Unreachable(f"no feasible return within {t_max} steps")
    while hi - lo > 1:
        mid = (hi + lo) // 2
        cand = probe(mid)
        if cand is not None:
            hi, best = mid, cand
        else:
            lo = mid
    return _finish(best, hi, model, p_base, mu, gamma)


def _finish(traj, tau, model, p_base, mu, gamma) -> ReturnPlan:
    states, inputs = traj
    plan = ReturnPlan(states=states, inputs=inputs, tau_star=tau,
                      energy_required=plan_energy(inputs, tau, mu, gamma))
    plan.validate(model, p_base, base_radius=TERMINAL_TOL * 10)
    return plan


def follow_plan(plan: ReturnPlan, k_offset: int) -> np.ndarray:
    """Open-loop input at the given offset into the plan."""
    if k_offset >= plan.tau_star:
        raise PlanExhausted(f"offset {k_offset} >= tau_star {plan.tau_star}")
    return np.asarray(plan.inputs[k_offset], dtype=float)
