"""Dense convex quadratic programming.

Solves  min 1/2 x^T H x + q^T x  s.t.  A x = b,  G x <= h  with H strictly
positive definite. Equalities are eliminated through a null-space basis;
the reduced inequality problem is solved with a dual active-set method
(start at the unconstrained minimum, add violated constraints, take
partial dual steps when a multiplier would go negative). The dual method
needs no feasible starting point and certifies infeasibility when a
violated constraint admits no primal or dual step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

FEAS_TOL = 1e-10
STEP_TOL = 1e-11

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"


@dataclass
class QpResult:
    x: np.ndarray
    status: str
    iterations: int
    kkt_residual: float
    # multipliers for G x <= h (zero on inactive rows) and for A x = b
    ineq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _dual_active_set(H, q, C, d, max_iter):
    """min 1/2 x^T H x + q^T x  s.t.  C x >= d. Returns (x, u, active, status, iters)."""
    n = H.shape[0]
    LH = cho_factor(H, lower=True)
    x = -cho_solve(LH, q)
    k = C.shape[0]
    active: list[int] = []
    u = np.zeros(0)
    if k == 0:
        return x, u, active, OPTIMAL, 0
    scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    feas = FEAS_TOL * scale

    def refine():
        """Exact (x, u) for the current active set; drops any constraint whose
        refined multiplier goes negative. Removes drift from partial steps."""
        nonlocal x, u, active
        while True:
            if not active:
                x = -cho_solve(LH, q)
                u = np.zeros(0)
                return
            N = C[active].T
            B = cho_solve(LH, N)
            W = N.T @ B
            rhs = d[active] + N.T @ cho_solve(LH, q)
            try:
                u_new = np.linalg.solve(W, rhs)
            except np.linalg.LinAlgError:
                u_new = np.linalg.lstsq(W, rhs, rcond=None)[0]
            if np.min(u_new) < -FEAS_TOL:
                worst = int(np.argmin(u_new))
                del active[worst]
                continue
            u = u_new
            x = cho_solve(LH, N @ u - q)
            return

    iters = 0
    while iters < max_iter:
        iters += 1
        refine()
        s = C @ x - d
        if active:
            s[active] = 0.0  # tight by construction after refinement
        p = int(np.argmin(s))
        if s[p] >= -feas:
            return x, u, active, OPTIMAL, iters
        n_p = C[p]
        u_p = 0.0
        while True:
            if active:
                N = C[active].T
                B = cho_solve(LH, N)
                w = cho_solve(LH, n_p)
                W = N.T @ B
                try:
                    r = np.linalg.solve(W, N.T @ w)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(W, N.T @ w, rcond=None)[0]
                z = w - B @ r
            else:
                r = np.zeros(0)
                z = cho_solve(LH, n_p)
            # dual step bound: first active multiplier driven to zero
            t1 = np.inf
            drop = -1
            for idx in range(len(active)):
                if r[idx] > STEP_TOL and u[idx] / r[idx] < t1:
                    t1 = u[idx] / r[idx]
                    drop = idx
            # primal step: distance until constraint p becomes tight
            ztn = float(z @ n_p)
            s_p = float(n_p @ x - d[p])
            t2 = np.inf if ztn <= STEP_TOL else -s_p / ztn
            t = min(t1, t2)
            if not np.isfinite(t):
                return x, u, active, INFEASIBLE, iters
            if not np.isfinite(t2):
                # dual-only step: drop the blocking constraint, retry
                u = u - t * r
                u_p += t
                del active[drop]
                u = np.delete(u, drop)
                continue
            x = x + t * z
            u_p += t
            if len(active):
                u = u - t * r
            if t2 <= t1:
                active.append(p)
                u = np.append(u, u_p)
                break
            del active[drop]
            u = np.delete(u, drop)
    return x, u, active, MAX_ITERATIONS, iters


def kkt_residual(H, q, A, b, G, h, x, lam, nu) -> float:
    """Max-norm KKT residual: stationarity, feasibility, complementarity."""
    grad = H @ x + q
    if A is not None and A.size:
        grad = grad + A.T @ nu
    if G is not None and G.size:
        grad = grad + G.T @ lam
    res = float(np.max(np.abs(grad)))
    if A is not None and A.size:
        res = max(res, float(np.max(np.abs(A @ x - b))))
    if G is not None and G.size:
        slack = G @ x - h
        res = max(res, float(np.max(slack.clip(min=0.0))))
        res = max(res, float(np.max(np.abs(lam * slack))))
    return res


def solve_qp(H, q, A=None, b=None, G=None, h=None, max_iter: int = 0) -> QpResult:
    """Solve the QP; H must be symmetric positive definite.

    max_iter 0 picks a budget proportional to the constraint count.
    """
    H = np.asarray(H, dtype=float)
    q = np.asarray(q, dtype=float)
    n = H.shape[0]
    has_eq = A is not None and np.size(A) > 0
    has_ineq = G is not None and np.size(G) > 0
    A = np.asarray(A, dtype=float).reshape(-1, n) if has_eq else None
    b = np.asarray(b, dtype=float).ravel() if has_eq else None
    G = np.asarray(G, dtype=float).reshape(-1, n) if has_ineq else None
    h = np.asarray(h, dtype=float).ravel() if has_ineq else None
    if max_iter <= 0:
        max_iter = 10 * (n + (G.shape[0] if has_ineq else 0) + 10)

    if has_eq:
        # x = x0 + Z y with Z an orthonormal null-space basis of A
        Qf, Rf = np.linalg.qr(A.T, mode="complete")
        diag = np.abs(np.diag(Rf[: min(A.shape), :])) if min(A.shape) else np.zeros(0)
        rank = int(np.sum(diag > 1e-12 * (diag.max() if diag.size else 1.0)))
        x0 = np.linalg.lstsq(A, b, rcond=None)[0]
        if np.linalg.norm(A @ x0 - b) > 1e-8 * max(1.0, np.linalg.norm(b)):
            return QpResult(x0, INFEASIBLE, 0, np.inf)
        Z = Qf[:, rank:]
        if Z.shape[1] == 0:
            x = x0
            lam = np.zeros(G.shape[0]) if has_ineq else np.zeros(0)
            if has_ineq and np.any(G @ x - h > FEAS_TOL * max(1.0, np.max(np.abs(h)))):
                return QpResult(x, INFEASIBLE, 0, np.inf)
            nu = _recover_eq_multipliers(H, q, A, G, x, lam)
            return QpResult(x, OPTIMAL, 0, kkt_residual(H, q, A, b, G, h, x, lam, nu),
                            lam, nu)
        Hr = Z.T @ H @ Z
        qr_ = Z.T @ (H @ x0 + q)
        Cr = -(G @ Z) if has_ineq else np.zeros((0, Z.shape[1]))
        dr = -(h - G @ x0) if has_ineq else np.zeros(0)
    else:
        Z = None
        x0 = np.zeros(n)
        Hr, qr_ = H, q
        Cr = -G if has_ineq else np.zeros((0, n))
        dr = -h if has_ineq else np.zeros(0)

    y, u, active, status, iters = _dual_active_set(Hr, qr_, Cr, dr, max_iter)
    x = x0 + (Z @ y if Z is not None else y)
    lam = np.zeros(G.shape[0]) if has_ineq else np.zeros(0)
    for idx, row in enumerate(active):
        lam[row] = u[idx]
    nu = _recover_eq_multipliers(H, q, A if has_eq else None, G if has_ineq else None, x, lam)
    res = np.inf
    if status in (OPTIMAL, MAX_ITERATIONS):
        res = kkt_residual(H, q, A if has_eq else None, b, G if has_ineq else None, h,
                           x, lam, nu)
    return QpResult(x, status, iters, res, lam, nu)


def _recover_eq_multipliers(H, q, A, G, x, lam):
    if A is None or A.size == 0:
        return np.zeros(0)
    rhs = -(H @ x + q)
    if G is not None and G.size:
        rhs = rhs - G.T @ lam
    return np.linalg.lstsq(A.T, rhs, rcond=None)[0]
