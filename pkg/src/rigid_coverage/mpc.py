"""Per-robot tracking MPC with artificial reference and bearing costs.

The optimizer decides the input sequence and an artificial position
reference r_bar. The predicted terminal state must equal the steady state
of r_bar (position r_bar, zero velocity), which realizes the invariant
terminal set; r_bar itself is box-constrained, so when the true centroid
is unreachable the artificial reference relocates to the closest
admissible point instead of making the problem infeasible. Bearing
maintenance enters as convex projector quadratics ||P_g (a_j - r_bar)||^2
anchored at the neighbors' current centroids: zero exactly when r_bar
sees anchor a_j along the desired bearing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qp
from .dynamics import RobotModel, free_response, input_map
from .errors import Infeasible, MaxIterations
from .rigidity import Graph, bearing_of


@dataclass(frozen=True)
class MpcConfig:
    N: int
    Q: np.ndarray               # stage state weight (nx, nx)
    R: np.ndarray               # input weight (nu, nu)
    P: np.ndarray               # terminal weight (nx, nx)
    T_w: float                  # tracking weight on (r - r_bar)
    lam: float                  # blend in (0, 1]: 1 = pure tracking
    tol: float = 1e-8
    max_iter: int = 400

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("horizon must be at least 2")
        if not (0.0 < self.lam <= 1.0):
            raise ValueError("lambda must lie in (0, 1]")
        if self.T_w <= 0.0:
            raise ValueError("tracking weight must be positive")
        for name, M in (("Q", self.Q), ("R", self.R), ("P", self.P)):
            M = np.asarray(M, float)
            if np.min(np.linalg.eigvalsh((M + M.T) / 2)) <= 0:
                raise ValueError(f"{name} must be positive definite")


@dataclass(frozen=True)
class BearingTargets:
    """Desired unit bearings toward each neighbor and their anchor points."""

    bearings: np.ndarray   # (k, 2)
    anchors: np.ndarray    # (k, 2)

    @classmethod
    def empty(cls) -> "BearingTargets":
        return cls(np.zeros((0, 2)), np.zeros((0, 2)))


@dataclass
class MpcProblem:
    H: np.ndarray
    q: np.ndarray
    const: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    G: np.ndarray
    h: np.ndarray
    model: RobotModel
    N: int
    Phi: np.ndarray
    Gm: np.ndarray
    x0: np.ndarray


@dataclass
class MpcSolution:
    inputs: np.ndarray          # (N, nu)
    states: np.ndarray          # (N+1, nx)
    r_bar: np.ndarray           # artificial position reference
    x_bar: np.ndarray           # steady state of r_bar
    u_bar: np.ndarray           # steady input (zero for these models)
    objective: float
    kkt_residual: float
    iterations: int


def desired_bearings(centroids, graph: Graph, robot: int) -> BearingTargets:
    """Bearings the robot should hold toward its graph neighbors, evaluated
    on the current centroid set; anchors are the neighbors' centroids."""
    r = np.asarray(centroids, dtype=float)
    nbrs = graph.neighbors(robot)
    if not nbrs:
        return BearingTargets.empty()
    bearings = np.array([bearing_of(r[robot], r[j]) for j in nbrs])
    anchors = r[list(nbrs)]
    return BearingTargets(bearings=bearings, anchors=anchors)


def build_qp(x_k, r_ik, targets: BearingTargets, model: RobotModel,
             cfg: MpcConfig) -> MpcProblem:
    """Assemble the condensed QP over z = (u_0 .. u_{N-1}, r_bar)."""
    x0 = np.asarray(x_k, dtype=float)
    r_ref = np.asarray(r_ik, dtype=float)
    N, nx, nu = cfg.N, model.nx, model.nu
    nz = N * nu + 2
    S = model.steady_embed

    Phi = free_response(model, x0, N)
    Gm = input_map(model, N)

    H = np.zeros((nz, nz))
    q = np.zeros(nz)
    const = 0.0

    def accumulate(Mmat, offset, W):
        # term (Mmat @ z + offset)^T W (Mmat @ z + offset)
        H[:, :] += 2.0 * (Mmat.T @ (W @ Mmat))
        q[:] += 2.0 * (Mmat.T @ (W @ offset))
        return float(offset @ (W @ offset))

    Q = np.asarray(cfg.Q, float)
    R = np.asarray(cfg.R, float)
    P = np.asarray(cfg.P, float)

    for l in range(N + 1):
        W = Q if l < N else P
        Mmat = np.zeros((nx, nz))
        Mmat[:, :N * nu] = Gm[l * nx:(l + 1) * nx]
        Mmat[:, N * nu:] = -S
        const += accumulate(Mmat, Phi[l], W)
    for l in range(N):
        Mmat = np.zeros((nu, nz))
        Mmat[:, l * nu:(l + 1) * nu] = np.eye(nu)
        const += accumulate(Mmat, np.zeros(nu), R)
    # tracking: lam * T_w * ||r_ref - r_bar||^2
    Mr = np.zeros((2, nz))
    Mr[:, N * nu:] = -np.eye(2)
    const += accumulate(Mr, r_ref, cfg.lam * cfg.T_w * np.eye(2))
    # bearing maintenance: (1-lam) * sum ||P_g (a_j - r_bar)||^2
    if len(targets.bearings) and cfg.lam < 1.0:
        for g, a in zip(targets.bearings, targets.anchors):
            Pg = np.eye(2) - np.outer(g, g)
            const += accumulate(Mr, a, (1.0 - cfg.lam) * Pg)

    # terminal equality: x_N = S r_bar
    A_eq = np.zeros((nx, nz))
    A_eq[:, :N * nu] = Gm[N * nx:(N + 1) * nx]
    A_eq[:, N * nu:] = -S
    b_eq = -Phi[N]

    pos_min = np.asarray(model.pos_min, float)
    pos_max = np.asarray(model.pos_max, float)
    G_rows, h_vals = [], []
    for l in range(1, N + 1):
        base = l * nx
        for d in range(2):
            row = np.zeros(nz)
            row[:N * nu] = Gm[base + d]
            G_rows.append(row.copy())
            h_vals.append(pos_max[d] - Phi[l][d])
            G_rows.append(-row)
            h_vals.append(Phi[l][d] - pos_min[d])
        if nx == 4:
            for d in range(2, 4):
                row = np.zeros(nz)
                row[:N * nu] = Gm[base + d]
                G_rows.append(row.copy())
                h_vals.append(model.v_max - Phi[l][d])
                G_rows.append(-row)
                h_vals.append(model.v_max + Phi[l][d])
    for r in range(N * nu):
        row = np.zeros(nz)
        row[r] = 1.0
        G_rows.append(row.copy())
        h_vals.append(model.u_max)
        G_rows.append(-row)
        h_vals.append(model.u_max)
    for d in range(2):
        row = np.zeros(nz)
        row[N * nu + d] = 1.0
        G_rows.append(row.copy())
        h_vals.append(pos_max[d])
        G_rows.append(-row)
        h_vals.append(-pos_min[d])

    return MpcProblem(H=H, q=q, const=const, A_eq=A_eq, b_eq=b_eq,
                      G=np.vstack(G_rows), h=np.asarray(h_vals),
                      model=model, N=N, Phi=Phi, Gm=Gm, x0=x0)


def solve_qp(problem: MpcProblem, cfg: MpcConfig) -> MpcSolution:
    """Solve the assembled MPC problem to the configured KKT residual."""
    result = qp.solve_qp(problem.H, problem.q, problem.A_eq, problem.b_eq,
                         problem.G, problem.h, max_iter=cfg.max_iter)
    if result.status == qp.INFEASIBLE:
        raise Infeasible("terminal and box constraints are inconsistent")
    solution = _unpack(problem, result)
    if result.status == qp.MAX_ITERATIONS or solution.kkt_residual > cfg.tol:
        raise MaxIterations(
            f"solver stopped at residual {solution.kkt_residual:.2e}", solution)
    return solution


def _unpack(problem: MpcProblem, result: qp.QpResult) -> MpcSolution:
    N, nu, nx = problem.N, problem.model.nu, problem.model.nx
    z = result.x
    U = z[:N * nu].reshape(N, nu)
    r_bar = z[N * nu:]
    states = (problem.Phi.ravel() + problem.Gm @ z[:N * nu]).reshape(N + 1, nx)
    x_bar = problem.model.steady_embed @ r_bar
    objective = 0.5 * float(z @ problem.H @ z) + float(problem.q @ z) + problem.const
    return MpcSolution(inputs=U, states=states, r_bar=r_bar, x_bar=x_bar,
                       u_bar=np.zeros(nu), objective=objective,
                       kkt_residual=result.kkt_residual, iterations=result.iterations)


def mpc_control(x_k, r_ik, targets: BearingTargets, model: RobotModel,
                cfg: MpcConfig) -> np.ndarray:
    """Receding-horizon law: first input of the optimal sequence.

    On an iteration-limited solve the best iterate's first input is
    returned (liveness over optimality); infeasibility propagates.
    """
    u, _, _ = mpc_step(x_k, r_ik, targets, model, cfg)
    return u


def mpc_step(x_k, r_ik, targets: BearingTargets, model: RobotModel, cfg: MpcConfig):
    """Like mpc_control but also returns the full solution and a warning."""
    problem = build_qp(x_k, r_ik, targets, model, cfg)
    warning = None
    try:
        solution = solve_qp(problem, cfg)
    except MaxIterations as exc:
        solution = exc.solution
        warning = str(exc)
    return np.asarray(solution.inputs[0], dtype=float), solution, warning
