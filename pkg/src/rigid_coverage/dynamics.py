"""Discrete-time robot models shared by the planner and the MPC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelUnsupported

SINGLE_INTEGRATOR = "single_integrator"
DOUBLE_INTEGRATOR = "double_integrator"


@dataclass(frozen=True)
class RobotModel:
    """Linear planar robot with box bounds on position, velocity and input.

    The double integrator uses the exact zero-order-hold discretization
    pos+ = pos + dt*v + dt^2/2 * u,  v+ = v + dt*u.
    """

    kind: str
    dt: float
    pos_min: tuple[float, float]
    pos_max: tuple[float, float]
    v_max: float
    u_max: float

    def __post_init__(self):
        if self.kind not in (SINGLE_INTEGRATOR, DOUBLE_INTEGRATOR):
            raise ModelUnsupported(f"unknown model kind {self.kind!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def nx(self) -> int:
        return 2 if self.kind == SINGLE_INTEGRATOR else 4

    @property
    def nu(self) -> int:
        return 2

    @property
    def A(self) -> np.ndarray:
        dt = self.dt
        if self.kind == SINGLE_INTEGRATOR:
            return np.eye(2)
        A = np.eye(4)
        A[0, 2] = dt
        A[1, 3] = dt
        return A

    @property
    def B(self) -> np.ndarray:
        dt = self.dt
        if self.kind == SINGLE_INTEGRATOR:
            return dt * np.eye(2)
        return np.vstack([0.5 * dt * dt * np.eye(2), dt * np.eye(2)])

    @property
    def C(self) -> np.ndarray:
        """Output map extracting position."""
        return np.eye(2, self.nx)

    @property
    def steady_embed(self) -> np.ndarray:
        """S with x_steady = S @ r: position r, zero velocity, u_steady = 0."""
        return np.eye(self.nx, 2)

    def position(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float)[:2]

    def velocity(self, x: np.ndarray) -> np.ndarray:
        if self.kind == SINGLE_INTEGRATOR:
            return np.zeros(2)
        return np.asarray(x, float)[2:4]

    def state(self, pos, vel=(0.0, 0.0)) -> np.ndarray:
        if self.kind == SINGLE_INTEGRATOR:
            return np.asarray(pos, dtype=float).copy()
        return np.concatenate([np.asarray(pos, float), np.asarray(vel, float)])

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u

    def diagonal(self) -> float:
        lo = np.asarray(self.pos_min, float)
        hi = np.asarray(self.pos_max, float)
        return float(np.linalg.norm(hi - lo))


def condense(model: RobotModel, x0: np.ndarray, T: int):
    """Stacked prediction maps: x_l = Phi[l] + (Gm @ U)[l] for l = 0..T.

    Phi has shape (T+1, nx); Gm has shape ((T+1)*nx, T*nu) and is block
    lower triangular.
    """
    A, B = model.A, model.B
    nx, nu = model.nx, model.nu
    x0 = np.asarray(x0, dtype=float)
    Phi = np.zeros((T + 1, nx))
    Phi[0] = x0
    Gm = np.zeros(((T + 1) * nx, T * nu))
    for l in range(1, T + 1):
        Phi[l] = A @ Phi[l - 1]
        Gm[l * nx:(l + 1) * nx] = A @ Gm[(l - 1) * nx:l * nx]
        Gm[l * nx:(l + 1) * nx, (l - 1) * nu:l * nu] = B
    return Phi, Gm


_GM_CACHE: dict[tuple, np.ndarray] = {}


def input_map(model: RobotModel, T: int) -> np.ndarray:
    """Cached input-to-state map Gm for zero initial state."""
    key = (model.kind, model.dt, T)
    Gm = _GM_CACHE.get(key)
    if Gm is None:
        Gm = condense(model, np.zeros(model.nx), T)[1]
        if len(_GM_CACHE) > 32:
            _GM_CACHE.clear()
        _GM_CACHE[key] = Gm
    return Gm


def free_response(model: RobotModel, x0: np.ndarray, T: int) -> np.ndarray:
    """Phi rows only: state trajectory under zero input."""
    A = model.A
    Phi = np.zeros((T + 1, model.nx))
    Phi[0] = np.asarray(x0, dtype=float)
    for l in range(1, T + 1):
        Phi[l] = A @ Phi[l - 1]
    return Phi
