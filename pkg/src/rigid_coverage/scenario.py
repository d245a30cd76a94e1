"""Scenario configuration: schema, validation, defaults."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coverage import MissionSpace
from .dynamics import DOUBLE_INTEGRATOR, RobotModel
from .energy import EnergyParams, default_guard_margin
from .errors import ConfigError, DegeneratePolygon
from .mpc import MpcConfig


@dataclass
class ScenarioConfig:
    space: MissionSpace
    n_robots: int
    p_base: np.ndarray
    model: RobotModel
    energy: EnergyParams
    mpc: MpcConfig
    steps: int
    seed: int
    initial_positions: np.ndarray | None = None
    initial_socs: np.ndarray | None = None
    r_safe: float = 0.2
    replan_every: int = 5
    stale_tol: float = 0.05
    energy_enabled: bool = True
    dump_cells: bool = False
    verbose_solver: bool = False

    def validate(self) -> None:
        if self.n_robots < 1:
            raise ConfigError("need at least one robot")
        if self.steps < 1:
            raise ConfigError("steps must be positive")
        if not self.space.contains(self.p_base):
            raise ConfigError("base must lie inside the mission space")
        lo, hi = self.space.bounding_box()
        if (np.any(np.asarray(self.model.pos_min) > lo + 1e-9)
                or np.any(np.asarray(self.model.pos_max) < hi - 1e-9)):
            raise ConfigError("model position box must cover the mission space")
        if self.initial_positions is not None:
            if len(self.initial_positions) != self.n_robots:
                raise ConfigError("initial_positions length mismatch")
            for p in self.initial_positions:
                if not self.space.contains(p):
                    raise ConfigError(f"initial position {p} outside mission space")
        if self.initial_socs is not None:
            if len(self.initial_socs) != self.n_robots:
                raise ConfigError("initial_socs length mismatch")
            if np.any(self.initial_socs < 0) or np.any(self.initial_socs > 1):
                raise ConfigError("initial SOCs must lie in [0, 1]")
        if self.replan_every < 1:
            raise ConfigError("replan_every must be >= 1")


def _space_from(obj) -> MissionSpace:
    try:
        return MissionSpace.make(obj)
    except DegeneratePolygon as exc:
        raise ConfigError(f"mission space invalid: {exc}") from exc


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Build and validate a scenario from plain JSON data."""
    try:
        space = _space_from(raw["space"])
        n = int(raw["n_robots"])
        p_base = np.asarray(raw["p_base"], dtype=float)
        lo, hi = space.bounding_box()
        model_raw = raw.get("model", {})
        model = RobotModel(
            kind=model_raw.get("kind", DOUBLE_INTEGRATOR),
            dt=float(model_raw.get("dt", 0.1)),
            pos_min=tuple(model_raw.get("pos_min", lo.tolist())),
            pos_max=tuple(model_raw.get("pos_max", hi.tolist())),
            v_max=float(model_raw.get("v_max", 1.5)),
            u_max=float(model_raw.get("u_max", 2.0)),
        )
        en = raw.get("energy", {})
        mu = float(en.get("mu", 4e-4))
        gamma = float(en.get("gamma", 1e-3))
        margin = en.get("guard_margin")
        energy = EnergyParams(
            mu=mu,
            gamma=gamma,
            s_th=float(en.get("s_th", 1.0)),
            rho_c=float(en.get("rho_c", 5e-3)),
            s_max=float(en.get("s_max", 1.0)),
            guard_margin=(float(margin) if margin is not None
                          else default_guard_margin(mu, gamma, model.u_max)),
            base_radius=float(en.get("base_radius", 0.3)),
        )
        mp = raw.get("mpc", {})
        nx = model.nx
        q_diag = mp.get("q_diag", [10.0, 10.0, 1.0, 1.0][:nx])
        p_diag = mp.get("p_diag", q_diag)
        mpc_cfg = MpcConfig(
            N=int(mp.get("N", 15)),
            Q=np.diag(np.asarray(q_diag, dtype=float)),
            R=np.diag(np.asarray(mp.get("r_diag", [0.5, 0.5]), dtype=float)),
            P=np.diag(np.asarray(p_diag, dtype=float)),
            T_w=float(mp.get("t_w", 20.0)),
            lam=float(mp.get("lambda", 0.75)),
            tol=float(mp.get("tol", 1e-8)),
            max_iter=int(mp.get("max_iter", 400)),
        )
        init_pos = raw.get("initial_positions")
        init_socs = raw.get("initial_socs")
        cfg = ScenarioConfig(
            space=space,
            n_robots=n,
            p_base=p_base,
            model=model,
            energy=energy,
            mpc=mpc_cfg,
            steps=int(raw.get("steps", 500)),
            seed=int(raw.get("seed", 0)),
            initial_positions=(np.asarray(init_pos, dtype=float)
                               if init_pos is not None else None),
            initial_socs=(np.asarray(init_socs, dtype=float)
                          if init_socs is not None else None),
            r_safe=float(raw.get("r_safe", 0.2)),
            replan_every=int(raw.get("replan_every", 5)),
            stale_tol=float(raw.get("stale_tol", 0.05)),
            energy_enabled=bool(raw.get("energy_enabled", True)),
            dump_cells=bool(raw.get("dump_cells", False)),
            verbose_solver=bool(raw.get("verbose_solver", False)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario field: {exc}") from exc
    cfg.validate()
    return cfg


def config_from_json(path) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("scenario JSON must be an object")
    return config_from_dict(raw)


def default_scenario(n_robots: int = 10, steps: int = 2000, seed: int = 7,
                     **overrides) -> ScenarioConfig:
    """Canonical 10x10 arena scenario used by the acceptance runs."""
    raw = {
        "space": [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
        "n_robots": n_robots,
        "p_base": [0.6, 0.6],
        "steps": steps,
        "seed": seed,
    }
    raw.update(overrides)
    return config_from_dict(raw)


def draw_initial_conditions(cfg: ScenarioConfig, rng: np.random.Generator):
    """Initial positions (inside the space) and SOCs, honoring explicit
    values from the config when present."""
    if cfg.initial_positions is not None:
        positions = np.asarray(cfg.initial_positions, dtype=float).copy()
    else:
        lo, hi = cfg.space.bounding_box()
        positions = np.zeros((cfg.n_robots, 2))
        for i in range(cfg.n_robots):
            for _ in range(10000):
                cand = lo + rng.random(2) * (hi - lo)
                far_enough = all(np.linalg.norm(cand - positions[j]) > 1e-3
                                 for j in range(i))
                if cfg.space.contains(cand) and far_enough:
                    positions[i] = cand
                    break
            else:
                raise ConfigError("could not sample distinct initial positions")
    if cfg.initial_socs is not None:
        socs = np.asarray(cfg.initial_socs, dtype=float).copy()
    else:
        socs = 0.35 + 0.65 * rng.random(cfg.n_robots)
    return positions, socs
