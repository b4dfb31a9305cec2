"""Discrete-time vehicle models.

All models are explicit-Euler discretizations of the continuous dynamics
(the quadcopter can optionally use RK4) and are vectorized over arbitrary
leading batch dimensions.  Control clamping to the model's limits is part
of the step contract.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class DynamicsKind(str, enum.Enum):
    DOUBLE_INTEGRATOR_2D = "double_integrator_2d"
    DUBINS = "dubins"
    QUADCOPTER12 = "quadcopter12"


_DIMS = {
    DynamicsKind.DOUBLE_INTEGRATOR_2D: (4, 2),
    DynamicsKind.DUBINS: (3, 2),
    DynamicsKind.QUADCOPTER12: (12, 4),
}

_STATE_NAMES = {
    DynamicsKind.DOUBLE_INTEGRATOR_2D: ["px", "py", "vx", "vy"],
    DynamicsKind.DUBINS: ["px", "py", "heading"],
    DynamicsKind.QUADCOPTER12: [
        "px", "py", "pz", "vx", "vy", "vz",
        "roll", "pitch", "yaw", "wx", "wy", "wz",
    ],
}

_CONTROL_NAMES = {
    DynamicsKind.DOUBLE_INTEGRATOR_2D: ["ax", "ay"],
    DynamicsKind.DUBINS: ["speed", "turn_rate"],
    DynamicsKind.QUADCOPTER12: ["thrust", "tau_x", "tau_y", "tau_z"],
}


@dataclass(frozen=True)
class DynamicsModel:
    kind: DynamicsKind
    dt: float = 0.1
    control_limits: np.ndarray | None = None     # (n_u, 2) [low, high] rows
    mass: float = 1.0
    gravity: float = 9.81
    inertia: tuple[float, float, float] = (0.01, 0.01, 0.02)
    integrator: str = "euler"                    # quadcopter also accepts "rk4"

    def __post_init__(self):
        if not isinstance(self.kind, DynamicsKind):
            object.__setattr__(self, "kind", DynamicsKind(self.kind))
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.control_limits is not None:
            lim = np.asarray(self.control_limits, dtype=float)
            if lim.shape != (self.n_u, 2) or not (lim[:, 0] < lim[:, 1]).all():
                raise ValueError("control_limits must be (n_u, 2) with low < high")
            object.__setattr__(self, "control_limits", lim)

    @property
    def n_x(self) -> int:
        return _DIMS[self.kind][0]

    @property
    def n_u(self) -> int:
        return _DIMS[self.kind][1]

    @property
    def position_dim(self) -> int:
        """Dimension of the position block used for collision checks."""
        return 3 if self.kind is DynamicsKind.QUADCOPTER12 else 2


def state_names(model: DynamicsModel) -> list[str]:
    return list(_STATE_NAMES[model.kind])


def control_names(model: DynamicsModel) -> list[str]:
    return list(_CONTROL_NAMES[model.kind])


def nominal_control(model: DynamicsModel) -> np.ndarray:
    """Control that keeps the model near equilibrium (hover thrust for quads)."""
    u = np.zeros(model.n_u)
    if model.kind is DynamicsKind.QUADCOPTER12:
        u[0] = model.mass * model.gravity
    return clamp_controls(model, u)


def clamp_controls(model: DynamicsModel, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if model.control_limits is None:
        return u
    return np.clip(u, model.control_limits[:, 0], model.control_limits[:, 1])


def positions(model: DynamicsModel, x: np.ndarray) -> np.ndarray:
    """Position block of the state, (..., position_dim)."""
    return np.asarray(x)[..., : model.position_dim]


def _derivative(model: DynamicsModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    kind = model.kind
    dx = np.empty_like(x)
    if kind is DynamicsKind.DOUBLE_INTEGRATOR_2D:
        dx[..., 0] = x[..., 2]
        dx[..., 1] = x[..., 3]
        dx[..., 2] = u[..., 0]
        dx[..., 3] = u[..., 1]
        return dx
    if kind is DynamicsKind.DUBINS:
        v, w = u[..., 0], u[..., 1]
        th = x[..., 2]
        dx[..., 0] = v * np.cos(th)
        dx[..., 1] = v * np.sin(th)
        dx[..., 2] = w
        return dx
    if kind is DynamicsKind.QUADCOPTER12:
        g, m = model.gravity, model.mass
        jx, jy, jz = model.inertia
        roll, pitch, yaw = x[..., 6], x[..., 7], x[..., 8]
        wx, wy, wz = x[..., 9], x[..., 10], x[..., 11]
        thrust = u[..., 0]
        sr, cr = np.sin(roll), np.cos(roll)
        sp, cp = np.sin(pitch), np.cos(pitch)
        sy, cy = np.sin(yaw), np.cos(yaw)
        # velocity
        dx[..., 0] = x[..., 3]
        dx[..., 1] = x[..., 4]
        dx[..., 2] = x[..., 5]
        # acceleration: gravity plus thrust along the body z axis
        a = thrust / m
        dx[..., 3] = a * (cr * sp * cy + sr * sy)
        dx[..., 4] = a * (cr * sp * sy - sr * cy)
        dx[..., 5] = a * (cr * cp) - g
        # Euler-angle kinematics
        tp = np.tan(pitch)
        dx[..., 6] = wx + sr * tp * wy + cr * tp * wz
        dx[..., 7] = cr * wy - sr * wz
        dx[..., 8] = (sr * wy + cr * wz) / np.cos(pitch)
        # body rates
        dx[..., 9] = ((jy - jz) * wy * wz + u[..., 1]) / jx
        dx[..., 10] = ((jz - jx) * wx * wz + u[..., 2]) / jy
        dx[..., 11] = ((jx - jy) * wx * wy + u[..., 3]) / jz
        return dx
    raise ValueError(f"unknown dynamics kind {kind}")  # pragma: no cover


def step_unchecked(model: DynamicsModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One integration step without finiteness validation (NaNs propagate)."""
    x = np.asarray(x, dtype=float)
    u = clamp_controls(model, u)
    dt = model.dt
    if model.integrator == "rk4":
        k1 = _derivative(model, x, u)
        k2 = _derivative(model, x + 0.5 * dt * k1, u)
        k3 = _derivative(model, x + 0.5 * dt * k2, u)
        k4 = _derivative(model, x + dt * k3, u)
        return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x + dt * _derivative(model, x, u)


def step(model: DynamicsModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One integration step; raises on non-finite inputs."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(u)):
        raise ValueError("dynamics step requires finite state and control")
    return step_unchecked(model, x, u)
