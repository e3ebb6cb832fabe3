"""Discrete-time affine dynamics: generic abstraction plus the differential-drive model.

The state update is x' = F(x) + G(x) @ nu with the step duration dt already
folded into F and G, so nu carries physical units (m/s, rad/s).  For the
differential drive F(x) = x and

    G(theta) = dt * [[cos(theta), 0],
                     [sin(theta), 0],
                     [0,          1]]

which makes the per-step displacement exactly dt * |v| and the heading change
exactly dt * |w|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi


class AgentState(NamedTuple):
    """Planar pose of one robot. Heading is kept in (-pi, pi]."""

    px: float
    py: float
    theta: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.px, self.py])

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta])


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    return -((np.pi - theta) % TWO_PI - np.pi)


@dataclass(frozen=True)
class ActuationNoise:
    """Per-component standard deviations of the control execution error."""

    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if np.any(sigma < 0.0):
            raise ValueError(f"noise stddevs must be >= 0, got {sigma}")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class DynamicsModel:
    """Affine discrete-time system x' = drift(x) + actuation(x) @ nu.

    Rows 0-1 of the actuation matrix correspond to px, py; drift returns the
    full next-state contribution (including x itself for drift-free models).
    ``kind`` is "diffdrive" for the built-in model, letting hot paths use the
    closed-form update instead of the callables.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    actuation: Callable[[np.ndarray], np.ndarray]
    control_lower: np.ndarray
    control_upper: np.ndarray
    dt: float
    kind: str = "generic"

    def __post_init__(self):
        lo = np.asarray(self.control_lower, dtype=float)
        hi = np.asarray(self.control_upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("control bounds must be 1-d vectors of equal length")
        if np.any(lo >= hi):
            raise ValueError(f"control bounds must satisfy lower < upper, got {lo} / {hi}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "control_lower", lo)
        object.__setattr__(self, "control_upper", hi)

    @property
    def control_dim(self) -> int:
        return self.control_lower.shape[0]


def diff_drive_model(dt: float = 0.1,
                     v_bounds: tuple[float, float] = (-1.0, 1.0),
                     w_bounds: tuple[float, float] = (-2.0, 2.0)) -> DynamicsModel:
    """Differential-drive robot with control u = (v, w)."""

    def drift(x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def actuation(x: np.ndarray) -> np.ndarray:
        theta = x[2]
        return dt * np.array([[np.cos(theta), 0.0],
                              [np.sin(theta), 0.0],
                              [0.0, 1.0]])

    return DynamicsModel(
        drift=drift,
        actuation=actuation,
        control_lower=np.array([v_bounds[0], w_bounds[0]]),
        control_upper=np.array([v_bounds[1], w_bounds[1]]),
        dt=dt,
        kind="diffdrive",
    )


def sample_executed_control(u: np.ndarray, noise: ActuationNoise,
                            rng: np.random.Generator) -> np.ndarray:
    """Perturb a commanded control with zero-mean Gaussian execution error.

    The result is not clamped; callers clip it against the model bounds.  The
    noise is drawn once and never redrawn after clamping.
    """
    u = np.asarray(u, dtype=float)
    return u + noise.sigma * rng.standard_normal(u.shape)


def clamp_control(nu: np.ndarray, model: DynamicsModel) -> np.ndarray:
    """Clip each control component into [lower, upper]."""
    return np.clip(np.asarray(nu, dtype=float), model.control_lower, model.control_upper)


def step(x: AgentState, nu: np.ndarray, model: DynamicsModel) -> AgentState:
    """Advance one state by one step under an (already clamped) control."""
    nu = np.asarray(nu, dtype=float)
    if model.kind == "diffdrive":
        dt = model.dt
        px = x.px + dt * nu[0] * np.cos(x.theta)
        py = x.py + dt * nu[0] * np.sin(x.theta)
        theta = wrap_angle(x.theta + dt * nu[1])
        return AgentState(px, py, theta)
    xv = x.as_array()
    nxt = model.drift(xv) + model.actuation(xv) @ nu
    return AgentState(nxt[0], nxt[1], wrap_angle(nxt[2]))
