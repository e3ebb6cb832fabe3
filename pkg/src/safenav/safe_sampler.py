"""Chance-constrained adjustment of the control sampling distribution.

Velocity-space half-planes produced by the reciprocal avoidance rules are
mapped into control space through the dynamics, tightened against actuation
noise, and then imposed on the Gaussian the controller samples its first
control from.  The adjustment picks the feasible (mean, stddev) pair closest
to the nominal one in 1-norm, so sampled controls respect every constraint
and the control bounds with probability at least ``delta_ctrl`` each, and
executed controls respect the original half-planes with probability at least
``delta_ctrl * delta_act``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conic import ConeRow, ConicProgram, LinearRow, SolveReport, solve_socp
from .dynamics import ActuationNoise, AgentState, DynamicsModel
from .orca import HalfPlane

_ROW_TOL = 1e-12


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, accurate to well below 1e-6.

    Rational initial guess (Acklam) refined with one Halley step through the
    exact erfc, so extreme tail arguments used for confidence levels like
    0.999 stay reliable.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {p}")

    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    p_low = 0.02425

    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)

    # One Halley refinement: e = Phi(x) - p, u = e / phi(x).
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


@dataclass(frozen=True)
class SafetyConfig:
    """Per-source confidence levels for the probabilistic safety chain.

    delta_obs covers the observation buffer radius, delta_act the actuation
    noise tightening, and delta_ctrl the sampling-distribution constraint.
    delta_ctrl must be >= 0.5 so the adjustment program stays convex.
    """

    delta_obs: float = 0.9975
    delta_act: float = 0.999
    delta_ctrl: float = 0.999

    def __post_init__(self):
        for name in ("delta_obs", "delta_act", "delta_ctrl"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.delta_ctrl < 0.5:
            raise ValueError(
                f"delta_ctrl must be >= 0.5 for a convex adjustment, got {self.delta_ctrl}")

    @property
    def combined_confidence(self) -> float:
        """Joint per-neighbor, per-step guarantee level."""
        return self.delta_obs * self.delta_act * self.delta_ctrl


@dataclass(frozen=True)
class ControlDistribution:
    """Independent Gaussian over one control vector (diagonal covariance)."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        stddev = np.asarray(self.stddev, dtype=float)
        if mean.shape != stddev.shape or mean.ndim != 1:
            raise ValueError("mean and stddev must be 1-d vectors of equal length")
        if np.any(stddev < 0.0):
            raise ValueError(f"stddevs must be >= 0, got {stddev}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stddev", stddev)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = self.mean.shape if size is None else (size,) + self.mean.shape
        return self.mean + self.stddev * rng.standard_normal(shape)


@dataclass(frozen=True)
class TightenedConstraint:
    """Control-space row ``row . nu <= rhs`` holding w.p. delta_act under noise."""

    row: np.ndarray
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "row", np.asarray(self.row, dtype=float))


def to_control_space(plane: HalfPlane, state: AgentState,
                     model: DynamicsModel) -> tuple[np.ndarray, float] | None:
    """Map a velocity half-plane onto the control vector of one step.

    The realized velocity over the step is (p' - p) / dt with
    p' = drift(x) + actuation(x) @ nu, which turns ``a vx + b vy + c <= 0``
    into a linear row over nu.  Returns None when the row does not involve
    the control at all (the constraint then cannot be enforced here; a
    warning is issued if it is also violated outright).
    """
    xv = np.asarray(state.as_array(), dtype=float)
    G = model.actuation(xv)
    F = model.drift(xv)
    dt = model.dt
    a_row = (plane.a * G[0, :] + plane.b * G[1, :]) / dt
    rhs = -(plane.c + (plane.a * (F[0] - state.px) + plane.b * (F[1] - state.py)) / dt)
    if np.max(np.abs(a_row)) <= _ROW_TOL:
        if rhs < 0.0:
            warnings.warn("velocity constraint is unaffected by the control and "
                          "already violated; dropping it", stacklevel=2)
        return None
    return a_row, float(rhs)


def tighten_for_execution(a_row: np.ndarray, rhs: float, noise: ActuationNoise,
                          delta_act: float) -> TightenedConstraint:
    """Shrink the rhs so the row holds under execution noise w.p. delta_act."""
    a_row = np.asarray(a_row, dtype=float)
    spread = float(np.sqrt(np.sum((a_row * noise.sigma) ** 2)))
    return TightenedConstraint(row=a_row,
                               rhs=rhs - normal_quantile(delta_act) * spread)


@dataclass(frozen=True)
class AdjustmentResult:
    distribution: ControlDistribution
    status: str  # optimal | relaxed
    slack_used: float
    max_violation: float

    @property
    def degraded(self) -> bool:
        return self.status == "relaxed"


def build_adjustment_program(nominal: ControlDistribution,
                             constraints: list[TightenedConstraint],
                             model: DynamicsModel,
                             config: SafetyConfig) -> ConicProgram:
    """Adjustment as a cone program over x = [mean', stddev', t_mean, t_std].

    Minimizes ||mean' - mean||_1 + ||stddev' - stddev||_1 subject to each
    tightened row holding for sampled controls w.p. delta_ctrl, and sampled
    controls landing inside the control bounds w.p. delta_ctrl per side.
    Constraint rows are relaxable (shared penalty slack); bound rows and the
    box on mean' are hard.
    """
    m = model.control_dim
    if nominal.mean.shape[0] != m:
        raise ValueError("distribution dimension does not match the model")
    q = normal_quantile(config.delta_ctrl)
    d = 4 * m
    obj = np.zeros(d)
    obj[2 * m:] = 1.0

    rows: list[LinearRow] = []

    def unit(i):
        e = np.zeros(d)
        e[i] = 1.0
        return e

    for k in range(m):
        # |mean'_k - mean_k| <= t_mean_k and |stddev'_k - stddev_k| <= t_std_k.
        rows.append(LinearRow(unit(k) - unit(2 * m + k), float(nominal.mean[k])))
        rows.append(LinearRow(-unit(k) - unit(2 * m + k), float(-nominal.mean[k])))
        rows.append(LinearRow(unit(m + k) - unit(3 * m + k), float(nominal.stddev[k])))
        rows.append(LinearRow(-unit(m + k) - unit(3 * m + k), float(-nominal.stddev[k])))
        # Sampled controls stay inside the bounds w.p. delta_ctrl per side.
        rows.append(LinearRow(unit(k) + q * unit(m + k), float(model.control_upper[k])))
        rows.append(LinearRow(-unit(k) + q * unit(m + k), float(-model.control_lower[k])))

    cone = []
    for tc in constraints:
        row = np.zeros(d)
        row[:m] = tc.row
        cone.append(ConeRow(gain=q, coeffs=tc.row.copy(), row=row, rhs=tc.rhs,
                            relaxable=True))

    lb = np.concatenate([model.control_lower, np.zeros(3 * m)])
    ub = np.concatenate([model.control_upper, np.full(3 * m, np.inf)])
    return ConicProgram(objective=obj, linear_rows=rows, cone_rows=cone,
                        bounds=(lb, ub),
                        stddev_index=np.arange(m, 2 * m))


def adjust_distribution(nominal: ControlDistribution,
                        constraints: list[TightenedConstraint],
                        model: DynamicsModel,
                        config: SafetyConfig,
                        force_barrier: bool = False) -> AdjustmentResult:
    """Return the feasible sampling distribution closest to the nominal one."""
    m = model.control_dim
    q = normal_quantile(config.delta_ctrl)

    if not constraints:
        # Only the bound rows apply; skip the solver when they already hold.
        lo_ok = nominal.mean - q * nominal.stddev >= model.control_lower
        hi_ok = nominal.mean + q * nominal.stddev <= model.control_upper
        if bool(np.all(lo_ok) and np.all(hi_ok)):
            return AdjustmentResult(distribution=nominal, status="optimal",
                                    slack_used=0.0, max_violation=0.0)

    program = build_adjustment_program(nominal, constraints, model, config)
    report: SolveReport = solve_socp(program, force_barrier=force_barrier)
    if not report.ok or not np.all(np.isfinite(report.x)):
        # Last-resort fallback: clipped mean, degenerate spread.  The shared
        # slack makes the program feasible in practice, so this is defensive.
        mean = np.clip(nominal.mean, model.control_lower, model.control_upper)
        dist = ControlDistribution(mean=mean, stddev=np.zeros(m))
        return AdjustmentResult(distribution=dist, status="relaxed",
                                slack_used=float("inf"), max_violation=float("inf"))
    mean = report.x[:m]
    stddev = np.maximum(report.x[m:2 * m], 0.0)
    dist = ControlDistribution(mean=mean, stddev=stddev)
    return AdjustmentResult(distribution=dist, status=report.status,
                            slack_used=report.slack_used,
                            max_violation=report.max_violation)
