"""Noisy neighbor observations, constant-velocity Kalman tracks, and
confidence-disk radii.

Each agent keeps one track per visible neighbor.  The track state is
(px, py, vx, vy) under a constant-velocity transition with white-acceleration
process noise; both position and velocity are measured every step.  The
confidence disk around a Gaussian position estimate uses the exact 2-dof
chi-square quantile, so no special-function library is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Eigenvalue floor used when validating covariances as PSD.
_PSD_TOL = 1e-9


@dataclass(frozen=True)
class ObservationNoise:
    """2x2 covariances of the position and velocity measurement errors."""

    sigma_p: np.ndarray
    sigma_v: np.ndarray

    def __post_init__(self):
        for name in ("sigma_p", "sigma_v"):
            cov = np.asarray(getattr(self, name), dtype=float)
            _require_psd(cov, name)
            object.__setattr__(self, name, cov)


@dataclass(frozen=True)
class Observation:
    """One noisy position/velocity reading of a neighbor."""

    pos_hat: np.ndarray
    vel_hat: np.ndarray
    neighbor_id: int
    time_step: int


@dataclass(frozen=True)
class NeighborTrack:
    """Kalman state for one neighbor: mean (px, py, vx, vy) and 4x4 covariance."""

    mean: np.ndarray
    cov: np.ndarray
    last_update: int

    @property
    def pos(self) -> np.ndarray:
        return self.mean[:2]

    @property
    def vel(self) -> np.ndarray:
        return self.mean[2:]

    @property
    def pos_cov(self) -> np.ndarray:
        return self.cov[:2, :2]


def _require_psd(cov: np.ndarray, name: str) -> None:
    if cov.shape != (cov.shape[0], cov.shape[0]):
        raise ValueError(f"{name} must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric:\n{cov}")
    w = np.linalg.eigvalsh(cov)
    if w.min() < -_PSD_TOL:
        raise ValueError(f"{name} must be PSD, smallest eigenvalue {w.min():.3e}:\n{cov}")


def _cov_factor(cov: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T = cov, tolerant of singular PSD inputs."""
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def observe(true_pos: np.ndarray, true_vel: np.ndarray, noise: ObservationNoise,
            rng: np.random.Generator, neighbor_id: int = -1,
            time_step: int = -1) -> Observation:
    """Draw a noisy reading of a neighbor's position and velocity."""
    pos_hat = np.asarray(true_pos, float) + _cov_factor(noise.sigma_p) @ rng.standard_normal(2)
    vel_hat = np.asarray(true_vel, float) + _cov_factor(noise.sigma_v) @ rng.standard_normal(2)
    return Observation(pos_hat=pos_hat, vel_hat=vel_hat,
                       neighbor_id=neighbor_id, time_step=time_step)


def _transition(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = dt
    F[1, 3] = dt
    return F


def _process_cov(dt: float, accel_psd: float) -> np.ndarray:
    # White-acceleration (continuous) model integrated over one step.
    q = accel_psd
    d2 = dt * dt
    Q = np.zeros((4, 4))
    Q[0, 0] = Q[1, 1] = q * d2 * d2 / 4.0
    Q[0, 2] = Q[2, 0] = Q[1, 3] = Q[3, 1] = q * d2 * dt / 2.0
    Q[2, 2] = Q[3, 3] = q * d2
    return Q


def init_track(obs: Observation, noise: ObservationNoise,
               init_scale: float = 2.0) -> NeighborTrack:
    """Start a track from a first observation with a mildly inflated covariance."""
    mean = np.concatenate([obs.pos_hat, obs.vel_hat])
    cov = np.zeros((4, 4))
    cov[:2, :2] = noise.sigma_p
    cov[2:, 2:] = noise.sigma_v
    return NeighborTrack(mean=mean, cov=init_scale * cov, last_update=obs.time_step)


def predict_step(track: NeighborTrack, dt: float, process_noise: float) -> NeighborTrack:
    """Pure constant-velocity prediction (used when an observation is missed)."""
    F = _transition(dt)
    Q = _process_cov(dt, process_noise)
    return NeighborTrack(mean=F @ track.mean, cov=F @ track.cov @ F.T + Q,
                         last_update=track.last_update)


def kalman_update(track: NeighborTrack, obs: Observation, dt: float,
                  process_noise: float, noise: ObservationNoise) -> NeighborTrack:
    """Predict-then-correct update with both position and velocity measured."""
    _require_psd(track.cov, "track.cov")
    pred = predict_step(track, dt, process_noise)

    R = np.zeros((4, 4))
    R[:2, :2] = noise.sigma_p
    R[2:, 2:] = noise.sigma_v
    z = np.concatenate([obs.pos_hat, obs.vel_hat])

    S = pred.cov + R  # H = I
    try:
        K = np.linalg.solve(S.T, pred.cov.T).T
    except np.linalg.LinAlgError:
        K = pred.cov @ np.linalg.pinv(S)
    mean = pred.mean + K @ (z - pred.mean)
    IK = np.eye(4) - K
    # Joseph form keeps the posterior covariance symmetric PSD.
    cov = IK @ pred.cov @ IK.T + K @ R @ K.T
    return NeighborTrack(mean=mean, cov=0.5 * (cov + cov.T), last_update=obs.time_step)


def predict_track(track: NeighborTrack, horizon_steps: int, dt: float,
                  process_noise: float = 0.0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Constant-velocity extrapolation: [(pos_mean, pos_cov)] for steps 1..horizon."""
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be >= 1")
    out = []
    cur = track
    for _ in range(horizon_steps):
        cur = predict_step(cur, dt, process_noise)
        out.append((cur.pos.copy(), cur.pos_cov.copy()))
    return out


def chi2_quantile_2dof(p: float) -> float:
    """Inverse CDF of the chi-square distribution with 2 dof: -2 ln(1 - p)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    return -2.0 * np.log1p(-p)


def lambda_max_2x2(cov) -> np.ndarray:
    """Largest eigenvalue of one or many symmetric 2x2 matrices (closed form)."""
    cov = np.asarray(cov, dtype=float)
    a = cov[..., 0, 0]
    c = cov[..., 1, 1]
    b = cov[..., 0, 1]
    half = 0.5 * (a + c)
    return half + np.sqrt(0.25 * (a - c) ** 2 + b * b)


def uncertainty_radius(cov, delta: float):
    """Radius of a disk covering a 2-d Gaussian with probability >= delta.

    r = sqrt(lambda_max(cov) * chi2_2dof_quantile(delta)).  The disk encloses
    the chi-square confidence ellipse, so the true coverage meets or exceeds
    delta (strictly exceeding it for anisotropic covariances).
    """
    return np.sqrt(lambda_max_2x2(cov) * chi2_quantile_2dof(delta))
