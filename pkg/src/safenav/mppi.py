"""Sampling-based model-predictive controller.

Each control update draws K perturbed control sequences around a nominal
sequence, scores them with the rollout kernel, and blends them with
exponentiated-cost weights.  The first step of each sequence is drawn from
an externally adjusted Gaussian so safety constraints on the executed
control carry over to the samples; later steps use the nominal sequence
plus exploration noise with an inflated covariance, which the cost penalty
corrects for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import rollout_costs
from .dynamics import AgentState, DynamicsModel
from .safe_sampler import ControlDistribution


@dataclass(frozen=True)
class MppiConfig:
    samples: int = 500
    horizon: int = 20
    temperature: float = 0.1
    exploration_gain: float = 2.0  # sampling covariance multiplier, >= 1
    w_term: float = 10.0
    w_goal: float = 1.0
    w_dist: float = 3.0
    w_col: float = 1e3
    w_vel: float = 0.05
    lookahead: float = 4.0        # goal projection disk diameter
    d_th: float = 1.5             # proximity cost activation distance
    goal_tolerance: float = 0.4

    def __post_init__(self):
        if self.samples < 1 or self.horizon < 1:
            raise ValueError("samples and horizon must be positive")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.exploration_gain < 1.0:
            raise ValueError(
                f"exploration_gain must be >= 1, got {self.exploration_gain}")

    @property
    def cost_weights(self) -> np.ndarray:
        return np.array([self.w_term, self.w_goal, self.w_dist, self.w_col, self.w_vel])


@dataclass(frozen=True)
class PlanResult:
    command: np.ndarray        # control to execute now
    sequence: np.ndarray       # full weighted-average sequence (T, m)
    weights: np.ndarray        # per-sample weights (K,)
    best_cost: float           # min adjusted cost over the samples


def project_goal(position: np.ndarray, goal: np.ndarray, lookahead: float) -> np.ndarray:
    """Goal projected onto the lookahead disk (radius lookahead / 2) around position."""
    position = np.asarray(position, dtype=float)
    goal = np.asarray(goal, dtype=float)
    offset = goal - position
    dist = float(np.hypot(offset[0], offset[1]))
    radius = 0.5 * lookahead
    if dist <= radius or dist == 0.0:
        return goal.copy()
    return position + (radius / dist) * offset


class MppiController:
    """Per-agent controller state: nominal sequence plus a private RNG."""

    def __init__(self, model: DynamicsModel, sampling_sigma: np.ndarray,
                 config: MppiConfig, rng: np.random.Generator):
        sampling_sigma = np.asarray(sampling_sigma, dtype=float)
        if sampling_sigma.shape != (model.control_dim,) or np.any(sampling_sigma < 0.0):
            raise ValueError("sampling_sigma must be a nonnegative vector matching "
                             "the control dimension")
        self.model = model
        self.sigma = sampling_sigma
        self.config = config
        self.rng = rng
        self.u_init = np.zeros((config.horizon, model.control_dim))

    def reset(self) -> None:
        self.u_init[:] = 0.0

    def nominal_first_step(self) -> ControlDistribution:
        """Distribution step 0 would be sampled from absent any adjustment."""
        spread = np.sqrt(self.config.exploration_gain) * self.sigma
        return ControlDistribution(mean=self.u_init[0].copy(), stddev=spread)

    def _sample_controls(self, first_step: ControlDistribution | None) -> np.ndarray:
        cfg = self.config
        K, T, m = cfg.samples, cfg.horizon, self.model.control_dim
        spread = np.sqrt(cfg.exploration_gain) * self.sigma
        eps = spread * self.rng.standard_normal((K, T, m))
        controls = self.u_init[None, :, :] + eps
        if first_step is not None:
            controls[:, 0, :] = first_step.sample(self.rng, size=K)
        np.clip(controls, self.model.control_lower, self.model.control_upper,
                out=controls)
        return controls

    def _control_penalty(self, controls: np.ndarray) -> np.ndarray:
        """Exploration correction per sample; zero-variance components skipped."""
        cfg = self.config
        eps = controls - self.u_init[None, :, :]
        active = self.sigma > 0.0
        if not np.any(active):
            return np.zeros(controls.shape[0])
        inv_var = np.zeros_like(self.sigma)
        inv_var[active] = 1.0 / self.sigma[active] ** 2
        u = self.u_init
        term_const = float(np.sum(u * u * inv_var))
        term_cross = 2.0 * np.einsum("tk,itk->i", u * inv_var, eps)
        shrink = 1.0 - 1.0 / cfg.exploration_gain
        term_noise = shrink * np.einsum("itk,k->i", eps * eps, inv_var)
        return 0.5 * cfg.temperature * (term_const + term_cross + term_noise)

    def plan(self, state: AgentState, goal: np.ndarray,
             nb_pos: np.ndarray, nb_buf: np.ndarray, comb_radius: float,
             first_step: ControlDistribution | None = None) -> PlanResult:
        """One control update; shifts the nominal sequence as a side effect.

        nb_pos (T+1, J, 2) and nb_buf (T+1, J) hold predicted neighbor
        positions and collision buffer radii aligned with rollout states.
        """
        cfg = self.config
        controls = self._sample_controls(first_step)
        goal = np.asarray(goal, dtype=float)
        proj = project_goal(state.position, goal, cfg.lookahead)

        S = rollout_costs(
            np.ascontiguousarray(state.as_array(), dtype=float),
            np.ascontiguousarray(controls),
            np.ascontiguousarray(goal),
            np.ascontiguousarray(proj),
            np.ascontiguousarray(nb_pos, dtype=float),
            np.ascontiguousarray(nb_buf, dtype=float),
            cfg.cost_weights,
            float(comb_radius), cfg.d_th, cfg.goal_tolerance, self.model.dt)
        S = np.asarray(S) + self._control_penalty(controls)

        rho = float(S.min())
        w = np.exp(-(S - rho) / cfg.temperature)
        w /= w.sum()

        u_star = np.einsum("i,itk->tk", w, controls)
        command = u_star[0].copy()
        self.u_init = np.vstack([u_star[1:], u_star[-1:]])
        return PlanResult(command=command, sequence=u_star, weights=w, best_cost=rho)
