"""Decentralized multi-agent episodes with noisy sensing and actuation.

Each agent runs its own tracker, constraint builder, and sampling-based
controller against snapshots of the world; commands are then executed
simultaneously with actuation noise.  Episodes end in exactly one of
success (every agent within tolerance of its goal), collision (any pair of
discs overlapping), or timeout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import perception
from .dynamics import (ActuationNoise, AgentState, DynamicsModel, clamp_control,
                       diff_drive_model, sample_executed_control, step)
from .mppi import MppiConfig, MppiController
from .orca import orca_halfplane
from .perception import NeighborTrack, ObservationNoise
from .safe_sampler import (SafetyConfig, TightenedConstraint, adjust_distribution,
                           tighten_for_execution, to_control_space)


@dataclass(frozen=True)
class Scenario:
    name: str
    starts: np.ndarray  # (n, 3) px, py, theta
    goals: np.ndarray   # (n, 2)

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        goals = np.asarray(self.goals, dtype=float)
        if starts.ndim != 2 or starts.shape[1] != 3:
            raise ValueError("starts must have shape (n, 3)")
        if goals.shape != (starts.shape[0], 2):
            raise ValueError("goals must have shape (n, 2)")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "goals", goals)

    @property
    def n_agents(self) -> int:
        return self.starts.shape[0]


def make_circle_scenario(n: int, diameter: float = 12.0,
                         agent_radius: float = 0.3) -> Scenario:
    """Agents evenly spaced on a circle, each heading to the antipodal point."""
    if n < 2:
        raise ValueError("need at least 2 agents")
    radius = 0.5 * diameter
    spacing = 2.0 * radius * math.sin(math.pi / n)
    if spacing <= 2.0 * agent_radius:
        raise ValueError(
            f"{n} agents of radius {agent_radius} do not fit on a circle of "
            f"diameter {diameter}")
    angles = 2.0 * math.pi * np.arange(n) / n
    starts = np.stack([radius * np.cos(angles), radius * np.sin(angles),
                       _wrap_pi(angles + math.pi)], axis=1)
    goals = -starts[:, :2].copy()
    return Scenario(name=f"circle-{n}", starts=starts, goals=goals)


def _wrap_pi(theta):
    return -((np.pi - np.asarray(theta, dtype=float)) % (2.0 * np.pi) - np.pi)


def make_random_scenario(n: int, rng: np.random.Generator, extent: float = 20.0,
                         agent_radius: float = 0.3,
                         min_sep: float | None = None,
                         goal_min_sep: float | None = None,
                         goal_tolerance: float = 0.4,
                         max_tries: int = 10_000) -> Scenario:
    """Uniform starts and goals in a square workspace, rejection-sampled.

    Starts are pairwise at least min_sep apart (default 4 radii).  Goals are
    likewise separated by goal_min_sep, which defaults to the smallest value
    at which two agents parked within goal_tolerance of distinct goals can
    never overlap.  Headings are uniform.
    """
    if n < 1:
        raise ValueError("need at least 1 agent")
    half = 0.5 * extent
    if min_sep is None:
        min_sep = 4.0 * agent_radius
    if goal_min_sep is None:
        goal_min_sep = 2.0 * goal_tolerance + 2.0 * agent_radius + 0.2

    def place(sep: float) -> list[np.ndarray]:
        placed: list[np.ndarray] = []
        tries = 0
        while len(placed) < n:
            cand = rng.uniform(-half, half, size=2)
            if all(np.hypot(*(cand - p)) >= sep for p in placed):
                placed.append(cand)
            tries += 1
            if tries > max_tries:
                raise RuntimeError(f"could not place {n} points separated by "
                                   f"{sep} in {max_tries} draws")
        return placed

    starts_xy = place(min_sep)
    goals = np.asarray(place(goal_min_sep))
    headings = rng.uniform(-math.pi, math.pi, size=n)
    starts = np.column_stack([np.asarray(starts_xy), _wrap_pi(headings)])
    return Scenario(name=f"random-{n}", starts=starts, goals=goals)


@dataclass(frozen=True)
class SimConfig:
    agent_radius: float = 0.3
    dt: float = 0.1
    max_steps: int = 1000
    goal_tolerance: float = 0.4
    orca_tau: float = 5.0
    alpha_resp: float = 0.5
    process_noise: float = 0.5      # tracker acceleration spectral density
    use_buffers: bool = True        # False disables r_o, tightening, cost buffers
    v_opt_zero: bool = False        # build avoidance constraints around zero velocities

    def __post_init__(self):
        if self.agent_radius <= 0.0 or self.dt <= 0.0:
            raise ValueError("agent_radius and dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class NoiseConfig:
    actuation: ActuationNoise
    observation: ObservationNoise

    @staticmethod
    def benchmark_defaults() -> "NoiseConfig":
        return NoiseConfig(
            actuation=ActuationNoise(sigma=np.array([0.1, 0.2])),
            observation=ObservationNoise(sigma_p=0.01 * np.eye(2),
                                         sigma_v=0.01 * np.eye(2)),
        )


@dataclass(frozen=True)
class EpisodeResult:
    outcome: str                    # success | collision | timeout
    steps: int                      # simulated steps
    makespan_steps: int             # step count when the last agent arrived (-1 otherwise)
    min_pairwise_distance: float
    degraded_steps: int             # steps where any adjustment needed relaxing
    reached: np.ndarray
    trajectories: np.ndarray | None = None  # (steps + 1, n, 3) when recorded
    commands: np.ndarray | None = None      # (steps, n, 2) when recorded
    degraded_flags: np.ndarray | None = None  # (steps,) bool when recorded


def check_collision(positions: np.ndarray, radius: float) -> bool:
    """True iff any pair of discs strictly overlaps (center distance < 2 radius)."""
    n = positions.shape[0]
    if n < 2:
        return False
    diff = positions[:, None, :] - positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(n, k=1)
    return bool(np.any(d[iu] < 2.0 * radius))


def _min_pairwise(positions: np.ndarray) -> float:
    n = positions.shape[0]
    if n < 2:
        return math.inf
    diff = positions[:, None, :] - positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(n, k=1)
    return float(d[iu].min())


def run_episode(scenario: Scenario,
                sim: SimConfig,
                noise: NoiseConfig,
                safety: SafetyConfig,
                mppi: MppiConfig,
                seed: np.random.SeedSequence | int,
                model: DynamicsModel | None = None,
                record_trajectories: bool = False) -> EpisodeResult:
    """Simulate one episode to completion under a fully seeded noise stream.

    Every agent gets three independent RNG streams (sampling, actuation,
    observation) spawned from the seed, so results are reproducible for a
    given backend regardless of agent count elsewhere in a batch.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    n = scenario.n_agents
    if model is None:
        model = diff_drive_model(dt=sim.dt)
    streams = seed.spawn(3 * n)
    ctrl_rngs = [np.random.default_rng(streams[3 * i]) for i in range(n)]
    act_rngs = [np.random.default_rng(streams[3 * i + 1]) for i in range(n)]
    obs_rngs = [np.random.default_rng(streams[3 * i + 2]) for i in range(n)]

    controllers = [MppiController(model, noise.actuation.sigma, mppi, ctrl_rngs[i])
                   for i in range(n)]
    tracks: list[dict[int, NeighborTrack]] = [dict() for _ in range(n)]

    X = scenario.starts.copy()
    goals = scenario.goals
    vel_true = np.zeros((n, 2))
    reached = np.array([np.hypot(*(X[i, :2] - goals[i])) <= sim.goal_tolerance
                        for i in range(n)])
    min_dist = _min_pairwise(X[:, :2])
    degraded_steps = 0
    traj = [X.copy()] if record_trajectories else None
    cmd_log: list[np.ndarray] | None = [] if record_trajectories else None
    flag_log: list[bool] | None = [] if record_trajectories else None

    comb_radius = 2.0 * sim.agent_radius
    T = mppi.horizon

    makespan = 0 if bool(reached.all()) else -1
    if makespan == 0:
        return EpisodeResult(outcome="success", steps=0, makespan_steps=0,
                             min_pairwise_distance=min_dist, degraded_steps=0,
                             reached=reached,
                             trajectories=np.asarray(traj) if traj else None)

    outcome = "timeout"
    steps_done = sim.max_steps
    for t in range(sim.max_steps):
        # Sense: each active agent refreshes its tracks from noisy readings.
        for i in range(n):
            if reached[i]:
                continue
            for j in range(n):
                if j == i:
                    continue
                obs = perception.observe(X[j, :2], vel_true[j], noise.observation,
                                         obs_rngs[i], neighbor_id=j, time_step=t)
                if j not in tracks[i]:
                    tracks[i][j] = perception.init_track(obs, noise.observation)
                else:
                    tracks[i][j] = perception.kalman_update(
                        tracks[i][j], obs, sim.dt, sim.process_noise,
                        noise.observation)

        # Plan: constraints and rollouts against the same snapshot for everyone.
        commands = np.zeros((n, 2))
        any_degraded = False
        for i in range(n):
            if reached[i]:
                continue
            state = AgentState(X[i, 0], X[i, 1], X[i, 2])
            ctrl = controllers[i]
            u0 = ctrl.u_init[0]
            v_opt_i = np.array([u0[0] * math.cos(state.theta),
                                u0[0] * math.sin(state.theta)])
            if sim.v_opt_zero:
                v_opt_i = np.zeros(2)

            constraints: list[TightenedConstraint] = []
            order = [j for j in range(n) if j != i]
            nb_pos = np.zeros((T + 1, len(order), 2))
            nb_buf = np.zeros((T + 1, len(order)))
            for col, j in enumerate(order):
                trk = tracks[i][j]
                v_opt_j = np.zeros(2) if sim.v_opt_zero else trk.vel
                # Buffer radius follows the filter posterior, so it shrinks
                # as a track converges below the raw measurement noise.
                buf = perception.uncertainty_radius(
                    trk.pos_cov, safety.delta_obs) if sim.use_buffers else 0.0
                plane = orca_halfplane(
                    p_i=state.position, r_i=sim.agent_radius,
                    obs_pos=trk.pos, r_j=sim.agent_radius, r_o=buf,
                    v_opt_i=v_opt_i, v_opt_j=v_opt_j,
                    tau=sim.orca_tau, alpha_resp=sim.alpha_resp, dt=sim.dt)
                mapped = to_control_space(plane, state, model)
                if mapped is not None:
                    a_row, rhs = mapped
                    if sim.use_buffers:
                        constraints.append(tighten_for_execution(
                            a_row, rhs, noise.actuation, safety.delta_act))
                    else:
                        constraints.append(TightenedConstraint(row=a_row, rhs=rhs))

                nb_pos[0, col] = trk.pos
                nb_buf[0, col] = buf
                for s, (pm, pc) in enumerate(
                        perception.predict_track(trk, T, sim.dt), start=1):
                    nb_pos[s, col] = pm
                    nb_buf[s, col] = perception.uncertainty_radius(
                        pc, safety.delta_obs) if sim.use_buffers else 0.0

            adj = adjust_distribution(ctrl.nominal_first_step(), constraints,
                                      model, safety)
            if adj.degraded:
                any_degraded = True
            plan = ctrl.plan(state, goals[i], nb_pos, nb_buf, comb_radius,
                             first_step=adj.distribution)
            commands[i] = plan.command
        if any_degraded:
            degraded_steps += 1

        # Act: simultaneous noisy execution; parked agents stay put exactly.
        new_X = X.copy()
        for i in range(n):
            if reached[i]:
                vel_true[i] = 0.0
                continue
            nu = sample_executed_control(commands[i], noise.actuation, act_rngs[i])
            nu = clamp_control(nu, model)
            state = step(AgentState(X[i, 0], X[i, 1], X[i, 2]), nu, model)
            new_X[i] = state.as_array()
            vel_true[i] = (new_X[i, :2] - X[i, :2]) / sim.dt
        X = new_X
        if traj is not None:
            traj.append(X.copy())
            cmd_log.append(commands.copy())
            flag_log.append(any_degraded)

        min_dist = min(min_dist, _min_pairwise(X[:, :2]))
        for i in range(n):
            if not reached[i] and np.hypot(*(X[i, :2] - goals[i])) <= sim.goal_tolerance:
                reached[i] = True

        if check_collision(X[:, :2], sim.agent_radius):
            outcome = "collision"
            steps_done = t + 1
            break
        if bool(reached.all()):
            outcome = "success"
            makespan = t + 1
            steps_done = t + 1
            break

    return EpisodeResult(
        outcome=outcome, steps=steps_done, makespan_steps=makespan,
        min_pairwise_distance=min_dist, degraded_steps=degraded_steps,
        reached=reached,
        trajectories=np.asarray(traj) if traj is not None else None,
        commands=np.asarray(cmd_log) if cmd_log is not None else None,
        degraded_flags=np.asarray(flag_log) if flag_log is not None else None)


def aggregate(results: list[EpisodeResult], dt: float) -> dict:
    """Batch metrics; makespan statistics cover successful episodes only."""
    n = len(results)
    if n == 0:
        raise ValueError("no episodes to aggregate")
    succ = [r for r in results if r.outcome == "success"]
    spans = np.array([r.makespan_steps * dt for r in succ])
    return {
        "episodes": n,
        "success_rate": len(succ) / n,
        "collision_rate": sum(r.outcome == "collision" for r in results) / n,
        "timeout_rate": sum(r.outcome == "timeout" for r in results) / n,
        "mean_makespan_s": float(spans.mean()) if spans.size else float("nan"),
        "std_makespan_s": float(spans.std(ddof=0)) if spans.size else float("nan"),
        "mean_min_dist_m": float(np.mean([r.min_pairwise_distance for r in results])),
        "degraded_steps_mean": float(np.mean([r.degraded_steps for r in results])),
    }
