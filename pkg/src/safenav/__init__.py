"""Decentralized collision avoidance under sensing and actuation noise.

Sampling-based model-predictive control with reciprocal velocity-obstacle
constraints imposed on the control sampling distribution at a configurable
confidence level, plus a batch simulator for benchmarking.
"""

from ._core import BACKEND
from .dynamics import (ActuationNoise, AgentState, DynamicsModel, clamp_control,
                       diff_drive_model, sample_executed_control, step, wrap_angle)
from .mppi import MppiConfig, MppiController, PlanResult, project_goal
from .orca import DegenerateGeometry, HalfPlane, VOGeometry, nearest_boundary, \
    orca_halfplane, vo_contains
from .perception import (NeighborTrack, Observation, ObservationNoise, init_track,
                         kalman_update, observe, predict_track, uncertainty_radius)
from .safe_sampler import (AdjustmentResult, ControlDistribution, SafetyConfig,
                           TightenedConstraint, adjust_distribution, normal_quantile,
                           tighten_for_execution, to_control_space)
from .simulator import (EpisodeResult, NoiseConfig, Scenario, SimConfig, aggregate,
                        check_collision, make_circle_scenario, make_random_scenario,
                        run_episode)

__version__ = "0.1.0"

__all__ = [
    "ActuationNoise", "AdjustmentResult", "AgentState", "BACKEND",
    "ControlDistribution", "DegenerateGeometry", "DynamicsModel", "EpisodeResult",
    "HalfPlane", "MppiConfig", "MppiController", "NeighborTrack", "NoiseConfig",
    "Observation", "ObservationNoise", "PlanResult", "SafetyConfig", "Scenario",
    "SimConfig", "TightenedConstraint", "VOGeometry", "adjust_distribution",
    "aggregate", "check_collision", "clamp_control", "diff_drive_model",
    "init_track", "kalman_update", "make_circle_scenario", "make_random_scenario",
    "nearest_boundary", "normal_quantile", "observe", "orca_halfplane",
    "predict_track", "project_goal", "run_episode", "sample_executed_control",
    "step", "tighten_for_execution", "to_control_space", "uncertainty_radius",
    "vo_contains", "wrap_angle",
]
