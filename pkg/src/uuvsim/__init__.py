"""uuvsim: batched 6-DOF underwater-vehicle simulation with RL benchmark tasks."""

from ._native import native_available
from .batch import batch_create, bench_throughput, resolve_backend
from .dynamics import (BodyVelocity, EulerSingularityError,
                       IntegrationDivergedError, Pose, State, Wrench,
                       acceleration, coriolis_wrench, damping_wrench,
                       kinematic_transform, restoring_wrench, sim_step,
                       substep, wrap_angle)
from .randomize import RandomizationRanges, default_ranges, sample_params
from .tasks import (TaskSpec, Transition, env_step, observe, pose_error,
                    reset, reward, trajectory_point)
from .thrusters import (Thruster, ThrusterLayout, actuate, allocation_matrix,
                        default_layout, thrust_force)
from .vehicle import (ParamsError, VehicleParams, default_params, load_params,
                      neutral_params, save_params)

__version__ = "0.1.0"

__all__ = [
    "BodyVelocity", "EulerSingularityError", "IntegrationDivergedError",
    "ParamsError", "Pose", "RandomizationRanges", "State", "TaskSpec",
    "Thruster", "ThrusterLayout", "Transition", "VehicleParams", "Wrench",
    "acceleration", "actuate", "allocation_matrix", "batch_create",
    "bench_throughput", "coriolis_wrench", "damping_wrench", "default_layout",
    "default_params", "default_ranges", "env_step", "kinematic_transform",
    "load_params", "native_available", "neutral_params", "observe",
    "pose_error", "reset", "resolve_backend", "restoring_wrench", "reward",
    "sample_params", "save_params", "sim_step", "substep", "thrust_force",
    "trajectory_point", "wrap_angle",
]
