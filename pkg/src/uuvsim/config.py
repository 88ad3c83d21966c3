"""Run configuration: one JSON schema shared by the CLI and the native engine.

Top-level keys:

    seed            required integer (no wall-clock seeding anywhere)
    out_dir         output directory (default "runs")
    vehicle         inline vehicle-parameter object, or
    vehicle_params  path to a vehicle parameter file (relative to the config)
    task            task section (kind, trajectory parameters, timing)
    batch           {num_envs, threads, randomization}
    train           training hyperparameters (consumed by the RL harness)

``engine_config_json`` renders the canonical subset (seed/vehicle/task/batch)
that the native engine parses; the FFI boundary accepts the same document.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .dynamics import Pose
from .randomize import RandomizationRanges
from .tasks import TaskSpec
from .vehicle import VehicleParams, default_params, load_params


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def task_to_dict(spec: TaskSpec) -> dict:
    return {
        "kind": spec.kind,
        "target": spec.target.as_array().tolist(),
        "center": list(spec.center),
        "radius": spec.radius,
        "angular_rate": spec.angular_rate,
        "climb_rate": spec.climb_rate,
        "scale": spec.scale,
        "depth": spec.depth,
        "lookahead": spec.lookahead,
        "episode_len": spec.episode_len,
        "control_dt": spec.control_dt,
        "n_substeps": spec.n_substeps,
    }


def task_from_dict(d: dict) -> TaskSpec:
    kw = {}
    if "kind" in d:
        kw["kind"] = d["kind"]
    if "target" in d:
        t = d["target"]
        if len(t) != 6:
            raise ConfigError("task.target must be a 6-vector [x,y,z,phi,theta,psi]")
        kw["target"] = Pose(*t)
    for name in ("radius", "angular_rate", "climb_rate", "scale", "depth",
                 "control_dt"):
        if name in d:
            kw[name] = float(d[name])
    for name in ("lookahead", "episode_len", "n_substeps"):
        if name in d:
            kw[name] = int(d[name])
    if "center" in d:
        kw["center"] = tuple(d["center"])
    try:
        return TaskSpec(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid task section: {e}") from e


@dataclass
class RunConfig:
    vehicle: VehicleParams
    task: TaskSpec
    seed: int
    num_envs: int = 64
    threads: int = 0
    randomization: RandomizationRanges | None = None
    train: dict = field(default_factory=dict)
    out_dir: str = "runs"


def load_run_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return run_config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def run_config_from_dict(raw: dict, base_dir: str = ".") -> RunConfig:
    if "seed" not in raw:
        raise ConfigError("config must set an explicit integer seed")
    seed = int(raw["seed"])

    if "vehicle" in raw:
        vehicle = VehicleParams.from_dict(raw["vehicle"])
    elif "vehicle_params" in raw:
        vpath = raw["vehicle_params"]
        if not os.path.isabs(vpath):
            vpath = os.path.join(base_dir, vpath)
        if not os.path.exists(vpath):
            raise ConfigError(f"vehicle parameter file not found: {vpath}")
        vehicle = load_params(vpath)
    else:
        vehicle = default_params()

    task = task_from_dict(raw.get("task", {}))

    batch = raw.get("batch", {})
    num_envs = int(batch.get("num_envs", 64))
    threads = int(batch.get("threads", 0))
    if num_envs < 1:
        raise ConfigError("batch.num_envs must be >= 1")
    rnd = batch.get("randomization")
    ranges = None
    if rnd is not None:
        try:
            ranges = RandomizationRanges.from_dict(rnd)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid randomization section: {e}") from e

    return RunConfig(vehicle=vehicle, task=task, seed=seed, num_envs=num_envs,
                     threads=threads, randomization=ranges,
                     train=dict(raw.get("train", {})),
                     out_dir=str(raw.get("out_dir", "runs")))


def engine_config_dict(vehicle: VehicleParams, task: TaskSpec, num_envs: int,
                       seed: int, threads: int = 0,
                       randomization: RandomizationRanges | None = None) -> dict:
    return {
        "seed": int(seed),
        "vehicle": vehicle.to_dict(),
        "task": task_to_dict(task),
        "batch": {
            "num_envs": int(num_envs),
            "threads": int(threads),
            "randomization": randomization.to_dict() if randomization else None,
        },
    }


def engine_config_json(vehicle: VehicleParams, task: TaskSpec, num_envs: int,
                       seed: int, threads: int = 0,
                       randomization: RandomizationRanges | None = None) -> str:
    return json.dumps(engine_config_dict(vehicle, task, num_envs, seed,
                                         threads, randomization))
