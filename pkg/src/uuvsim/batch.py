"""Lockstep execution of M environment instances.

Storage is structure-of-arrays; every environment owns counted random
streams derived from (root_seed, env index), so results are independent of
execution order and thread count, and a batch of M is bit-identical to M
sequential single-environment runs.

Two interchangeable backends:

* ``native`` -- the compiled core (preferred; data-parallel across a worker
  pool, loaded via ctypes).
* ``python`` -- a pure-Python loop over the same flat kernels used by the
  single-env API. Slow but dependency-free; selected automatically when the
  compiled library is absent, or via UUVSIM_BACKEND=python.

Environments that finish an episode are reset in place: the returned obs
row is the post-reset observation while reward/done describe the
terminating step.
"""

from __future__ import annotations

import os
import time

import numpy as np

from . import rng
from ._native import NativeEnvBatch, native_available
from .config import engine_config_json
from .randomize import RandomizationRanges, sample_params
from .tasks import TaskSpec, _env_step_flat, _observe_flat, _reset_flat
from .vehicle import ParamsError, VehicleParams


class PyEnvBatch:
    """Pure-Python batch backend; exact reference for the native engine."""

    backend = "python"

    def __init__(self, spec: TaskSpec, base: VehicleParams,
                 ranges: RandomizationRanges | None, num_envs: int,
                 root_seed: int, threads: int = 0):
        if num_envs < 1:
            raise ValueError("num_envs must be >= 1")
        self.spec = spec
        self.base = base
        self.ranges = ranges
        self.num_envs = int(num_envs)
        self.obs_dim = spec.obs_dim
        self.action_dim = base.kernel().n_thrusters
        self.episode_len = spec.episode_len
        self.root_seed = int(root_seed)
        self.threads = int(threads)  # advisory; this backend runs serially
        self._kt = spec.kernel()
        self._param_streams = [rng.Stream(root_seed, i, rng.PURPOSE_PARAMS)
                               for i in range(num_envs)]
        self._reset_streams = [rng.Stream(root_seed, i, rng.PURPOSE_RESET)
                               for i in range(num_envs)]
        self.env_params: list[VehicleParams] = []
        for i in range(num_envs):
            if ranges is not None:
                try:
                    p = sample_params(base, ranges, self._param_streams[i])
                except ParamsError as e:
                    raise ParamsError(f"env {i}: {e}") from e
            else:
                p = base
            self.env_params.append(p)
        self._kp = [p.kernel() for p in self.env_params]
        self._states = [None] * num_envs
        self._steps = [0] * num_envs
        self.reset_all(root_seed)

    def reset_all(self, seed: int) -> np.ndarray:
        """Re-seed the episode streams and redraw every initial state."""
        self.root_seed = int(seed)
        obs = [None] * self.num_envs
        for i in range(self.num_envs):
            st = self._reset_streams[i]
            st.root_seed = self.root_seed
            st.counter = 0
            self._param_streams[i].root_seed = self.root_seed
            s = _reset_flat(self._kt, st)
            self._states[i] = s
            self._steps[i] = 0
            obs[i] = _observe_flat(self._kt, s, 0)
        return np.array(obs)

    def step(self, actions: np.ndarray):
        act = np.asarray(actions, dtype=np.float64)
        if act.shape != (self.num_envs, self.action_dim):
            raise ValueError(
                f"actions must have shape {(self.num_envs, self.action_dim)}, "
                f"got {act.shape}")
        act_rows = act.tolist()
        kt = self._kt
        obs = [None] * self.num_envs
        rewards = [0.0] * self.num_envs
        dones = [False] * self.num_envs
        for i in range(self.num_envs):
            s, new_step, rew, done, _reason, _err, _fail = _env_step_flat(
                self._kp[i], kt, self._states[i], self._steps[i], act_rows[i])
            rewards[i] = rew
            dones[i] = done
            if done:
                if self.ranges is not None and self.ranges.per_episode:
                    self.env_params[i] = sample_params(
                        self.base, self.ranges, self._param_streams[i])
                    self._kp[i] = self.env_params[i].kernel()
                s = _reset_flat(kt, self._reset_streams[i])
                self._states[i] = s
                self._steps[i] = 0
                obs[i] = _observe_flat(kt, s, 0)
            else:
                self._states[i] = s
                self._steps[i] = new_step
                obs[i] = _observe_flat(kt, s, new_step)
        return np.array(obs), np.array(rewards), np.array(dones, dtype=bool)

    def states(self) -> np.ndarray:
        return np.array(self._states)

    def step_counts(self) -> np.ndarray:
        return np.array(self._steps, dtype=np.int64)

    def set_threads(self, n: int):
        self.threads = int(n)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def resolve_backend(backend: str | None = None) -> str:
    """Pick the batch backend: explicit arg > UUVSIM_BACKEND > native if built."""
    choice = backend or os.environ.get("UUVSIM_BACKEND") or ""
    if choice not in ("", "auto", "native", "python"):
        raise ValueError(f"unknown backend {choice!r}")
    if choice == "python":
        return "python"
    if choice == "native":
        if not native_available():
            raise RuntimeError(
                "native backend requested but libuuvsim_core is not available "
                "(build it with `make native`)")
        return "native"
    return "native" if native_available() else "python"


def batch_create(spec: TaskSpec, base: VehicleParams,
                 ranges: RandomizationRanges | None, num_envs: int,
                 root_seed: int, threads: int = 0, backend: str | None = None):
    """Create M environments, each reset from its own counted stream."""
    kind = resolve_backend(backend)
    if kind == "native":
        cfg = engine_config_json(base, spec, num_envs, root_seed,
                                 threads=threads, randomization=ranges)
        return NativeEnvBatch(cfg, root_seed, threads=threads)
    return PyEnvBatch(spec, base, ranges, num_envs, root_seed, threads=threads)


def bench_actions(batch) -> np.ndarray:
    """The fixed random action matrix used for throughput runs."""
    m, n = batch.num_envs, batch.action_dim
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            u = rng.u01(rng.draw_u64(batch.root_seed, i, rng.PURPOSE_BENCH, j))
            out[i, j] = rng.uniform(-1.0, 1.0, u)
    return out


def bench_throughput(batch, n_steps: int, threads: int | None = None) -> dict:
    """Step the batch n_steps times under fixed random actions and time it."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if threads is not None:
        batch.set_threads(threads)
    actions = bench_actions(batch)
    t0 = time.perf_counter()
    for _ in range(n_steps):
        batch.step(actions)
    wall = time.perf_counter() - t0
    return {
        "env_steps_per_sec": batch.num_envs * n_steps / wall,
        "wall_time_s": wall,
        "n_steps": n_steps,
        "num_envs": batch.num_envs,
        "threads": batch.threads,
        "backend": batch.backend,
    }
