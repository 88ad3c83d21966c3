"""Benchmark tasks: station-keeping and circle / helix / lemniscate tracking.

The environment contract is Gym-style: ``env_step`` advances one control
period and returns the next state plus a transition record. Observations
are pose errors to the reference (station-keeping: the fixed target;
tracking: the next ``lookahead`` trajectory points) concatenated with the
body velocity. Reward is the negative Euclidean distance to the current
reference position, so the per-episode return is minus the accumulated
path error.

The flat ``_..._flat`` helpers operate on plain floats with pinned
operation order; both the pure-Python batch backend and the native engine
follow them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng
from .dynamics import Pose, State, wrap_angle, _substep_flat, STATE_COMPONENTS
from .thrusters import _wrench_flat
from .vehicle import KernelParams, VehicleParams

STATION_KEEPING = "station_keeping"
CIRCLE = "circle"
HELIX = "helix"
LEMNISCATE = "lemniscate"
TASK_KINDS = (STATION_KEEPING, CIRCLE, HELIX, LEMNISCATE)
TRACKING_KINDS = (CIRCLE, HELIX, LEMNISCATE)

KIND_CODES = {STATION_KEEPING: 0, CIRCLE: 1, HELIX: 2, LEMNISCATE: 3}

# Episode ends early once the position error exceeds this radius (m).
DIVERGENCE_RADIUS = 10.0

# Termination reasons (codes shared with the batched kernels).
REASONS = ("truncation", "divergence", "failure")

# Reset distribution: position box half-width (m), attitude half-widths (rad).
RESET_POS_HALF = 1.0
RESET_ROLL_PITCH_HALF = 0.1
RESET_YAW_HALF = 0.5


@dataclass(frozen=True)
class TaskSpec:
    """One benchmark task plus episode/timing settings."""

    kind: str = STATION_KEEPING
    target: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 2.0, 0.0, 0.0, 0.0))
    radius: float = 1.0              # circle / helix radius (m)
    angular_rate: float = 0.1        # trajectory angular rate (rad/s)
    climb_rate: float = 0.05         # helix vertical rate (m/s, +down)
    scale: float = 2.0               # lemniscate half-width (m)
    depth: float = 2.0               # trajectory plane depth (m, NED z)
    center: tuple = (0.0, 0.0)
    lookahead: int = 5               # tracking observation points
    episode_len: int = 600           # control steps per episode
    control_dt: float = 0.05         # s per control step
    n_substeps: int = 10

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.lookahead < 1:
            raise ValueError("lookahead must be >= 1")
        if self.episode_len < 1:
            raise ValueError("episode_len must be >= 1")
        if self.kind in (CIRCLE, HELIX) and not self.radius > 0.0:
            raise ValueError("radius must be positive")
        if self.kind == LEMNISCATE and not self.scale > 0.0:
            raise ValueError("scale must be positive")
        if not self.control_dt > 0.0:
            raise ValueError("control_dt must be positive")
        if self.n_substeps < 1:
            raise ValueError("n_substeps must be >= 1")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def obs_dim(self) -> int:
        if self.kind == STATION_KEEPING:
            return 12
        return 6 * self.lookahead + 6

    def kernel(self) -> "KernelTask":
        return KernelTask(
            kind=KIND_CODES[self.kind],
            target=tuple(self.target.as_array().tolist()),
            cx=self.center[0], cy=self.center[1],
            radius=self.radius, omega=self.angular_rate,
            climb=self.climb_rate, scale=self.scale, depth=self.depth,
            lookahead=self.lookahead, episode_len=self.episode_len,
            control_dt=self.control_dt, n_substeps=self.n_substeps,
            sub_dt=self.control_dt / self.n_substeps)


@dataclass(frozen=True)
class KernelTask:
    kind: int
    target: tuple
    cx: float
    cy: float
    radius: float
    omega: float
    climb: float
    scale: float
    depth: float
    lookahead: int
    episode_len: int
    control_dt: float
    n_substeps: int
    sub_dt: float


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    reward: float
    done: bool
    info: dict


# ---------------------------------------------------------------------------
# Flat kernels (pinned operation order).
# ---------------------------------------------------------------------------

def _traj_flat(kt: KernelTask, t: float):
    """Reference (x, y, z, psi) at path time t for a tracking task."""
    ang = kt.omega * t
    ca = math.cos(ang)
    sa = math.sin(ang)
    if kt.kind == 1:      # circle
        x = kt.cx + kt.radius * ca
        y = kt.cy + kt.radius * sa
        z = kt.depth
        psi = math.atan2(ca, -sa)
    elif kt.kind == 2:    # helix
        x = kt.cx + kt.radius * ca
        y = kt.cy + kt.radius * sa
        z = kt.depth + kt.climb * t
        psi = math.atan2(ca, -sa)
    else:                 # lemniscate (Gerono figure-eight)
        x = kt.cx + kt.scale * ca
        y = kt.cy + kt.scale * (sa * ca)
        z = kt.depth
        c2a = ca * ca - sa * sa
        psi = math.atan2(c2a, -sa)
    return x, y, z, psi


def _reference_flat(kt: KernelTask, step: int):
    """Reference position at control-step index ``step`` (x, y, z)."""
    if kt.kind == 0:
        return kt.target[0], kt.target[1], kt.target[2]
    x, y, z, _ = _traj_flat(kt, float(step) * kt.control_dt)
    return x, y, z


def _observe_flat(kt: KernelTask, s: Sequence[float], step: int):
    if kt.kind == 0:
        tg = kt.target
        obs = [tg[0] - s[0], tg[1] - s[1], tg[2] - s[2],
               wrap_angle(tg[3] - s[3]), wrap_angle(tg[4] - s[4]),
               wrap_angle(tg[5] - s[5])]
    else:
        obs = []
        for k in range(1, kt.lookahead + 1):
            t = float(step + k) * kt.control_dt
            rx, ry, rz, rpsi = _traj_flat(kt, t)
            obs.append(rx - s[0])
            obs.append(ry - s[1])
            obs.append(rz - s[2])
            obs.append(wrap_angle(0.0 - s[3]))
            obs.append(wrap_angle(0.0 - s[4]))
            obs.append(wrap_angle(rpsi - s[5]))
    for i in range(6, 12):
        obs.append(s[i])
    return obs


def _reset_flat(kt: KernelTask, stream: rng.Stream):
    if kt.kind == 0:
        sx, sy, sz = kt.target[0], kt.target[1], kt.target[2]
        ref_psi = kt.target[5]
    else:
        sx, sy, sz, ref_psi = _traj_flat(kt, 0.0)
    x = sx + stream.next_uniform(-RESET_POS_HALF, RESET_POS_HALF)
    y = sy + stream.next_uniform(-RESET_POS_HALF, RESET_POS_HALF)
    z = sz + stream.next_uniform(-RESET_POS_HALF, RESET_POS_HALF)
    phi = stream.next_uniform(-RESET_ROLL_PITCH_HALF, RESET_ROLL_PITCH_HALF)
    theta = stream.next_uniform(-RESET_ROLL_PITCH_HALF, RESET_ROLL_PITCH_HALF)
    psi = wrap_angle(ref_psi + stream.next_uniform(-RESET_YAW_HALF, RESET_YAW_HALF))
    return (x, y, z, phi, theta, psi, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _env_step_flat(kp: KernelParams, kt: KernelTask, s, step: int, action):
    """One control step. Returns
    (state', new_step, reward, done, reason_code, pos_err, fail_component).

    reason_code: -1 none, 0 truncation, 1 divergence, 2 integration failure.
    On integration failure the last finite state is kept.
    """
    tau = _wrench_flat(kp.alloc, kp.max_thrust, kp.curve_codes, action)
    failed = -1
    cur = s
    for _ in range(kt.n_substeps):
        nxt, fail, _clamped = _substep_flat(kp, cur, tau, kt.sub_dt)
        if fail >= 0:
            failed = fail
            break
        cur = nxt
    new_step = step + 1
    rx, ry, rz = _reference_flat(kt, new_step)
    dx = rx - cur[0]
    dy = ry - cur[1]
    dz = rz - cur[2]
    pos_err = math.sqrt(dx * dx + dy * dy + dz * dz)
    reward = -pos_err
    if failed >= 0:
        return cur, new_step, reward, True, 2, pos_err, failed
    if pos_err > DIVERGENCE_RADIUS:
        return cur, new_step, reward, True, 1, pos_err, -1
    if new_step >= kt.episode_len:
        return cur, new_step, reward, True, 0, pos_err, -1
    return cur, new_step, reward, False, -1, pos_err, -1


# ---------------------------------------------------------------------------
# Public operations.
# ---------------------------------------------------------------------------

def trajectory_point(spec: TaskSpec, t: float) -> Pose:
    """Reference pose at path time t; yaw follows the path tangent."""
    if spec.kind not in TRACKING_KINDS:
        raise ValueError(f"task kind {spec.kind!r} has no trajectory")
    x, y, z, psi = _traj_flat(spec.kernel(), float(t))
    return Pose(x, y, z, 0.0, 0.0, psi)


def pose_error(current: Pose, reference: Pose) -> np.ndarray:
    """reference - current, with angle differences wrapped to (-pi, pi]."""
    return np.array([
        reference.x - current.x,
        reference.y - current.y,
        reference.z - current.z,
        wrap_angle(reference.phi - current.phi),
        wrap_angle(reference.theta - current.theta),
        wrap_angle(reference.psi - current.psi),
    ])


def observe(spec: TaskSpec, state: State, step: int) -> np.ndarray:
    """Observation at control-step index ``step``.

    Station-keeping: pose error to the target then body velocity (12).
    Tracking: errors to the next ``lookahead`` reference points then body
    velocity (6 * lookahead + 6).
    """
    return np.array(_observe_flat(spec.kernel(), state.as_array().tolist(), step))


def reward(spec: TaskSpec, state: State, step: int) -> float:
    """Negative Euclidean distance to the step's reference position."""
    rx, ry, rz = _reference_flat(spec.kernel(), step)
    dx = rx - state.pose.x
    dy = ry - state.pose.y
    dz = rz - state.pose.z
    return -math.sqrt(dx * dx + dy * dy + dz * dz)


def reset(spec: TaskSpec, stream: rng.Stream) -> State:
    """Draw an initial state near the task spawn point; velocity zero."""
    return State.from_array(_reset_flat(spec.kernel(), stream))


def env_step(spec: TaskSpec, params: VehicleParams, state: State,
             action: Sequence[float], step: int):
    """Advance one control step; returns (state', Transition).

    Integration failure never raises: it surfaces as done=True with
    reason "failure" and the last finite state.
    """
    kt = spec.kernel()
    kp = params.kernel()
    act = [float(a) for a in action]
    if len(act) != kp.n_thrusters:
        raise ValueError(f"action length {len(act)} != thruster count {kp.n_thrusters}")
    s, new_step, rew, done, reason, pos_err, fail = _env_step_flat(
        kp, kt, state.as_array().tolist(), step, act)
    new_state = State.from_array(s)
    info = {"step": new_step, "pos_error": pos_err,
            "reason": REASONS[reason] if done else None}
    if fail >= 0:
        info["failed_component"] = STATE_COMPONENTS[fail]
    return new_state, Transition(obs=np.array(_observe_flat(kt, s, new_step)),
                                 reward=rew, done=done, info=info)
