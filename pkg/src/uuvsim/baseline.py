"""PD station/tracking controller: validates the environments without learning.

Desired wrench = Kp * pose_error - Kd * nu, with the positional error
rotated into the body frame so the controller works at any heading; the
wrench maps to throttles through the pseudo-inverse of the allocation
matrix and the inverse thrust curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tasks import STATION_KEEPING, TaskSpec, _traj_flat
from .thrusters import CURVE_LINEAR, allocation_matrix
from .vehicle import VehicleParams


@dataclass(frozen=True)
class PDGains:
    kp: tuple = (30.0, 30.0, 30.0, 6.0, 6.0, 6.0)
    kd: tuple = (28.0, 28.0, 28.0, 2.0, 2.0, 2.0)

    def __post_init__(self):
        for name in ("kp", "kd"):
            g = tuple(float(v) for v in getattr(self, name))
            if len(g) != 6 or not all(math.isfinite(v) for v in g):
                raise ValueError(f"{name} must be six finite gains")
            object.__setattr__(self, name, g)


def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def pd_baseline(state, reference, gains: PDGains, params: VehicleParams,
                alloc_pinv: np.ndarray | None = None) -> np.ndarray:
    """Throttle vector driving the vehicle toward a reference pose.

    ``state`` is a 12-array (pose + body velocity) or a State;
    ``reference`` a 6-array pose or Pose.
    """
    s = state if isinstance(state, np.ndarray) else state.as_array()
    r = reference if isinstance(reference, np.ndarray) else reference.as_array()
    if alloc_pinv is None:
        alloc_pinv = np.linalg.pinv(allocation_matrix(params.thrusters))

    err_world = r[0:3] - s[0:3]
    phi, theta, psi = s[3], s[4], s[5]
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    rot = np.array([
        [cpsi * cth, -spsi * cphi + cpsi * sth * sphi, spsi * sphi + cpsi * cphi * sth],
        [spsi * cth, cpsi * cphi + sphi * sth * spsi, -cpsi * sphi + sth * spsi * cphi],
        [-sth, cth * sphi, cth * cphi]])
    err_body = rot.T @ err_world
    err_ang = _wrap(r[3:6] - s[3:6])

    kp = np.asarray(gains.kp)
    kd = np.asarray(gains.kd)
    err6 = np.concatenate([err_body, err_ang])
    wrench = kp * err6 - kd * s[6:12]

    forces = alloc_pinv @ wrench
    throttles = np.empty_like(forces)
    for i, t in enumerate(params.thrusters.thrusters):
        f = forces[i]
        if t.curve == CURVE_LINEAR:
            throttles[i] = f / t.max_thrust
        else:
            throttles[i] = math.copysign(math.sqrt(abs(f) / t.max_thrust), f)
    return np.clip(throttles, -1.0, 1.0)


@dataclass
class PDActor:
    """evaluate()-compatible PD controller; tracks the task reference."""

    spec: TaskSpec
    params: VehicleParams
    gains: PDGains = field(default_factory=PDGains)

    def __post_init__(self):
        self._pinv = np.linalg.pinv(allocation_matrix(self.params.thrusters))
        self._kt = self.spec.kernel()

    def reference(self, step: int) -> np.ndarray:
        if self.spec.kind == STATION_KEEPING:
            return self.spec.target.as_array()
        x, y, z, psi = _traj_flat(self._kt, step * self.spec.control_dt)
        return np.array([x, y, z, 0.0, 0.0, psi])

    def __call__(self, obs, states, step):
        ref = self.reference(step)
        out = np.zeros((states.shape[0], len(self.params.thrusters)))
        for i in range(states.shape[0]):
            out[i] = pd_baseline(states[i], ref, self.gains, self.params,
                                 self._pinv)
        return out
