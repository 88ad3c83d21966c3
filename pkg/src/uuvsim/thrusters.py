"""Thruster geometry and the throttle -> body-wrench map.

Throttles are dimensionless in [-1, 1] (clamped before use). Each thruster
contributes a force along its body-frame direction at its mounting point;
the allocation matrix collects [direction ; position x direction] columns so
that wrench = A @ forces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import Wrench

CURVE_LINEAR = "linear"
CURVE_QUADRATIC = "quadratic_signed"
_CURVES = (CURVE_LINEAR, CURVE_QUADRATIC)

# Numeric codes shared with the batched kernels.
CURVE_CODES = {CURVE_LINEAR: 0, CURVE_QUADRATIC: 1}


@dataclass(frozen=True)
class Thruster:
    """One thruster: mounting point (m), unit direction, peak thrust (N)."""

    position: tuple
    direction: tuple
    max_thrust: float
    curve: str = CURVE_QUADRATIC

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "direction", tuple(float(c) for c in self.direction))
        if len(self.position) != 3 or len(self.direction) != 3:
            raise ValueError("thruster position/direction must be 3-vectors")
        n = math.sqrt(sum(c * c for c in self.direction))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"thruster direction must be unit norm, got {n!r}")
        if not self.max_thrust > 0.0:
            raise ValueError("max_thrust must be positive")
        if self.curve not in _CURVES:
            raise ValueError(f"unknown thrust curve {self.curve!r}")


@dataclass(frozen=True)
class ThrusterLayout:
    thrusters: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "thrusters", tuple(self.thrusters))
        if len(self.thrusters) < 1:
            raise ValueError("layout needs at least one thruster")

    def __len__(self) -> int:
        return len(self.thrusters)


def clamp_throttle(t: float) -> float:
    if t > 1.0:
        return 1.0
    if t < -1.0:
        return -1.0
    return t


def thrust_force(throttle: float, max_thrust: float, curve: str) -> float:
    """Force (N) produced at a throttle setting; monotone and odd-symmetric."""
    t = clamp_throttle(float(throttle))
    if curve == CURVE_LINEAR:
        return max_thrust * t
    if curve == CURVE_QUADRATIC:
        return max_thrust * (t * abs(t))
    raise ValueError(f"unknown thrust curve {curve!r}")


def allocation_matrix(layout: ThrusterLayout) -> np.ndarray:
    """6 x N matrix with columns [direction ; position x direction]."""
    n = len(layout)
    a = np.zeros((6, n))
    for i, t in enumerate(layout.thrusters):
        px, py, pz = t.position
        dx, dy, dz = t.direction
        a[0, i] = dx
        a[1, i] = dy
        a[2, i] = dz
        a[3, i] = py * dz - pz * dy
        a[4, i] = pz * dx - px * dz
        a[5, i] = px * dy - py * dx
    return a


def _wrench_flat(alloc: Sequence[float], kmax: Sequence[float],
                 curve_codes: Sequence[int], action: Sequence[float]):
    """Order-pinned throttle -> wrench map on a flat row-major 6xN allocation."""
    n = len(kmax)
    forces = [0.0] * n
    for i in range(n):
        t = action[i]
        if t > 1.0:
            t = 1.0
        elif t < -1.0:
            t = -1.0
        if curve_codes[i] == 0:
            forces[i] = kmax[i] * t
        else:
            forces[i] = kmax[i] * (t * abs(t))
    out = [0.0] * 6
    for r in range(6):
        s = 0.0
        base = r * n
        for i in range(n):
            s += alloc[base + i] * forces[i]
        out[r] = s
    return out


def actuate(layout: ThrusterLayout, action: Sequence[float]) -> Wrench:
    """Map an N-vector of throttles to the net body wrench."""
    if len(action) != len(layout):
        raise ValueError(f"action length {len(action)} != thruster count {len(layout)}")
    alloc = allocation_matrix(layout).reshape(-1).tolist()
    kmax = [t.max_thrust for t in layout.thrusters]
    codes = [CURVE_CODES[t.curve] for t in layout.thrusters]
    return Wrench(*_wrench_flat(alloc, kmax, codes, [float(a) for a in action]))


def default_layout() -> ThrusterLayout:
    """Eight-thruster vectored layout: 4 horizontal at +-45 deg, 4 vertical.

    Engineering default for a BlueROV2-Heavy-class frame; positions are
    symmetric so equal vertical throttle yields pure heave.
    """
    c = math.sqrt(2.0) / 2.0
    ax, ay = 0.156, 0.111
    vx, vy = 0.120, 0.218
    k = 35.0
    horizontals = [
        Thruster((ax, ay, 0.0), (c, c, 0.0), k),
        Thruster((ax, -ay, 0.0), (c, -c, 0.0), k),
        Thruster((-ax, ay, 0.0), (c, -c, 0.0), k),
        Thruster((-ax, -ay, 0.0), (c, c, 0.0), k),
    ]
    verticals = [
        Thruster((vx, vy, 0.0), (0.0, 0.0, -1.0), k),
        Thruster((vx, -vy, 0.0), (0.0, 0.0, -1.0), k),
        Thruster((-vx, vy, 0.0), (0.0, 0.0, -1.0), k),
        Thruster((-vx, -vy, 0.0), (0.0, 0.0, -1.0), k),
    ]
    return ThrusterLayout(tuple(horizontals + verticals))
