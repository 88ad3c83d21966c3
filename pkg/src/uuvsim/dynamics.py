"""Six-DOF rigid-body dynamics of a submerged vehicle.

Conventions (Fossen-style marine craft model):

* World frame is North-East-Down (NED): x north, y east, z down.
* ``Pose`` is eta = (x, y, z, phi, theta, psi) with ZYX Euler angles.
* ``BodyVelocity`` is nu = (u, v, w, p, q, r) in the body-fixed frame.
* The equation of motion solved here is

      (M_RB + M_A) nudot + C(nu) nu + D(nu) nu = tau + g_rest(eta)

  where ``g_rest`` is the combined gravity/buoyancy wrench acting on the
  body (so at a level pose with W > B it points down, +z).

Integration is semi-implicit Euler: velocity first, then pose using the
updated velocity. The mass matrix is factored once per parameter set.

All scalar helpers below are written with a pinned operation order (plain
float arithmetic, libm transcendentals, no vectorised reductions) because
the batched backends replicate them step for step; reordering a sum here
breaks bit-reproducibility against the native engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .vehicle import VehicleParams

TWO_PI = 2.0 * math.pi

# Pitch magnitude past which the Euler kinematics are treated as singular.
PITCH_LIMIT = math.pi / 2.0 - 1e-3

STATE_COMPONENTS = ("x", "y", "z", "phi", "theta", "psi",
                    "u", "v", "w", "p", "q", "r")


class EulerSingularityError(ValueError):
    """Pitch too close to +-pi/2 for the Euler-angle kinematic map."""


class IntegrationDivergedError(ArithmeticError):
    """A sub-step produced a non-finite state component."""

    def __init__(self, component: str):
        self.component = component
        super().__init__(f"integration diverged: component '{component}' is non-finite")


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.fmod(a + math.pi, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r - math.pi


@dataclass(frozen=True)
class Pose:
    """NED position (m) and ZYX Euler attitude (rad); angles wrap to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "psi", wrap_angle(float(self.psi)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.phi, self.theta, self.psi])


@dataclass(frozen=True)
class BodyVelocity:
    """Body-frame linear (m/s) and angular (rad/s) velocity."""

    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w, self.p, self.q, self.r])


@dataclass(frozen=True)
class State:
    """Full vehicle state: pose plus body velocity.

    ``pitch_clamped`` is integrator metadata: set when a sub-step had to
    clamp pitch at the singularity guard. It does not participate in
    equality so clamp-free round trips compare clean.
    """

    pose: Pose = field(default_factory=Pose)
    vel: BodyVelocity = field(default_factory=BodyVelocity)
    pitch_clamped: bool = field(default=False, compare=False)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.pose.as_array(), self.vel.as_array()])

    @staticmethod
    def from_array(a: Sequence[float], pitch_clamped: bool = False) -> "State":
        return State(Pose(*a[0:6]), BodyVelocity(*a[6:12]), pitch_clamped)


@dataclass(frozen=True)
class Wrench:
    """Body-frame force (N) and moment (N m)."""

    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0
    mx: float = 0.0
    my: float = 0.0
    mz: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.fz, self.mx, self.my, self.mz])

    @staticmethod
    def from_array(a: Sequence[float]) -> "Wrench":
        return Wrench(*(float(c) for c in a[0:6]))


# ---------------------------------------------------------------------------
# Order-pinned scalar kernels. A 6x6 matrix is a flat row-major tuple of 36
# floats; vectors are plain float tuples.
# ---------------------------------------------------------------------------

def _matvec6(m: Sequence[float], v: Sequence[float]):
    out = [0.0] * 6
    for i in range(6):
        s = 0.0
        base = i * 6
        for j in range(6):
            s += m[base + j] * v[j]
        out[i] = s
    return out


def _cross(ax, ay, az, bx, by, bz):
    return (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)


def _cholesky6(m: Sequence[float]):
    """Lower Cholesky factor of a flat 6x6 SPD matrix; raises on non-PD."""
    L = [0.0] * 36
    for i in range(6):
        for j in range(i + 1):
            s = m[i * 6 + j]
            for k in range(j):
                s -= L[i * 6 + k] * L[j * 6 + k]
            if i == j:
                if s <= 0.0:
                    raise ValueError("matrix is not positive definite")
                L[i * 6 + i] = math.sqrt(s)
            else:
                L[i * 6 + j] = s / L[j * 6 + j]
    return L


def _cholesky_solve6(L: Sequence[float], b: Sequence[float]):
    y = [0.0] * 6
    for i in range(6):
        s = b[i]
        for k in range(i):
            s -= L[i * 6 + k] * y[k]
        y[i] = s / L[i * 6 + i]
    x = [0.0] * 6
    for i in range(5, -1, -1):
        s = y[i]
        for k in range(i + 1, 6):
            s -= L[k * 6 + i] * x[k]
        x[i] = s / L[i * 6 + i]
    return x


def _coriolis6(m: Sequence[float], v: Sequence[float]):
    """C(M, nu) nu with the standard skew-block construction of C."""
    a1 = [0.0] * 3
    a2 = [0.0] * 3
    for i in range(3):
        s = 0.0
        base = i * 6
        for j in range(6):
            s += m[base + j] * v[j]
        a1[i] = s
    for i in range(3, 6):
        s = 0.0
        base = i * 6
        for j in range(6):
            s += m[base + j] * v[j]
        a2[i - 3] = s
    # C = [[0, -S(a1)], [-S(a1), -S(a2)]]  =>  C nu = [nu2 x a1 ; nu1 x a1 + nu2 x a2]
    c0, c1, c2 = _cross(v[3], v[4], v[5], a1[0], a1[1], a1[2])
    t0, t1, t2 = _cross(v[0], v[1], v[2], a1[0], a1[1], a1[2])
    s0, s1, s2 = _cross(v[3], v[4], v[5], a2[0], a2[1], a2[2])
    return (c0, c1, c2, t0 + s0, t1 + s1, t2 + s2)


def _damping6(dlin: Sequence[float], dquad: Sequence[float], v: Sequence[float]):
    """D(nu) nu: linear matrix term plus per-axis quadratic |nu| nu term."""
    out = [0.0] * 6
    for i in range(6):
        s = 0.0
        base = i * 6
        for j in range(6):
            s += dlin[base + j] * v[j]
        out[i] = s + dquad[i] * abs(v[i]) * v[i]
    return out


def _restoring6(w, b, rg, rb, sphi, cphi, sth, cth):
    """Gravity + buoyancy wrench acting on the body (body frame).

    Weight W acts down (+z NED) at r_g, buoyancy B up at r_b; both are
    rotated into the body frame through the third row of R_zyx.
    """
    cth_sphi = cth * sphi
    cth_cphi = cth * cphi
    fgx = -w * sth
    fgy = w * cth_sphi
    fgz = w * cth_cphi
    fbx = b * sth
    fby = -b * cth_sphi
    fbz = -b * cth_cphi
    mgx, mgy, mgz = _cross(rg[0], rg[1], rg[2], fgx, fgy, fgz)
    mbx, mby, mbz = _cross(rb[0], rb[1], rb[2], fbx, fby, fbz)
    return (fgx + fbx, fgy + fby, fgz + fbz, mgx + mbx, mgy + mby, mgz + mbz)


def _substep_flat(kp, s, tau, dt):
    """One semi-implicit Euler sub-step on a flat 12-float state.

    Returns (new_state, fail_index, pitch_clamped); fail_index is -1 when
    every output component is finite, else the index of the first bad one
    (the caller decides whether to raise or flag).
    """
    v = (s[6], s[7], s[8], s[9], s[10], s[11])
    sphi = math.sin(s[3])
    cphi = math.cos(s[3])
    sth = math.sin(s[4])
    cth = math.cos(s[4])
    spsi = math.sin(s[5])
    cpsi = math.cos(s[5])

    c = _coriolis6(kp.m_total, v)
    d = _damping6(kp.damping_linear, kp.damping_quadratic, v)
    g = _restoring6(kp.weight, kp.buoyancy, kp.r_g, kp.r_b, sphi, cphi, sth, cth)
    rhs = [tau[i] - c[i] - d[i] + g[i] for i in range(6)]
    acc = _cholesky_solve6(kp.chol, rhs)

    u2 = v[0] + dt * acc[0]
    v2 = v[1] + dt * acc[1]
    w2 = v[2] + dt * acc[2]
    p2 = v[3] + dt * acc[3]
    q2 = v[4] + dt * acc[4]
    r2 = v[5] + dt * acc[5]

    # Pose rate at the pre-step pose with the updated velocity.
    xdot = cpsi * cth * u2 + (-spsi * cphi + cpsi * sth * sphi) * v2 \
        + (spsi * sphi + cpsi * cphi * sth) * w2
    ydot = spsi * cth * u2 + (cpsi * cphi + sphi * sth * spsi) * v2 \
        + (-cpsi * sphi + sth * spsi * cphi) * w2
    zdot = -sth * u2 + cth * sphi * v2 + cth * cphi * w2
    tth = sth / cth
    phidot = p2 + sphi * tth * q2 + cphi * tth * r2
    thetadot = cphi * q2 - sphi * r2
    psidot = sphi / cth * q2 + cphi / cth * r2

    x2 = s[0] + dt * xdot
    y2 = s[1] + dt * ydot
    z2 = s[2] + dt * zdot
    phi2 = wrap_angle(s[3] + dt * phidot)
    theta2 = wrap_angle(s[4] + dt * thetadot)
    psi2 = wrap_angle(s[5] + dt * psidot)

    clamped = False
    if theta2 > PITCH_LIMIT:
        theta2 = PITCH_LIMIT
        clamped = True
    elif theta2 < -PITCH_LIMIT:
        theta2 = -PITCH_LIMIT
        clamped = True

    out = (x2, y2, z2, phi2, theta2, psi2, u2, v2, w2, p2, q2, r2)
    fail = -1
    for i in range(12):
        if not math.isfinite(out[i]):
            fail = i
            break
    return out, fail, clamped


# ---------------------------------------------------------------------------
# Public operations.
# ---------------------------------------------------------------------------

def kinematic_transform(pose: Pose, vel: BodyVelocity) -> np.ndarray:
    """Pose rate etadot = J(eta) nu: world position rate + Euler angle rates.

    Raises EulerSingularityError when |theta| is at the singularity guard.
    """
    if abs(pose.theta) >= PITCH_LIMIT:
        raise EulerSingularityError(
            f"pitch {pose.theta:.6f} rad is inside the Euler singularity guard")
    sphi = math.sin(pose.phi)
    cphi = math.cos(pose.phi)
    sth = math.sin(pose.theta)
    cth = math.cos(pose.theta)
    spsi = math.sin(pose.psi)
    cpsi = math.cos(pose.psi)
    u, v, w, p, q, r = vel.u, vel.v, vel.w, vel.p, vel.q, vel.r
    xdot = cpsi * cth * u + (-spsi * cphi + cpsi * sth * sphi) * v \
        + (spsi * sphi + cpsi * cphi * sth) * w
    ydot = spsi * cth * u + (cpsi * cphi + sphi * sth * spsi) * v \
        + (-cpsi * sphi + sth * spsi * cphi) * w
    zdot = -sth * u + cth * sphi * v + cth * cphi * w
    tth = sth / cth
    phidot = p + sphi * tth * q + cphi * tth * r
    thetadot = cphi * q - sphi * r
    psidot = sphi / cth * q + cphi / cth * r
    return np.array([xdot, ydot, zdot, phidot, thetadot, psidot])


def coriolis_wrench(params: "VehicleParams", vel: BodyVelocity) -> Wrench:
    """C(M_RB + M_A, nu) nu -- the velocity-coupling term of the motion equation."""
    kp = params.kernel()
    return Wrench(*_coriolis6(kp.m_total, vel.as_array().tolist()))


def damping_wrench(params: "VehicleParams", vel: BodyVelocity) -> Wrench:
    """Hydrodynamic resistance acting on the body: -(D_lin nu + diag(D_quad)|nu| nu)."""
    kp = params.kernel()
    d = _damping6(kp.damping_linear, kp.damping_quadratic, vel.as_array().tolist())
    return Wrench(-d[0], -d[1], -d[2], -d[3], -d[4], -d[5])


def restoring_wrench(params: "VehicleParams", pose: Pose) -> Wrench:
    """Combined gravity + buoyancy wrench acting on the body, body frame."""
    kp = params.kernel()
    sphi = math.sin(pose.phi)
    cphi = math.cos(pose.phi)
    sth = math.sin(pose.theta)
    cth = math.cos(pose.theta)
    return Wrench(*_restoring6(kp.weight, kp.buoyancy, kp.r_g, kp.r_b,
                               sphi, cphi, sth, cth))


def acceleration(params: "VehicleParams", state: State, control: Wrench) -> np.ndarray:
    """Body acceleration nudot solving (M_RB + M_A) nudot = tau - C nu - D nu + g_rest."""
    kp = params.kernel()
    v = state.vel.as_array().tolist()
    tau = control.as_array().tolist()
    c = _coriolis6(kp.m_total, v)
    d = _damping6(kp.damping_linear, kp.damping_quadratic, v)
    sphi = math.sin(state.pose.phi)
    cphi = math.cos(state.pose.phi)
    sth = math.sin(state.pose.theta)
    cth = math.cos(state.pose.theta)
    g = _restoring6(kp.weight, kp.buoyancy, kp.r_g, kp.r_b, sphi, cphi, sth, cth)
    rhs = [tau[i] - c[i] - d[i] + g[i] for i in range(6)]
    return np.array(_cholesky_solve6(kp.chol, rhs))


def substep(params: "VehicleParams", state: State, control: Wrench, dt: float) -> State:
    """One integration sub-step of duration dt (seconds, > 0)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    kp = params.kernel()
    s = state.as_array().tolist()
    tau = control.as_array().tolist()
    out, fail, clamped = _substep_flat(kp, s, tau, dt)
    if fail >= 0:
        raise IntegrationDivergedError(STATE_COMPONENTS[fail])
    return State.from_array(out, pitch_clamped=clamped or state.pitch_clamped)


def sim_step(params: "VehicleParams", state: State, control: Wrench,
             control_dt: float, n_substeps: int) -> State:
    """Advance one control period: n_substeps sub-steps under a held wrench."""
    if n_substeps < 1:
        raise ValueError("n_substeps must be >= 1")
    dt = control_dt / n_substeps
    out = state
    for _ in range(n_substeps):
        out = substep(params, out, control, dt)
    return out
