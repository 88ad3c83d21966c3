"""Vehicle physical parameters: validation, derived matrices, file I/O.

The parameter file is a JSON document with SI units throughout:

    mass                 scalar, kg
    inertia              3x3 (row-major nested lists), kg m^2 about the body origin
    r_g, r_b             3-vectors, m (centres of gravity / buoyancy)
    weight, buoyancy     scalars, N
    added_mass           6x6, hydrodynamic added-mass matrix
    damping_linear       6x6, linear damping matrix
    damping_quadratic    6-vector of per-axis quadratic drag coefficients
    thrusters            list of {position, direction, max_thrust, curve}

Derived quantities (rigid-body mass matrix, total mass matrix and its
Cholesky factor, thruster allocation) are computed once and cached on the
params object; the batched kernels consume the flattened ``KernelParams``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .dynamics import _cholesky6
from .thrusters import CURVE_CODES, Thruster, ThrusterLayout, allocation_matrix


class ParamsError(ValueError):
    """Vehicle parameters violate an invariant."""


@dataclass(frozen=True)
class KernelParams:
    """Flattened, precomputed parameter block used by the step kernels.

    Matrices are flat row-major float tuples; ``chol`` is the lower
    Cholesky factor of m_total = M_RB + M_A.
    """

    m_total: tuple
    chol: tuple
    damping_linear: tuple
    damping_quadratic: tuple
    weight: float
    buoyancy: float
    r_g: tuple
    r_b: tuple
    alloc: tuple          # flat row-major 6 x n
    max_thrust: tuple
    curve_codes: tuple
    n_thrusters: int


def _skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def rigid_body_mass(mass: float, inertia: np.ndarray, r_g: np.ndarray) -> np.ndarray:
    """M_RB about the body origin: [[m I, -m S(r_g)], [m S(r_g), I_o]]."""
    m_rb = np.zeros((6, 6))
    m_rb[0:3, 0:3] = mass * np.eye(3)
    s = _skew(r_g)
    m_rb[0:3, 3:6] = -mass * s
    m_rb[3:6, 0:3] = mass * s
    m_rb[3:6, 3:6] = inertia
    return m_rb


class VehicleParams:
    """All physical coefficients of the 6-DOF motion model."""

    def __init__(self, mass, inertia, r_g, r_b, weight, buoyancy,
                 added_mass, damping_linear, damping_quadratic,
                 thrusters: ThrusterLayout):
        self.mass = float(mass)
        self.inertia = np.asarray(inertia, dtype=np.float64)
        self.r_g = np.asarray(r_g, dtype=np.float64)
        self.r_b = np.asarray(r_b, dtype=np.float64)
        self.weight = float(weight)
        self.buoyancy = float(buoyancy)
        self.added_mass = np.asarray(added_mass, dtype=np.float64)
        self.damping_linear = np.asarray(damping_linear, dtype=np.float64)
        self.damping_quadratic = np.asarray(damping_quadratic, dtype=np.float64)
        self.thrusters = thrusters
        self._validate()
        self.m_rb = rigid_body_mass(self.mass, self.inertia, self.r_g)
        self.m_total = self.m_rb + self.added_mass
        total_flat = tuple(self.m_total.reshape(-1).tolist())
        try:
            chol = _cholesky6(total_flat)
        except ValueError as e:
            raise ParamsError(f"M_RB + M_A is not positive definite: {e}") from e
        self._kernel = KernelParams(
            m_total=total_flat,
            chol=tuple(chol),
            damping_linear=tuple(self.damping_linear.reshape(-1).tolist()),
            damping_quadratic=tuple(self.damping_quadratic.tolist()),
            weight=self.weight,
            buoyancy=self.buoyancy,
            r_g=tuple(self.r_g.tolist()),
            r_b=tuple(self.r_b.tolist()),
            alloc=tuple(allocation_matrix(self.thrusters).reshape(-1).tolist()),
            max_thrust=tuple(t.max_thrust for t in self.thrusters.thrusters),
            curve_codes=tuple(CURVE_CODES[t.curve] for t in self.thrusters.thrusters),
            n_thrusters=len(self.thrusters),
        )

    def _validate(self):
        if not self.mass > 0.0:
            raise ParamsError("mass must be positive")
        for name, mat, shape in (("inertia", self.inertia, (3, 3)),
                                 ("added_mass", self.added_mass, (6, 6)),
                                 ("damping_linear", self.damping_linear, (6, 6))):
            if mat.shape != shape:
                raise ParamsError(f"{name} must have shape {shape}")
        for name, mat in (("inertia", self.inertia), ("added_mass", self.added_mass)):
            if not np.allclose(mat, mat.T, atol=1e-9):
                raise ParamsError(f"{name} must be symmetric")
        if self.r_g.shape != (3,) or self.r_b.shape != (3,):
            raise ParamsError("r_g and r_b must be 3-vectors")
        if self.damping_quadratic.shape != (6,):
            raise ParamsError("damping_quadratic must be a 6-vector")
        if np.any(self.damping_quadratic < 0.0):
            raise ParamsError("damping_quadratic components must be >= 0")
        if self.weight < 0.0 or self.buoyancy < 0.0:
            raise ParamsError("weight and buoyancy must be >= 0")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0.0):
            raise ParamsError("inertia must be positive definite")
        sym = 0.5 * (self.damping_linear + self.damping_linear.T)
        if np.any(np.linalg.eigvalsh(sym) < -1e-9):
            raise ParamsError("damping_linear must be positive semidefinite")

    def kernel(self) -> KernelParams:
        return self._kernel

    def n_thrusters(self) -> int:
        return len(self.thrusters)

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "inertia": self.inertia.tolist(),
            "r_g": self.r_g.tolist(),
            "r_b": self.r_b.tolist(),
            "weight": self.weight,
            "buoyancy": self.buoyancy,
            "added_mass": self.added_mass.tolist(),
            "damping_linear": self.damping_linear.tolist(),
            "damping_quadratic": self.damping_quadratic.tolist(),
            "thrusters": [
                {"position": list(t.position), "direction": list(t.direction),
                 "max_thrust": t.max_thrust, "curve": t.curve}
                for t in self.thrusters.thrusters
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "VehicleParams":
        try:
            layout = ThrusterLayout(tuple(
                Thruster(tuple(t["position"]), tuple(t["direction"]),
                         float(t["max_thrust"]), t.get("curve", "quadratic_signed"))
                for t in d["thrusters"]))
            return VehicleParams(
                mass=d["mass"], inertia=d["inertia"], r_g=d["r_g"], r_b=d["r_b"],
                weight=d["weight"], buoyancy=d["buoyancy"], added_mass=d["added_mass"],
                damping_linear=d["damping_linear"],
                damping_quadratic=d["damping_quadratic"], thrusters=layout)
        except KeyError as e:
            raise ParamsError(f"vehicle parameter file is missing field {e}") from e


def load_params(path) -> VehicleParams:
    with open(path, "r", encoding="utf-8") as f:
        return VehicleParams.from_dict(json.load(f))


def save_params(params: VehicleParams, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(params.to_dict(), f, indent=2)
        f.write("\n")


def default_params() -> VehicleParams:
    """BlueROV2-Heavy-class defaults (documented engineering values)."""
    with resources.files("uuvsim.data").joinpath("bluerov2_heavy.json").open(
            "r", encoding="utf-8") as f:
        return VehicleParams.from_dict(json.load(f))


def neutral_params(params: VehicleParams | None = None) -> VehicleParams:
    """Copy of params with W = B and r_g = r_b: an exact rest equilibrium."""
    p = params if params is not None else default_params()
    d = p.to_dict()
    d["buoyancy"] = d["weight"]
    d["r_b"] = d["r_g"]
    return VehicleParams.from_dict(d)
