"""Per-environment physical parameter randomization.

Multiplicative factors are drawn log-uniform, the buoyancy-centre offset
uniform. The mass factor scales the full rigid-body inertia (mass, inertia
tensor) and the weight with it, so the randomized vehicle stays physically
coherent; buoyancy is then set as a ratio of the scaled weight.

The draw order is part of the determinism contract (nine draws per sample,
consumed even for identity ranges): mass, added_mass, damping_linear,
damping_quadratic, max_thrust, r_b offset x/y/z, buoyancy ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import rng
from .thrusters import Thruster, ThrusterLayout
from .vehicle import ParamsError, VehicleParams


@dataclass(frozen=True)
class RandomizationRanges:
    """Sampling ranges; identity defaults leave the base parameters unchanged."""

    mass: tuple = (1.0, 1.0)
    added_mass: tuple = (1.0, 1.0)
    damping_linear: tuple = (1.0, 1.0)
    damping_quadratic: tuple = (1.0, 1.0)
    max_thrust: tuple = (1.0, 1.0)
    rb_offset: float = 0.0           # +- additive bound per axis, m
    buoyancy_ratio: tuple = (1.0, 1.0)
    per_episode: bool = False

    def __post_init__(self):
        for name in ("mass", "added_mass", "damping_linear",
                     "damping_quadratic", "max_thrust", "buoyancy_ratio"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi):
                raise ValueError(f"range {name} must satisfy 0 < lo <= hi")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.rb_offset < 0.0:
            raise ValueError("rb_offset must be >= 0")

    def to_dict(self) -> dict:
        return {
            "mass": list(self.mass),
            "added_mass": list(self.added_mass),
            "damping_linear": list(self.damping_linear),
            "damping_quadratic": list(self.damping_quadratic),
            "max_thrust": list(self.max_thrust),
            "rb_offset": self.rb_offset,
            "buoyancy_ratio": list(self.buoyancy_ratio),
            "per_episode": self.per_episode,
        }

    @staticmethod
    def from_dict(d: dict) -> "RandomizationRanges":
        kw = {}
        for name in ("mass", "added_mass", "damping_linear",
                     "damping_quadratic", "max_thrust", "buoyancy_ratio"):
            if name in d:
                kw[name] = tuple(d[name])
        if "rb_offset" in d:
            kw["rb_offset"] = float(d["rb_offset"])
        if "per_episode" in d:
            kw["per_episode"] = bool(d["per_episode"])
        return RandomizationRanges(**kw)


def default_ranges() -> RandomizationRanges:
    """Moderate ranges suitable for robustness training."""
    return RandomizationRanges(
        mass=(0.9, 1.1), added_mass=(0.8, 1.2),
        damping_linear=(0.7, 1.3), damping_quadratic=(0.7, 1.3),
        max_thrust=(0.9, 1.1), rb_offset=0.01, buoyancy_ratio=(0.99, 1.01))


def sample_params(base: VehicleParams, ranges: RandomizationRanges,
                  stream: rng.Stream) -> VehicleParams:
    """Draw one randomized parameter set; consumes exactly nine draws."""
    f_mass = stream.next_log_uniform(*ranges.mass)
    f_added = stream.next_log_uniform(*ranges.added_mass)
    f_dlin = stream.next_log_uniform(*ranges.damping_linear)
    f_dquad = stream.next_log_uniform(*ranges.damping_quadratic)
    f_thrust = stream.next_log_uniform(*ranges.max_thrust)
    dbx = stream.next_uniform(-ranges.rb_offset, ranges.rb_offset)
    dby = stream.next_uniform(-ranges.rb_offset, ranges.rb_offset)
    dbz = stream.next_uniform(-ranges.rb_offset, ranges.rb_offset)
    ratio = stream.next_uniform(*ranges.buoyancy_ratio)

    weight = base.weight * f_mass
    layout = ThrusterLayout(tuple(
        Thruster(t.position, t.direction, t.max_thrust * f_thrust, t.curve)
        for t in base.thrusters.thrusters))
    try:
        return VehicleParams(
            mass=base.mass * f_mass,
            inertia=base.inertia * f_mass,
            r_g=base.r_g,
            r_b=(base.r_b[0] + dbx, base.r_b[1] + dby, base.r_b[2] + dbz),
            weight=weight,
            buoyancy=ratio * weight,
            added_mass=base.added_mass * f_added,
            damping_linear=base.damping_linear * f_dlin,
            damping_quadratic=base.damping_quadratic * f_dquad,
            thrusters=layout)
    except ParamsError as e:
        raise ParamsError(f"randomized parameters invalid: {e}") from e
