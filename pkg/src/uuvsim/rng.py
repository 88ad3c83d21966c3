"""Counter-based random streams shared by every simulation component.

Each draw is a pure function of (root_seed, stream_id, purpose, counter), so
parallel environments get independent, order-free streams: no generator state
is shared, and replaying any draw only needs its coordinates. The native
engine implements the identical construction, which is what makes batched
runs bit-reproducible across backends and thread counts.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_PURPOSE_SALT = 0x632BE59BD9B4E019

# Draw purposes. Values are part of the stream identity and must not change.
PURPOSE_PARAMS = 0
PURPOSE_RESET = 1
PURPOSE_BENCH = 2

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit word."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def draw_u64(root_seed: int, stream: int, purpose: int, counter: int) -> int:
    """The counted draw: hash (seed, stream, purpose, counter) to 64 bits."""
    h = mix64(root_seed & _MASK)
    h = mix64(h ^ ((stream + _GOLDEN) & _MASK))
    h = mix64(h ^ ((purpose + _PURPOSE_SALT) & _MASK))
    h = mix64(h ^ (counter & _MASK))
    return h


def u01(bits: int) -> float:
    """Map 64 random bits to a double in [0, 1) using the top 53 bits."""
    return (bits >> 11) * _INV_2_53


def uniform(lo: float, hi: float, u: float) -> float:
    return lo + (hi - lo) * u


def log_uniform(lo: float, hi: float, u: float) -> float:
    return math.exp(uniform(math.log(lo), math.log(hi), u))


class Stream:
    """Stateful view over one (seed, stream, purpose) lane.

    Tracks the draw counter so successive calls advance through the lane;
    the counter can be saved/restored to replay.
    """

    __slots__ = ("root_seed", "stream", "purpose", "counter")

    def __init__(self, root_seed: int, stream: int, purpose: int, counter: int = 0):
        self.root_seed = root_seed & _MASK
        self.stream = stream
        self.purpose = purpose
        self.counter = counter

    def next_u64(self) -> int:
        bits = draw_u64(self.root_seed, self.stream, self.purpose, self.counter)
        self.counter += 1
        return bits

    def next_uniform(self, lo: float, hi: float) -> float:
        return uniform(lo, hi, u01(self.next_u64()))

    def next_log_uniform(self, lo: float, hi: float) -> float:
        return log_uniform(lo, hi, u01(self.next_u64()))
