"""Policy checkpoint: versioned binary blob with a magic header.

Layout (little-endian):

    8 bytes   magic  b"UUVSIMP1"
    4 x u32   version, obs_dim, act_dim, hidden
    f64 x obs_dim   normalizer mean
    f64 x obs_dim   normalizer variance
    f64             normalizer count
    f64 x n         flat parameters (nets.PARAM_ORDER, log_std included)
"""

from __future__ import annotations

import struct

import numpy as np

from .nets import Policy, RunningNorm

MAGIC = b"UUVSIMP1"
VERSION = 1
_HEADER = struct.Struct("<8sIIII")  # magic, version, obs_dim, act_dim, hidden


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, policy: Policy, normalizer: RunningNorm):
    flat = policy.get_flat()
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, policy.obs_dim, policy.act_dim,
                             policy.hidden))
        f.write(normalizer.mean.astype("<f8").tobytes())
        f.write(normalizer.var.astype("<f8").tobytes())
        f.write(struct.pack("<d", normalizer.count))
        f.write(flat.astype("<f8").tobytes())


def load_checkpoint(path):
    """Returns (policy, normalizer)."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size or blob[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a uuvsim policy checkpoint")
    magic, version, obs_dim, act_dim, hidden = _HEADER.unpack_from(blob, 0)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = _HEADER.size
    need = obs_dim * 8 * 2 + 8
    if len(blob) < off + need:
        raise CheckpointError("checkpoint truncated in normalizer block")
    normalizer = RunningNorm(obs_dim)
    normalizer.mean = np.frombuffer(blob, "<f8", obs_dim, off).copy()
    off += obs_dim * 8
    normalizer.var = np.frombuffer(blob, "<f8", obs_dim, off).copy()
    off += obs_dim * 8
    normalizer.count = struct.unpack_from("<d", blob, off)[0]
    off += 8
    policy = Policy(obs_dim, act_dim, hidden=hidden, seed=0)
    flat = np.frombuffer(blob, "<f8", -1, off)
    expect = policy.get_flat().size
    if flat.size != expect:
        raise CheckpointError(
            f"checkpoint has {flat.size} parameters, expected {expect}")
    policy.set_flat(flat)
    return policy, normalizer
