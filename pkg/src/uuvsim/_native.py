"""ctypes bindings for the compiled batch engine (libuuvsim_core).

The shared library exposes a small versioned C ABI (see native/src/lib.rs);
the same binary backs this in-process fast path and out-of-process FFI
consumers. All buffers are caller-allocated, row-major, env-major float64
(dones are uint8 flags); every call returns an error code, never throws
across the boundary.

Search order for the library: the UUVSIM_CORE_LIB environment variable, the
packaged ``_lib`` directory, then the in-tree cargo build output.
"""

from __future__ import annotations

import ctypes
import os
from pathlib import Path

import numpy as np

ABI_VERSION = 1

_ERR_NAMES = {
    0: "ok",
    1: "invalid config",
    2: "invalid handle",
    3: "bad buffer size",
    4: "runtime error",
}


class NativeError(RuntimeError):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(f"{_ERR_NAMES.get(code, 'error')} ({code}): {message}")


def _candidate_paths():
    env = os.environ.get("UUVSIM_CORE_LIB")
    if env:
        yield Path(env)
    here = Path(__file__).resolve().parent
    yield here / "_lib" / "libuuvsim_core.so"
    # Development tree: src/uuvsim/ -> repo root -> native/target/release
    root = here.parent.parent
    yield root / "native" / "target" / "release" / "libuuvsim_core.so"


def _bind(lib: ctypes.CDLL) -> ctypes.CDLL:
    u64 = ctypes.c_uint64
    i64 = ctypes.c_int64
    i32 = ctypes.c_int32
    f64p = ctypes.POINTER(ctypes.c_double)
    u8p = ctypes.POINTER(ctypes.c_uint8)
    i64p = ctypes.POINTER(ctypes.c_int64)
    u64p = ctypes.POINTER(u64)

    lib.uuvsim_abi_version.restype = ctypes.c_uint32
    lib.uuvsim_abi_version.argtypes = []
    lib.uuvsim_create.restype = i32
    lib.uuvsim_create.argtypes = [ctypes.c_char_p, u64p]
    lib.uuvsim_spec.restype = i32
    lib.uuvsim_spec.argtypes = [u64, u64p]
    lib.uuvsim_reset.restype = i32
    lib.uuvsim_reset.argtypes = [u64, u64, f64p, u64]
    lib.uuvsim_step.restype = i32
    lib.uuvsim_step.argtypes = [u64, f64p, u64, f64p, u64, f64p, u64, u8p, u64]
    lib.uuvsim_states.restype = i32
    lib.uuvsim_states.argtypes = [u64, f64p, u64]
    lib.uuvsim_step_counts.restype = i32
    lib.uuvsim_step_counts.argtypes = [u64, i64p, u64]
    lib.uuvsim_set_threads.restype = i32
    lib.uuvsim_set_threads.argtypes = [u64, u64]
    lib.uuvsim_destroy.restype = i32
    lib.uuvsim_destroy.argtypes = [u64]
    lib.uuvsim_last_error.restype = i64
    lib.uuvsim_last_error.argtypes = [ctypes.c_char_p, u64]
    return lib


_lib_cache: list = []


def load_native_lib():
    """Load and bind the core library, or return None when unavailable."""
    if _lib_cache:
        return _lib_cache[0]
    for path in _candidate_paths():
        if not path.is_file():
            continue
        try:
            lib = _bind(ctypes.CDLL(str(path)))
        except OSError:
            continue
        if lib.uuvsim_abi_version() != ABI_VERSION:
            continue
        _lib_cache.append(lib)
        return lib
    _lib_cache.append(None)
    return None


def native_available() -> bool:
    return load_native_lib() is not None


def _last_error(lib) -> str:
    buf = ctypes.create_string_buffer(1024)
    n = lib.uuvsim_last_error(buf, 1024)
    return buf.raw[: max(0, min(n, 1024))].decode("utf-8", "replace")


def _check(lib, code: int):
    if code != 0:
        raise NativeError(code, _last_error(lib))


def _ptr_f64(a: np.ndarray):
    return a.ctypes.data_as(ctypes.POINTER(ctypes.c_double))


class NativeEnvBatch:
    """Batched environments executed by the compiled core."""

    backend = "native"

    def __init__(self, config_json: str, root_seed: int, threads: int = 0):
        lib = load_native_lib()
        if lib is None:
            raise RuntimeError("native core library not available")
        self._lib = lib
        handle = ctypes.c_uint64(0)
        _check(lib, lib.uuvsim_create(config_json.encode("utf-8"),
                                      ctypes.byref(handle)))
        self._handle = handle.value
        self._open = True
        spec = (ctypes.c_uint64 * 4)()
        _check(lib, lib.uuvsim_spec(self._handle, spec))
        self.num_envs = int(spec[0])
        self.obs_dim = int(spec[1])
        self.action_dim = int(spec[2])
        self.episode_len = int(spec[3])
        self.root_seed = int(root_seed)
        self.threads = int(threads)
        self._obs = np.zeros((self.num_envs, self.obs_dim))
        self._rew = np.zeros(self.num_envs)
        self._done = np.zeros(self.num_envs, dtype=np.uint8)
        # Engine state after create matches reset(root_seed); fetch the obs.
        self.reset_all(root_seed)

    def reset_all(self, seed: int) -> np.ndarray:
        self._require_open()
        self.root_seed = int(seed)
        _check(self._lib, self._lib.uuvsim_reset(
            self._handle, ctypes.c_uint64(seed), _ptr_f64(self._obs),
            self._obs.size))
        return self._obs.copy()

    def step(self, actions: np.ndarray):
        self._require_open()
        act = np.ascontiguousarray(actions, dtype=np.float64)
        if act.shape != (self.num_envs, self.action_dim):
            raise ValueError(
                f"actions must have shape {(self.num_envs, self.action_dim)}, "
                f"got {act.shape}")
        _check(self._lib, self._lib.uuvsim_step(
            self._handle, _ptr_f64(act), act.size,
            _ptr_f64(self._obs), self._obs.size,
            _ptr_f64(self._rew), self._rew.size,
            self._done.ctypes.data_as(ctypes.POINTER(ctypes.c_uint8)),
            self._done.size))
        return self._obs.copy(), self._rew.copy(), self._done.astype(bool)

    def states(self) -> np.ndarray:
        self._require_open()
        out = np.zeros((self.num_envs, 12))
        _check(self._lib, self._lib.uuvsim_states(self._handle, _ptr_f64(out),
                                                  out.size))
        return out

    def step_counts(self) -> np.ndarray:
        self._require_open()
        out = np.zeros(self.num_envs, dtype=np.int64)
        _check(self._lib, self._lib.uuvsim_step_counts(
            self._handle, out.ctypes.data_as(ctypes.POINTER(ctypes.c_int64)),
            out.size))
        return out

    def set_threads(self, n: int):
        self._require_open()
        _check(self._lib, self._lib.uuvsim_set_threads(self._handle, int(n)))
        self.threads = int(n)

    def close(self):
        if self._open:
            self._lib.uuvsim_destroy(self._handle)
            self._open = False

    def _require_open(self):
        if not self._open:
            raise RuntimeError("batch has been closed")

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
