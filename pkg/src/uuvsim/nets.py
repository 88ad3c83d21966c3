"""Actor-critic MLPs with hand-written reverse-mode gradients.

The architecture is fixed: separate actor and critic trunks (two tanh
hidden layers each), a tanh-squashed action mean head, a scalar value head,
and a state-independent log-std vector. Separate trunks keep the large
value-regression gradients from swamping the policy features. With the
shapes fixed, the backward pass is spelled out directly rather than pulling
in an autodiff framework; every gradient is checked against central finite
differences in the test suite.
"""

from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))

# Parameter names in checkpoint order.
PARAM_ORDER = ("a_w1", "a_b1", "a_w2", "a_b2", "wm", "bm",
               "c_w1", "c_b1", "c_w2", "c_b2", "wv", "bv", "log_std")


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    q = q.T if rows < cols else q
    return gain * q[:rows, :cols]


class Policy:
    """Gaussian policy (tanh-squashed mean) plus an independent value critic."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: int = 64,
                 seed: int = 0, init_log_std: float = -0.5):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        g = np.sqrt(2.0)
        self.params = {
            "a_w1": _orthogonal(rng, hidden, obs_dim, g),
            "a_b1": np.zeros(hidden),
            "a_w2": _orthogonal(rng, hidden, hidden, g),
            "a_b2": np.zeros(hidden),
            "wm": _orthogonal(rng, act_dim, hidden, 0.01),
            "bm": np.zeros(act_dim),
            "c_w1": _orthogonal(rng, hidden, obs_dim, g),
            "c_b1": np.zeros(hidden),
            "c_w2": _orthogonal(rng, hidden, hidden, g),
            "c_b2": np.zeros(hidden),
            "wv": _orthogonal(rng, 1, hidden, 1.0),
            "bv": np.zeros(1),
            "log_std": np.full(act_dim, init_log_std),
        }

    # -- forward ----------------------------------------------------------

    def forward(self, obs: np.ndarray):
        """Batched forward pass: (mean, value, cache) for obs of shape (B, obs_dim)."""
        p = self.params
        if obs.ndim != 2 or obs.shape[1] != self.obs_dim:
            raise ValueError(f"obs must have shape (B, {self.obs_dim})")
        a1 = np.tanh(obs @ p["a_w1"].T + p["a_b1"])
        a2 = np.tanh(a1 @ p["a_w2"].T + p["a_b2"])
        mean = np.tanh(a2 @ p["wm"].T + p["bm"])
        c1 = np.tanh(obs @ p["c_w1"].T + p["c_b1"])
        c2 = np.tanh(c1 @ p["c_w2"].T + p["c_b2"])
        value = c2 @ p["wv"].T + p["bv"]
        cache = (obs, a1, a2, mean, c1, c2)
        return mean, value[:, 0], cache

    def forward_single(self, obs: np.ndarray):
        """Spec convenience: one observation -> dict of mean, log_std, value."""
        mean, value, _ = self.forward(np.asarray(obs, dtype=np.float64)[None, :])
        return {"mean": mean[0], "log_std": self.params["log_std"].copy(),
                "value": float(value[0])}

    # -- backward ---------------------------------------------------------

    def backward(self, cache, dmean: np.ndarray, dvalue: np.ndarray) -> dict:
        """Gradients for upstream dL/dmean (B, act) and dL/dvalue (B,)."""
        p = self.params
        obs, a1, a2, mean, c1, c2 = cache
        grads = {}

        dpre_m = dmean * (1.0 - mean * mean)
        grads["wm"] = dpre_m.T @ a2
        grads["bm"] = dpre_m.sum(axis=0)
        da2 = dpre_m @ p["wm"]
        dz2 = da2 * (1.0 - a2 * a2)
        grads["a_w2"] = dz2.T @ a1
        grads["a_b2"] = dz2.sum(axis=0)
        da1 = dz2 @ p["a_w2"]
        dz1 = da1 * (1.0 - a1 * a1)
        grads["a_w1"] = dz1.T @ obs
        grads["a_b1"] = dz1.sum(axis=0)

        grads["wv"] = (dvalue[:, None] * c2).sum(axis=0)[None, :]
        grads["bv"] = np.array([dvalue.sum()])
        dc2 = np.outer(dvalue, p["wv"][0])
        dy2 = dc2 * (1.0 - c2 * c2)
        grads["c_w2"] = dy2.T @ c1
        grads["c_b2"] = dy2.sum(axis=0)
        dc1 = dy2 @ p["c_w2"]
        dy1 = dc1 * (1.0 - c1 * c1)
        grads["c_w1"] = dy1.T @ obs
        grads["c_b1"] = dy1.sum(axis=0)

        grads["log_std"] = np.zeros(self.act_dim)  # filled by the loss
        return grads

    # -- log-prob ---------------------------------------------------------

    def log_prob(self, actions: np.ndarray, mean: np.ndarray) -> np.ndarray:
        """Diagonal-Gaussian log density of raw (pre-clamp) actions."""
        log_std = self.params["log_std"]
        inv_var = np.exp(-2.0 * log_std)
        diff = actions - mean
        return -0.5 * ((diff * diff * inv_var).sum(axis=1)
                       + self.act_dim * LOG_2PI) - log_std.sum()

    def entropy(self) -> float:
        """Differential entropy of the Gaussian head (per sample)."""
        return float(self.params["log_std"].sum()
                     + 0.5 * self.act_dim * (1.0 + LOG_2PI))

    # -- flat parameter vector ---------------------------------------------

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].reshape(-1) for k in PARAM_ORDER])

    def set_flat(self, flat: np.ndarray):
        i = 0
        for k in PARAM_ORDER:
            n = self.params[k].size
            self.params[k] = flat[i:i + n].reshape(self.params[k].shape).copy()
            i += n
        if i != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {i}")


class Adam:
    """Adam over the policy's parameter dict."""

    def __init__(self, policy: Policy, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in policy.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in policy.params.items()}

    def step(self, policy: Policy, grads: dict):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            mhat = self.m[k] / b1c
            vhat = self.v[k] / b2c
            policy.params[k] = policy.params[k] - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class RunningNorm:
    """Running mean/variance observation normalizer (frozen at evaluation)."""

    def __init__(self, dim: int, clip: float = 10.0):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 1e-4
        self.clip = clip

    def update(self, batch: np.ndarray):
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        b_count = batch.shape[0]
        delta = b_mean - self.mean
        tot = self.count + b_count
        self.mean = self.mean + delta * (b_count / tot)
        m_a = self.var * self.count
        m_b = b_var * b_count
        m2 = m_a + m_b + delta * delta * (self.count * b_count / tot)
        self.var = m2 / tot
        self.count = tot

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        return np.clip((obs - self.mean) / np.sqrt(self.var + 1e-8),
                       -self.clip, self.clip)
