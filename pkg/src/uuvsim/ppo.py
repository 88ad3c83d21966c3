"""Desk-scale PPO over the batch engine.

Collect -> GAE -> clipped-surrogate updates, fully seeded: policy init,
action noise, and minibatch shuffling all derive from the config seed, and
rollouts run on the deterministic batch engine, so a run is reproducible
end to end. Observations are normalized by running statistics that freeze
at evaluation time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .batch import batch_create
from .nets import Adam, Policy, RunningNorm
from .randomize import RandomizationRanges
from .tasks import TaskSpec
from .vehicle import VehicleParams


class TrainingDivergedError(RuntimeError):
    """NaN appeared in the loss; carries the stats seen so far."""

    def __init__(self, message: str, stats: dict | None = None):
        super().__init__(message)
        self.stats = stats or {}


@dataclass
class TrainConfig:
    seed: int = 0
    total_env_steps: int = 5_000_000
    num_envs: int = 1024
    horizon: int = 64
    minibatch: int = 4096
    epochs: int = 4
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    lr: float = 3e-4
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    hidden: int = 64
    init_log_std: float = -0.5
    eval_every: int = 5          # iterations between deterministic evals
    eval_episodes: int = 16
    stop_error: float | None = None  # early stop once eval error beats this

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must be in [0, 1]")
        if not self.clip > 0.0:
            raise ValueError("clip must be positive")

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        known = {f for f in TrainConfig.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config fields: {sorted(unknown)}")
        return TrainConfig(**d)


@dataclass
class RolloutBuffer:
    """Arrays over (env, time); advantages filled by gae()."""

    num_envs: int
    horizon: int
    obs_dim: int
    act_dim: int
    obs: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    log_probs: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    values: np.ndarray = field(init=False)
    dones: np.ndarray = field(init=False)
    advantages: np.ndarray = field(init=False)
    returns: np.ndarray = field(init=False)

    def __post_init__(self):
        m, t = self.num_envs, self.horizon
        self.obs = np.zeros((m, t, self.obs_dim))
        self.actions = np.zeros((m, t, self.act_dim))
        self.log_probs = np.zeros((m, t))
        self.rewards = np.zeros((m, t))
        self.values = np.zeros((m, t))
        self.dones = np.zeros((m, t))
        self.advantages = np.zeros((m, t))
        self.returns = np.zeros((m, t))

    def set_step(self, t, obs, actions, log_probs, rewards, values, dones):
        self.obs[:, t] = obs
        self.actions[:, t] = actions
        self.log_probs[:, t] = log_probs
        self.rewards[:, t] = rewards
        self.values[:, t] = values
        self.dones[:, t] = dones

    def flat(self):
        m, t = self.num_envs, self.horizon
        return (self.obs.reshape(m * t, -1), self.actions.reshape(m * t, -1),
                self.log_probs.reshape(-1), self.advantages.reshape(-1),
                self.returns.reshape(-1))


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        bootstrap_value: np.ndarray, gamma: float, lam: float):
    """Generalized advantage estimation over (env, time) arrays.

    delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t
    A_t     = delta_t + gamma lam (1 - done_t) A_{t+1}
    """
    m, t_len = rewards.shape
    if values.shape != (m, t_len) or dones.shape != (m, t_len):
        raise ValueError("rewards/values/dones shapes disagree")
    advantages = np.zeros((m, t_len))
    last = np.zeros(m)
    for t in range(t_len - 1, -1, -1):
        nonterminal = 1.0 - dones[:, t]
        next_value = bootstrap_value if t == t_len - 1 else values[:, t + 1]
        delta = rewards[:, t] + gamma * next_value * nonterminal - values[:, t]
        last = delta + gamma * lam * nonterminal * last
        advantages[:, t] = last
    return advantages, advantages + values


def ppo_loss_and_grads(policy: Policy, obs, actions, logp_old, adv, returns,
                       cfg: TrainConfig):
    """Clipped-surrogate loss, its gradients, and diagnostics for one minibatch."""
    mean, value, cache = policy.forward(obs)
    log_std = policy.params["log_std"]
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    logp = policy.log_prob(actions, mean)
    ratio = np.exp(logp - logp_old)
    b = obs.shape[0]

    s1 = ratio * adv
    s2 = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv
    surrogate = -np.minimum(s1, s2).mean()
    use_unclipped = (s1 <= s2)

    verr = value - returns
    value_loss = (verr * verr).mean()
    entropy = policy.entropy()
    loss = surrogate + cfg.value_coef * value_loss - cfg.entropy_coef * entropy

    # d surrogate / d logp, then chain into mean and log_std.
    dlogp = -(use_unclipped * ratio * adv) / b
    dmean = dlogp[:, None] * (diff * inv_var)
    dlog_std_pi = (dlogp[:, None] * (diff * diff * inv_var - 1.0)).sum(axis=0)
    dvalue = cfg.value_coef * 2.0 * verr / b
    grads = policy.backward(cache, dmean, dvalue)
    grads["log_std"] = dlog_std_pi - cfg.entropy_coef * np.ones_like(log_std)

    stats = {
        "loss": float(loss),
        "policy_loss": float(surrogate),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "clip_fraction": float((np.abs(ratio - 1.0) > cfg.clip).mean()),
        "approx_kl": float((logp_old - logp).mean()),
    }
    return loss, grads, stats


def ppo_update(policy: Policy, buffer: RolloutBuffer, cfg: TrainConfig,
               optimizer: Adam, shuffle_rng: np.random.Generator) -> dict:
    """Shuffled minibatch epochs over the buffer; advantages normalized once."""
    obs, actions, logp_old, adv, returns = buffer.flat()
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    n = obs.shape[0]
    mb = min(cfg.minibatch, n)
    agg: dict = {}
    count = 0
    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, mb):
            idx = order[lo:lo + mb]
            loss, grads, stats = ppo_loss_and_grads(
                policy, obs[idx], actions[idx], logp_old[idx], adv[idx],
                returns[idx], cfg)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at update step {count}", stats)
            optimizer.step(policy, grads)
            for k, v in stats.items():
                agg[k] = agg.get(k, 0.0) + v
            count += 1
    return {k: v / count for k, v in agg.items()}


class PolicyActor:
    """Deterministic (mean-action) adapter for evaluate()."""

    def __init__(self, policy: Policy, normalizer: RunningNorm):
        self.policy = policy
        self.normalizer = normalizer

    def __call__(self, obs, states, step):
        mean, _, _ = self.policy.forward(self.normalizer.normalize(obs))
        return np.clip(mean, -1.0, 1.0)


def evaluate(actor, spec: TaskSpec, params: VehicleParams, episodes: int,
             seed: int, backend: str | None = None, threads: int = 0) -> dict:
    """Deterministic rollouts; per-step position error aggregated over episodes.

    ``actor`` is a Policy, a PolicyActor, or any callable
    (obs (M,obs_dim), states (M,12), step) -> actions (M,N).
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if isinstance(actor, Policy):
        actor = PolicyActor(actor, RunningNorm(spec.obs_dim))
    batch = batch_create(spec, params, None, episodes, seed, threads=threads,
                         backend=backend)
    try:
        obs = batch.reset_all(seed)
        errs = np.zeros((episodes, spec.episode_len))
        returns = np.zeros(episodes)
        for t in range(spec.episode_len):
            actions = actor(obs, batch.states(), t)
            obs, rew, _done = batch.step(actions)
            errs[:, t] = -rew
            returns += rew
        return {
            "mean_pos_err_m": float(errs.mean()),
            "max_pos_err_m": float(errs.max()),
            "mean_return": float(returns.mean()),
            "episodes": episodes,
            "seed": seed,
            "per_step_error": errs.mean(axis=0),
        }
    finally:
        batch.close()


def train(spec: TaskSpec, params: VehicleParams, cfg: TrainConfig,
          ranges: RandomizationRanges | None = None, threads: int = 0,
          backend: str | None = None, log_cb=None) -> dict:
    """Run the collect -> GAE -> update loop to cfg.total_env_steps.

    Returns {policy, normalizer, metrics, timings, env_steps, stopped_early}.
    ``metrics`` records (env_steps, eval stats, loss stats) at every periodic
    deterministic evaluation; ``timings`` carries the wall-clock sidecar.
    Raises TrainingDivergedError on NaN loss (partial metrics attached).
    """
    batch = batch_create(spec, params, ranges, cfg.num_envs, cfg.seed,
                         threads=threads, backend=backend)
    try:
        return _train_loop(batch, spec, params, cfg, backend, threads, log_cb)
    finally:
        batch.close()


def _train_loop(batch, spec, params, cfg, backend, threads, log_cb):
    policy = Policy(spec.obs_dim, batch.action_dim, hidden=cfg.hidden,
                    seed=cfg.seed, init_log_std=cfg.init_log_std)
    optimizer = Adam(policy, lr=cfg.lr)
    normalizer = RunningNorm(spec.obs_dim)
    action_rng = np.random.default_rng(np.random.PCG64(cfg.seed + 1))
    shuffle_rng = np.random.default_rng(np.random.PCG64(cfg.seed + 2))
    buffer = RolloutBuffer(cfg.num_envs, cfg.horizon, spec.obs_dim,
                           batch.action_dim)

    metrics: list[dict] = []
    timings: list[dict] = []
    t_start = time.perf_counter()
    env_steps = 0
    iteration = 0
    stopped_early = False
    obs = batch.reset_all(cfg.seed)
    last_losses: dict = {}

    def run_eval():
        actor = PolicyActor(policy, normalizer)
        ev = evaluate(actor, spec, params, cfg.eval_episodes, cfg.seed + 1000,
                      backend=backend, threads=threads)
        rec = {
            "env_steps": env_steps,
            "mean_return": ev["mean_return"],
            "mean_pos_err_m": ev["mean_pos_err_m"],
            **{k: last_losses.get(k) for k in
               ("policy_loss", "value_loss", "entropy", "clip_fraction",
                "approx_kl")},
        }
        metrics.append(rec)
        timings.append({"env_steps": env_steps,
                        "wall_s": time.perf_counter() - t_start})
        if log_cb is not None:
            log_cb(rec, timings[-1])
        return ev

    try:
        while env_steps < cfg.total_env_steps:
            std = np.exp(policy.params["log_std"])
            for t in range(cfg.horizon):
                norm_obs = normalizer.normalize(obs)
                normalizer.update(obs)
                mean, value, _ = policy.forward(norm_obs)
                raw = mean + std * action_rng.standard_normal(mean.shape)
                logp = policy.log_prob(raw, mean)
                next_obs, rew, done = batch.step(np.clip(raw, -1.0, 1.0))
                buffer.set_step(t, norm_obs, raw, logp, rew, value, done)
                obs = next_obs
            env_steps += cfg.num_envs * cfg.horizon
            _, boot_value, _ = policy.forward(normalizer.normalize(obs))
            buffer.advantages, buffer.returns = gae(
                buffer.rewards, buffer.values, buffer.dones, boot_value,
                cfg.gamma, cfg.lam)
            last_losses = ppo_update(policy, buffer, cfg, optimizer, shuffle_rng)
            iteration += 1
            if iteration % cfg.eval_every == 0:
                ev = run_eval()
                if (cfg.stop_error is not None
                        and ev["mean_pos_err_m"] < cfg.stop_error):
                    stopped_early = True
                    break
    except TrainingDivergedError as e:
        e.stats = {"metrics": metrics, "timings": timings, "env_steps": env_steps}
        raise
    if not stopped_early:
        run_eval()
    return {
        "policy": policy,
        "normalizer": normalizer,
        "metrics": metrics,
        "timings": timings,
        "env_steps": env_steps,
        "stopped_early": stopped_early,
    }
