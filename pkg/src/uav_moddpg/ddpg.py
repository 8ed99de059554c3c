"""Multi-objective DDPG: vector-reward replay, linear scalarization and the training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .env import ACTION_DIM, OBS_DIM, EnvConfig, UavEnv
from .nn import Mlp, OptimState, _sigmoid, init_mlp, optimizer_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightVector:
    w_dc: float = 1.0
    w_eh: float = 1.0
    w_ec: float = 1.0
    w_aux: float = 1.0

    def __post_init__(self):
        if min(self.w_dc, self.w_eh, self.w_ec, self.w_aux) < 0:
            raise ValueError("preference weights must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_dc, self.w_eh, self.w_ec, self.w_aux])


PRESETS = {
    "sodr": WeightVector(w_dc=100.0, w_ec=1.0),   # rate first
    "soec": WeightVector(w_dc=1.0, w_ec=100.0),   # consumption first
}


def scalarize(reward, w: WeightVector):
    """``r . w`` for one reward vector or a ``(n, 4)`` batch of them."""
    return np.asarray(reward, dtype=float) @ w.as_array()


class Transition(NamedTuple):
    obs: np.ndarray
    action: np.ndarray      # network space: (u in [0,1], phi in [-1,1])
    reward: np.ndarray      # RewardVector as array
    next_obs: np.ndarray
    done: bool


class Batch(NamedTuple):
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with vector rewards."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM, action_dim: int = ACTION_DIM,
                 reward_dim: int = 4):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros((capacity, reward_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def store(self, t: Transition) -> None:
        i = self.cursor
        self.obs[i] = t.obs
        self.action[i] = t.action
        self.reward[i] = t.reward
        self.next_obs[i] = t.next_obs
        self.done[i] = float(t.done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, idx) -> Batch:
        return Batch(self.obs[idx], self.action[idx], self.reward[idx],
                     self.next_obs[idx], self.done[idx])

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draw with replacement. Only allowed once the memory is full."""
        if not self.full:
            raise RuntimeError(f"replay memory holds {self.size}/{self.capacity} transitions; "
                               "sampling starts once it is full")
        return self.get(rng.integers(0, self.capacity, size=batch_size))


@dataclass
class NoiseSchedule:
    sigma2: float = 2.0
    epsilon: float = 1.0
    decay: float = 0.9999
    floor: float = 0.01

    @property
    def std(self) -> float:
        return math.sqrt(self.epsilon * self.sigma2)

    def step(self) -> None:
        self.epsilon = max(self.epsilon * self.decay, self.floor)


@dataclass(frozen=True)
class TrainHyper:
    actor_hidden: tuple[int, ...] = (400, 300, 300, 300)
    critic_hidden: tuple[int, ...] = (400, 300)
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    replay_capacity: int = 10_000
    batch_size: int = 64
    noise_sigma2: float = 2.0
    noise_decay: float = 0.9999
    noise_floor: float = 0.01
    reward_scale: float = 1e-3     # scalarized reward -> critic units
    episodes: int = 1600
    checkpoint_every: int = 100
    terminal_at_timeout: bool = False   # timeouts bootstrap; the clock is not observed

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0 <= self.tau <= 1:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        for name in ("lr_actor", "lr_critic", "noise_sigma2", "reward_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.noise_decay <= 1 or not 0 < self.noise_floor <= 1:
            raise ValueError("noise_decay and noise_floor must lie in (0, 1]")
        for name in ("replay_capacity", "batch_size", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.episodes < 0:
            raise ValueError(f"episodes must be >= 0, got {self.episodes}")
        if any(h < 1 for h in self.actor_hidden + self.critic_hidden):
            raise ValueError("hidden layer sizes must be positive")


@dataclass
class AgentBundle:
    actor: Mlp
    critic: Mlp
    target_actor: Mlp
    target_critic: Mlp
    actor_opt: OptimState
    critic_opt: OptimState
    gamma: float = 0.99
    tau: float = 0.005
    reward_scale: float = 1e-3


def make_actor(hidden: Sequence[int], rng: np.random.Generator) -> Mlp:
    # the last layer stays linear; sigmoid/tanh heads are applied by actor_heads()
    sizes = [OBS_DIM, *hidden, ACTION_DIM]
    return init_mlp(sizes, ["relu"] * len(hidden) + ["linear"], rng)


def make_critic(hidden: Sequence[int], rng: np.random.Generator) -> Mlp:
    sizes = [OBS_DIM + ACTION_DIM, *hidden, 1]
    return init_mlp(sizes, ["relu"] * len(hidden) + ["linear"], rng)


def make_agent(hyper: TrainHyper, rng: np.random.Generator) -> AgentBundle:
    actor = make_actor(hyper.actor_hidden, rng)
    critic = make_critic(hyper.critic_hidden, rng)
    return AgentBundle(actor, critic, actor.copy(), critic.copy(),
                       OptimState.for_mlp(actor, hyper.lr_actor),
                       OptimState.for_mlp(critic, hyper.lr_critic),
                       hyper.gamma, hyper.tau, hyper.reward_scale)


def actor_heads(pre: np.ndarray) -> np.ndarray:
    """Squash the actor's linear output: sigmoid for speed, tanh for heading."""
    out = np.empty_like(pre)
    out[..., 0] = _sigmoid(pre[..., 0])
    out[..., 1] = np.tanh(pre[..., 1])
    return out


def actor_heads_grad(heads: np.ndarray) -> np.ndarray:
    g = np.empty_like(heads)
    g[..., 0] = heads[..., 0] * (1.0 - heads[..., 0])
    g[..., 1] = 1.0 - heads[..., 1] ** 2
    return g


def policy(actor: Mlp, obs) -> np.ndarray:
    return actor_heads(actor.forward(obs))


def to_env_action(raw, v_max: float) -> np.ndarray:
    """(u, phi) -> velocity vector (v cos(theta), v sin(theta)) with v = u v_max, theta = phi pi."""
    v = raw[0] * v_max
    theta = raw[1] * math.pi
    return np.array([v * math.cos(theta), v * math.sin(theta)])


def select_action(actor: Mlp, obs, noise: NoiseSchedule, rng: np.random.Generator,
                  explore: bool, v_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(env action, network-space action)``.

    Exploration adds N(0, eps * sigma2) per head before clipping to the head
    ranges and decays eps once per call.
    """
    obs = np.asarray(obs, dtype=float)
    if not np.all(np.isfinite(obs)):
        raise FloatingPointError(f"non-finite observation {obs}")
    raw = policy(actor, obs)
    if explore:
        raw = raw + rng.normal(0.0, noise.std, size=ACTION_DIM)
        raw[0] = min(max(raw[0], 0.0), 1.0)
        raw[1] = min(max(raw[1], -1.0), 1.0)
        noise.step()
    return to_env_action(raw, v_max), raw


def critic_input(obs, action) -> np.ndarray:
    return np.concatenate([obs, action], axis=-1)


def critic_target_values(batch: Batch, bundle: AgentBundle, w: WeightVector) -> np.ndarray:
    next_q = bundle.target_critic.forward(
        critic_input(batch.next_obs, policy(bundle.target_actor, batch.next_obs)))[:, 0]
    r = bundle.reward_scale * scalarize(batch.reward, w)
    return r + bundle.gamma * (1.0 - batch.done) * next_q


def update_critic(bundle: AgentBundle, batch: Batch, w: WeightVector) -> float:
    """One Adam step on the mean squared TD error. Returns the pre-step loss."""
    y = critic_target_values(batch, bundle, w)
    q = bundle.critic.forward(critic_input(batch.obs, batch.action))[:, 0]
    resid = q - y
    loss = float(np.mean(resid ** 2))
    if not math.isfinite(loss):
        raise FloatingPointError(f"critic loss is not finite ({loss})")
    grads, _ = bundle.critic.backward((2.0 / len(resid)) * resid[:, None])
    optimizer_step(bundle.critic, grads, bundle.critic_opt)
    return loss


def actor_objective_grads(bundle: AgentBundle, obs) -> tuple[float, list[np.ndarray]]:
    """Mean Q(s, mu(s)) and the gradients of its negative w.r.t. the actor parameters."""
    n = len(obs)
    heads = policy(bundle.actor, obs)
    q = bundle.critic.forward(critic_input(obs, heads))[:, 0]
    _, g_in = bundle.critic.backward(np.full((n, 1), 1.0 / n))
    g_pre = g_in[:, OBS_DIM:] * actor_heads_grad(heads)
    # actor cache is intact: the critic pass does not touch it
    grads, _ = bundle.actor.backward(-g_pre)
    return float(np.mean(q)), grads


def update_actor(bundle: AgentBundle, batch: Batch) -> float:
    """One ascent step on mean Q(s, mu(s)) through the frozen critic."""
    objective, grads = actor_objective_grads(bundle, batch.obs)
    if not math.isfinite(objective):
        raise FloatingPointError(f"actor objective is not finite ({objective})")
    optimizer_step(bundle.actor, grads, bundle.actor_opt)
    return objective


def soft_update(main: Mlp, target: Mlp, tau: float) -> Mlp:
    if main.sizes != target.sizes:
        raise ValueError(f"shape mismatch: {main.sizes} vs {target.sizes}")
    for p, t in zip(main.params(), target.params()):
        t *= 1.0 - tau
        t += tau * p
    return target


class EpisodeLog(NamedTuple):
    episode: int
    ret: float
    r_sum_mbit: float
    e_harvest_uJ: float
    e_consume_J: float
    critic_loss: float
    actor_obj: float
    epsilon: float


LOG_COLUMNS = ("episode", "return", "r_sum_mbit", "e_harvest_uJ", "e_consume_J",
               "critic_loss", "actor_obj", "epsilon")


def episode_seed(seed: int, episode: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, stream, episode])


class Trainer:
    """Holds everything a training run mutates, so it can be pickled and resumed."""

    def __init__(self, env_config: EnvConfig, hyper: TrainHyper, w: WeightVector, seed: int):
        self.env_config = env_config
        self.hyper = hyper
        self.w = w
        self.seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self.agent = make_agent(hyper, self.rng)
        self.buffer = ReplayBuffer(hyper.replay_capacity)
        self.noise = NoiseSchedule(hyper.noise_sigma2, 1.0, hyper.noise_decay, hyper.noise_floor)
        self.env = UavEnv(env_config)
        self.episode = 0
        self.updates = 0
        self.log: list[EpisodeLog] = []

    def learn(self) -> tuple[float, float]:
        batch = self.buffer.sample(self.hyper.batch_size, self.rng)
        a = self.agent
        c_loss = update_critic(a, batch, self.w)
        a_obj = update_actor(a, batch)
        soft_update(a.actor, a.target_actor, a.tau)
        soft_update(a.critic, a.target_critic, a.tau)
        self.updates += 1
        return c_loss, a_obj

    def run_episode(self) -> EpisodeLog:
        ep = self.episode + 1
        env = self.env
        _, obs = env.reset(episode_seed(self.seed, ep))
        ret = 0.0
        c_losses, a_objs = [], []
        done = False
        while not done:
            action, raw = select_action(self.agent.actor, obs, self.noise, self.rng,
                                        explore=True, v_max=self.env_config.v_max)
            out = env.step(action)
            reward = out.reward.as_array()
            self.buffer.store(Transition(obs, raw, reward, out.observation,
                                         out.done and self.hyper.terminal_at_timeout))
            ret += float(scalarize(reward, self.w))
            if self.buffer.full:
                try:
                    c, a = self.learn()
                except FloatingPointError as exc:
                    raise FloatingPointError(
                        f"episode {ep}, step {env.state.steps}: {exc}") from exc
                c_losses.append(c)
                a_objs.append(a)
            obs = out.observation
            done = out.done
        r_sum, e_h, e_c, _ = env.episode_metrics()
        row = EpisodeLog(ep, ret, r_sum / 1e6, e_h * 1e6, e_c,
                         float(np.mean(c_losses)) if c_losses else math.nan,
                         float(np.mean(a_objs)) if a_objs else math.nan,
                         self.noise.epsilon)
        self.episode = ep
        self.log.append(row)
        return row

    def run(self, episodes: int, on_episode: Optional[Callable[["Trainer", EpisodeLog], None]] = None):
        for _ in range(episodes):
            row = self.run_episode()
            log.debug("episode %d return %.3f", row.episode, row.ret)
            if on_episode is not None:
                on_episode(self, row)
        return self.log


def train(env_config: EnvConfig, hyper: TrainHyper, w: WeightVector, seed: int,
          episodes: Optional[int] = None) -> Trainer:
    """Run ``episodes`` (default ``hyper.episodes``) of MODDPG; the trainer carries the log."""
    trainer = Trainer(env_config, hyper, w, seed)
    trainer.run(hyper.episodes if episodes is None else episodes)
    return trainer


class EvalRow(NamedTuple):
    episode: int
    avg_rate_mbps: float
    avg_power_w: float
    harvested_uJ: float
    hovers: int


EVAL_COLUMNS = ("episode", "avg_rate_mbps", "avg_power_w", "harvested_uJ", "hovers")


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def mean(self, name: str) -> float:
        return float(np.mean(self.column(name)))

    def std(self, name: str) -> float:
        return float(np.std(self.column(name)))


def evaluate(actor: Mlp, env_config: EnvConfig, episodes: int, seed: int) -> EvalReport:
    """Noise-free rollouts of ``actor``; one row per episode."""
    if episodes < 1:
        raise ValueError(f"need at least one evaluation episode, got {episodes}")
    if actor.sizes[0] != OBS_DIM or actor.sizes[-1] != ACTION_DIM:
        raise ValueError(f"actor topology {actor.sizes} does not map {OBS_DIM} observations "
                         f"to {ACTION_DIM} actions")
    env = UavEnv(env_config)
    noise = NoiseSchedule()
    report = EvalReport()
    for ep in range(1, episodes + 1):
        _, obs = env.reset(episode_seed(seed, ep, stream=1))
        rates = []
        done = False
        while not done:
            action, _ = select_action(actor, obs, noise, env.rng, explore=False,
                                      v_max=env_config.v_max)
            out = env.step(action)
            if out.hover is not None:
                rates.append(out.hover.rate_bps)
            obs, done = out.observation, out.done
        _, e_h, e_c, k = env.episode_metrics()
        report.rows.append(EvalRow(ep, float(np.mean(rates)) / 1e6 if rates else 0.0,
                                   e_c / env_config.mission_secs, e_h * 1e6, k))
    return report
