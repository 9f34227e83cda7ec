"""Independent actor-critic learners over the hybrid action space.

One learner per agent: the actor maps an observation to discrete target
preferences plus a squashed offload fraction; the critic scores
(observation, action encoding) pairs. During the actor update the discrete
head enters the critic as a softmax (soft one-hot) so the critic's score
differentiates through both heads; replayed actions are encoded hard.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, TrainConfig
from .env import (LOCAL_TARGET, HybridAction, OffloadEnv, TransitionRecord,
                  no_op_action, observation_scale)
from .errors import NonFiniteLoss, ShapeMismatch
from .nn import Adam, Mlp, clip_grad_norm, init_params, param_count, soft_update
from .replay import Batch, ReplayBuffer
from .seeding import stream, stream_seed


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class AgentLearner:
    """Actor, critic, their targets, exploration state and a replay buffer."""

    def __init__(self, agent_id: str, obs_size: int, n_targets: int,
                 cfg: TrainConfig, rng: np.random.Generator, obs_scale=None):
        self.agent_id = agent_id
        self.obs_size = obs_size
        self.n_targets = n_targets
        # raw observation fields span orders of magnitude; networks see
        # obs / obs_scale (ones when no scale is given)
        if obs_scale is None:
            self.obs_scale = np.ones(obs_size, dtype=np.float64)
        else:
            self.obs_scale = np.asarray(obs_scale, dtype=np.float64).copy()
            if self.obs_scale.shape != (obs_size,) or not (self.obs_scale > 0).all():
                raise ShapeMismatch("obs_scale must be positive with one entry per field")
        actor_sizes = (obs_size, *cfg.hidden, n_targets + 1)
        critic_sizes = (obs_size + n_targets + 1, *cfg.hidden, 1)
        self.actor_theta = init_params(actor_sizes, rng)
        self.critic_theta = init_params(critic_sizes, rng)
        self.target_actor_theta = self.actor_theta.copy()
        self.target_critic_theta = self.critic_theta.copy()
        self.actor = Mlp(actor_sizes, self.actor_theta)
        self.critic = Mlp(critic_sizes, self.critic_theta)
        self.target_actor = Mlp(actor_sizes, self.target_actor_theta)
        self.target_critic = Mlp(critic_sizes, self.target_critic_theta)
        self.actor_opt = Adam(param_count(actor_sizes), cfg.actor_lr)
        self.critic_opt = Adam(param_count(critic_sizes), cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_size)
        self.epsilon = cfg.epsilon_start
        self.noise_std = cfg.noise_start
        self._grad_actor = np.zeros_like(self.actor_theta)
        self._grad_critic = np.zeros_like(self.critic_theta)

    # -- acting -------------------------------------------------------------
    def select_action(self, obs: np.ndarray, explore: bool,
                      rng: np.random.Generator | None = None) -> HybridAction:
        """Greedy target + squashed fraction; epsilon/Gaussian exploration.

        When exploring, the rng draw pattern is fixed (uniform, integer,
        normal every call) so trajectories replay bit-identically.
        """
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.obs_size,):
            raise ShapeMismatch(
                f"observation shape {obs.shape}, expected ({self.obs_size},)")
        out = self.actor.forward((obs / self.obs_scale)[None, :])[0]
        prefs = out[: self.n_targets]
        fraction = float(sigmoid(out[self.n_targets:][None, :])[0, 0])
        target = int(np.argmax(prefs))
        if explore:
            u = float(rng.uniform())
            uniform_target = int(rng.integers(self.n_targets))
            noise = float(rng.standard_normal()) * self.noise_std
            if u < self.epsilon:
                target = uniform_target
            fraction = float(np.clip(fraction + noise, 0.0, 1.0))
        if target == LOCAL_TARGET:
            fraction = 0.0
        return HybridAction(target=target, fraction=fraction)

    def decay_exploration(self, cfg: TrainConfig):
        self.epsilon = max(cfg.epsilon_min, self.epsilon * cfg.epsilon_decay)
        self.noise_std = max(cfg.noise_min, self.noise_std * cfg.noise_decay)

    # -- learning -----------------------------------------------------------
    def _encode_hard(self, obs, target, fraction):
        batch = obs.shape[0]
        enc = np.zeros((batch, self.obs_size + self.n_targets + 1), dtype=np.float64)
        enc[:, : self.obs_size] = obs
        enc[np.arange(batch), self.obs_size + target] = 1.0
        enc[:, -1] = fraction
        return enc

    def _encode_soft(self, obs, actor_out):
        batch = obs.shape[0]
        prefs = actor_out[:, : self.n_targets]
        logit = actor_out[:, self.n_targets:]
        p = softmax(prefs)
        f = sigmoid(logit)
        enc = np.empty((batch, self.obs_size + self.n_targets + 1), dtype=np.float64)
        enc[:, : self.obs_size] = obs
        enc[:, self.obs_size: self.obs_size + self.n_targets] = p
        enc[:, -1:] = f
        return enc, p, f

    def critic_loss_and_grad(self, batch: Batch, cfg: TrainConfig):
        """Mean squared TD error and its unclipped parameter gradient.

        The TD target, r + gamma * (1 - done) * targetQ(next obs, target
        actor's soft action), is a constant of the differentiation; replayed
        actions enter the critic hard-encoded. No parameters change.
        """
        b = len(batch)
        obs = batch.obs / self.obs_scale
        next_obs = batch.next_obs / self.obs_scale
        next_actor_out = self.target_actor.forward(next_obs)
        next_enc, _, _ = self._encode_soft(next_obs, next_actor_out)
        q_next = self.target_critic.forward(next_enc)[:, 0]
        y = batch.reward + cfg.gamma * (1.0 - batch.done) * q_next
        enc = self._encode_hard(obs, batch.target, batch.fraction)
        q, critic_acts = self.critic.forward_cached(enc)
        td = q[:, 0] - y
        critic_loss = float(np.mean(td * td))
        self._grad_critic[:] = 0.0
        self.critic.backward(critic_acts, (2.0 / b) * td[:, None], self._grad_critic)
        return critic_loss, self._grad_critic

    def actor_objective_and_grad(self, batch: Batch, cfg: TrainConfig):
        """Mean critic score of the actor's soft action and its gradient.

        The gradient is with respect to the actor parameters (ascent
        direction, unclipped), flowing through the softmax and sigmoid
        squashers into the critic's action encoding. No parameters change.
        """
        b = len(batch)
        obs = batch.obs / self.obs_scale
        actor_out, actor_acts = self.actor.forward_cached(obs)
        actor_enc, p, f = self._encode_soft(obs, actor_out)
        q_actor, actor_critic_acts = self.critic.forward_cached(actor_enc)
        actor_objective = float(np.mean(q_actor))
        g_enc = self.critic.backward_data(actor_critic_acts, np.full((b, 1), 1.0 / b))
        g_p = g_enc[:, self.obs_size: self.obs_size + self.n_targets]
        g_f = g_enc[:, -1:]
        # softmax and sigmoid Jacobians carry dJ/d(encoding) back to the heads
        g_prefs = p * (g_p - np.sum(g_p * p, axis=1, keepdims=True))
        g_logit = g_f * f * (1.0 - f)
        g_out = np.concatenate([g_prefs, g_logit], axis=1)
        self._grad_actor[:] = 0.0
        self.actor.backward(actor_acts, g_out, self._grad_actor)
        return actor_objective, self._grad_actor

    def update(self, batch: Batch, cfg: TrainConfig):
        """One critic descent step and one actor ascent step on the batch.

        Returns (critic loss, actor objective). The actor sees the critic as
        updated this call. Target networks blend by tau afterwards. Raises
        NonFiniteLoss when either quantity leaves the reals; parameters are
        then no longer trustworthy.
        """
        critic_loss, grad_critic = self.critic_loss_and_grad(batch, cfg)
        if not math.isfinite(critic_loss):
            raise NonFiniteLoss(f"agent {self.agent_id}: critic loss {critic_loss}")
        clip_grad_norm(grad_critic, cfg.grad_clip)
        self.critic_opt.step(self.critic_theta, grad_critic)

        actor_objective, grad_actor = self.actor_objective_and_grad(batch, cfg)
        if not math.isfinite(actor_objective):
            raise NonFiniteLoss(f"agent {self.agent_id}: actor objective {actor_objective}")
        grad_actor *= -1.0  # ascent
        clip_grad_norm(grad_actor, cfg.grad_clip)
        self.actor_opt.step(self.actor_theta, grad_actor)

        soft_update(self.target_critic_theta, self.critic_theta, cfg.tau)
        soft_update(self.target_actor_theta, self.actor_theta, cfg.tau)
        return critic_loss, actor_objective

    def params_finite(self) -> bool:
        return bool(
            np.isfinite(self.actor_theta).all()
            and np.isfinite(self.critic_theta).all()
            and np.isfinite(self.target_actor_theta).all()
            and np.isfinite(self.target_critic_theta).all()
        )


@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    mean_global_cost: float
    eval_cost: float       # carried forward between periodic evaluations
    epsilon: float
    critic_loss: float     # mean over the episode's updates, 0 before warmup
    actor_objective: float


@dataclass
class MetricsTrace:
    rows: list = field(default_factory=list)

    def final_window_mean(self, window_fraction: float = 0.1) -> float:
        """Mean of mean_global_cost over the trailing window of episodes."""
        if not self.rows:
            return float("nan")
        n = max(1, int(round(len(self.rows) * window_fraction)))
        return float(np.mean([r.mean_global_cost for r in self.rows[-n:]]))


@dataclass
class TrainResult:
    trace: MetricsTrace
    learners: dict
    config: RunConfig
    seed: int


def train(config: RunConfig, seed: int | None = None, progress=None) -> TrainResult:
    """Full training run: select, step, store, update for every agent each step.

    Deterministic per (config, seed): parameter init, exploration, replay
    sampling and the environment all draw from named streams of the root
    seed. progress, if given, is called with each finished EpisodeRow.
    """
    root = config.seed if seed is None else seed
    cfg = config.training
    env = OffloadEnv(config)
    scale = observation_scale(config)
    learners = {
        a: AgentLearner(a, env.observation_size, env.n_targets, cfg,
                        stream(root, f"init:{a}"), obs_scale=scale)
        for a in env.agent_ids
    }
    explore_rng = {a: stream(root, f"explore:{a}") for a in env.agent_ids}
    replay_rng = {a: stream(root, f"replay:{a}") for a in env.agent_ids}
    min_fill = max(cfg.warmup, cfg.batch_size)

    trace = MetricsTrace()
    # episode-0 evaluation so every row carries a finite eval_cost
    eval_cost = float("nan")
    if cfg.episodes > 0:
        eval_cost, _ = evaluate(config, LearnedPolicy(learners), cfg.eval_episodes,
                                stream_seed(root, "eval", 0))
    step_counter = 0
    for ep in range(1, cfg.episodes + 1):
        _, obs = env.reset(seed=stream_seed(root, "episode", ep))
        step_costs = []
        critic_losses = []
        actor_objectives = []
        done = False
        while not done:
            actions = {}
            acting = []
            for a in env.agent_ids:
                if env.state.pending[a] is not None:
                    actions[a] = learners[a].select_action(obs[a], True, explore_rng[a])
                    acting.append(a)
                else:
                    actions[a] = no_op_action()
            _, rewards, done, info = env.step(actions)
            next_obs = info["observations"]
            for a in acting:
                learners[a].buffer.store(TransitionRecord(
                    observation=obs[a], action=actions[a], reward=rewards[a],
                    next_observation=next_obs[a], done=done))
            step_costs.append(info["global_cost"])
            obs = next_obs
            step_counter += 1
            if step_counter % cfg.update_every == 0:
                for a in env.agent_ids:
                    learner = learners[a]
                    if len(learner.buffer) >= min_fill:
                        try:
                            c_loss, a_obj = learner.update(
                                learner.buffer.sample(cfg.batch_size, replay_rng[a]), cfg)
                        except NonFiniteLoss as exc:
                            raise NonFiniteLoss(
                                f"episode {ep}, step {step_counter}: {exc}") from exc
                        critic_losses.append(c_loss)
                        actor_objectives.append(a_obj)

        for a in env.agent_ids:
            if not learners[a].params_finite():
                raise NonFiniteLoss(
                    f"episode {ep}: agent {a} parameters left the reals")

        epsilon_used = learners[env.agent_ids[0]].epsilon
        if cfg.eval_every > 0 and ep % cfg.eval_every == 0:
            eval_cost, _ = evaluate(config, LearnedPolicy(learners), cfg.eval_episodes,
                                    stream_seed(root, "eval", ep))
        row = EpisodeRow(
            episode=ep,
            mean_global_cost=float(np.mean(step_costs)) if step_costs else 0.0,
            eval_cost=eval_cost,
            epsilon=epsilon_used,
            critic_loss=float(np.mean(critic_losses)) if critic_losses else 0.0,
            actor_objective=float(np.mean(actor_objectives)) if actor_objectives else 0.0,
        )
        trace.rows.append(row)
        if progress is not None:
            progress(row)
        for a in env.agent_ids:
            learners[a].decay_exploration(cfg)
    return TrainResult(trace=trace, learners=learners, config=config, seed=root)


class LearnedPolicy:
    """Greedy wrapper over trained learners (exploration off)."""

    def __init__(self, learners: dict):
        self.learners = learners

    def select(self, agent_id: str, obs: np.ndarray,
               rng: np.random.Generator) -> HybridAction:
        return self.learners[agent_id].select_action(obs, explore=False)


def evaluate(config: RunConfig, policy, episodes: int, seed: int):
    """Mean per-step global cost of a policy, exploration disabled.

    policy is either an object with select(agent, obs, rng) or a baseline
    name. Returns (mean over episodes, per-episode list); each episode
    reseeds the environment from a named stream so results are reproducible
    and distinct policies face identical task/fidelity draws.
    """
    if isinstance(policy, str):
        from .baselines import baseline_policy

        policy = baseline_policy(policy, config)
    env = OffloadEnv(config)
    per_episode = []
    for ep in range(episodes):
        rng = stream(seed, "policy", ep)
        _, obs = env.reset(seed=stream_seed(seed, "episode", ep))
        costs = []
        done = False
        while not done:
            actions = {}
            for a in env.agent_ids:
                if env.state.pending[a] is not None:
                    actions[a] = policy.select(a, obs[a], rng)
                else:
                    actions[a] = no_op_action()
            _, _, done, info = env.step(actions)
            costs.append(info["global_cost"])
            obs = info["observations"]
        per_episode.append(float(np.mean(costs)))
    return float(np.mean(per_episode)), per_episode
