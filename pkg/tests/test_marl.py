import numpy as np
import pytest

from qnetrl.config import TrainConfig, loads_config
from qnetrl.env import LOCAL_TARGET
from qnetrl.errors import NonFiniteLoss, ShapeMismatch
from qnetrl.marl import AgentLearner, evaluate, sigmoid, softmax, train
from qnetrl.replay import Batch

OBS = 8
TARGETS = 7


def make_learner(cfg=None, seed=0) -> AgentLearner:
    cfg = cfg or TrainConfig(hidden=(16, 16), batch_size=8, warmup=8, buffer_capacity=64)
    return AgentLearner("m0", OBS, TARGETS, cfg, np.random.default_rng(seed))


def synthetic_batch(rng, size=8, done=1.0) -> Batch:
    return Batch(
        obs=rng.normal(size=(size, OBS)),
        target=rng.integers(0, TARGETS, size=size),
        fraction=rng.uniform(size=size),
        reward=rng.normal(loc=-2.0, size=size),
        next_obs=rng.normal(size=(size, OBS)),
        done=np.full(size, done),
    )


class FixedRng:
    """Deterministic stand-in for exploration draws."""

    def __init__(self, uniform=1.0, integer=0, normal=0.0):
        self._u, self._i, self._n = uniform, integer, normal

    def uniform(self):
        return self._u

    def integers(self, n):
        return self._i

    def standard_normal(self):
        return self._n


class TestSelectAction:
    def test_greedy_is_deterministic_argmax(self):
        learner = make_learner()
        obs = np.random.default_rng(1).normal(size=OBS)
        a1 = learner.select_action(obs, explore=False)
        a2 = learner.select_action(obs, explore=False)
        assert a1 == a2
        out = learner.actor.forward(obs[None, :])[0]
        expected = int(np.argmax(out[:TARGETS]))
        assert a1.target == expected
        if expected != LOCAL_TARGET:
            assert a1.fraction == pytest.approx(float(sigmoid(out[TARGETS:][None, :])[0, 0]))

    def test_epsilon_one_targets_uniform_within_3_sigma(self):
        learner = make_learner()
        learner.epsilon = 1.0
        rng = np.random.default_rng(5)
        draws = 10_000
        counts = np.zeros(TARGETS)
        obs = np.zeros(OBS)
        for _ in range(draws):
            counts[learner.select_action(obs, explore=True, rng=rng).target] += 1
        p = 1.0 / TARGETS
        sigma = np.sqrt(draws * p * (1 - p))
        assert np.all(np.abs(counts - draws * p) < 3 * sigma)

    def test_noise_clips_fraction_to_unit_interval(self):
        learner = make_learner()
        learner.epsilon = 0.0
        learner.noise_std = 0.4
        # force a non-local greedy target and a ~0.9 fraction from the actor
        w_last, b_last = learner.actor.layers[-1]
        w_last[:] = 0.0
        b_last[:] = 0.0
        b_last[3] = 5.0                       # greedy target 3
        b_last[TARGETS] = np.log(0.9 / 0.1)   # sigmoid -> 0.9
        action = learner.select_action(np.zeros(OBS), explore=True,
                                       rng=FixedRng(uniform=1.0, normal=1.0))
        assert action.target == 3
        assert action.fraction == 1.0  # 0.9 + 0.4 clipped
        action = learner.select_action(np.zeros(OBS), explore=True,
                                       rng=FixedRng(uniform=1.0, normal=-3.0))
        assert action.fraction == 0.0  # 0.9 - 1.2 clipped

    def test_local_target_forces_zero_fraction(self):
        learner = make_learner()
        w_last, b_last = learner.actor.layers[-1]
        w_last[:] = 0.0
        b_last[:] = 0.0
        b_last[LOCAL_TARGET] = 5.0
        b_last[TARGETS] = 3.0  # actor wants fraction ~0.95
        action = learner.select_action(np.zeros(OBS), explore=False)
        assert action.target == LOCAL_TARGET
        assert action.fraction == 0.0

    def test_argmax_invariant_under_positive_scaling(self):
        learner = make_learner(seed=3)
        obs = np.random.default_rng(2).normal(size=OBS)
        before = learner.select_action(obs, explore=False).target
        w_last, b_last = learner.actor.layers[-1]
        w_last[:, :TARGETS] *= 3.7
        b_last[:TARGETS] *= 3.7
        assert learner.select_action(obs, explore=False).target == before

    def test_wrong_observation_width_raises(self):
        learner = make_learner()
        with pytest.raises(ShapeMismatch):
            learner.select_action(np.zeros(OBS + 1), explore=False)


class TestUpdate:
    def test_tau_one_copies_targets(self):
        cfg = TrainConfig(hidden=(16, 16), tau=1.0, batch_size=8, warmup=8,
                          buffer_capacity=64)
        learner = make_learner(cfg)
        batch = synthetic_batch(np.random.default_rng(0))
        learner.update(batch, cfg)
        np.testing.assert_array_equal(learner.target_actor_theta, learner.actor_theta)
        np.testing.assert_array_equal(learner.target_critic_theta, learner.critic_theta)

    def test_critic_loss_decreases_on_fixed_batch(self):
        cfg = TrainConfig(hidden=(16, 16), critic_lr=1e-3, actor_lr=1e-5,
                          batch_size=8, warmup=8, buffer_capacity=64)
        learner = make_learner(cfg, seed=1)
        # done = 1 everywhere pins the TD target to the reward alone
        batch = synthetic_batch(np.random.default_rng(1), done=1.0)
        losses = [learner.update(batch, cfg)[0] for _ in range(50)]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_returns_finite_scalars(self):
        cfg = TrainConfig(hidden=(16, 16), batch_size=8, warmup=8, buffer_capacity=64)
        learner = make_learner(cfg)
        c, a = learner.update(synthetic_batch(np.random.default_rng(2)), cfg)
        assert np.isfinite(c) and np.isfinite(a)

    def test_non_finite_reward_raises(self):
        cfg = TrainConfig(hidden=(16, 16), batch_size=8, warmup=8, buffer_capacity=64)
        learner = make_learner(cfg)
        batch = synthetic_batch(np.random.default_rng(3))
        batch.reward[0] = np.inf
        with pytest.raises(NonFiniteLoss):
            learner.update(batch, cfg)

    def test_targets_converge_toward_online(self):
        cfg = TrainConfig(hidden=(16, 16), tau=0.05, critic_lr=1e-5, actor_lr=1e-5,
                          batch_size=8, warmup=8, buffer_capacity=64)
        learner = make_learner(cfg, seed=4)
        # targets start equal to online; knock them away first
        learner.target_critic_theta += 1.0
        gap0 = float(np.linalg.norm(learner.target_critic_theta - learner.critic_theta))
        batch = synthetic_batch(np.random.default_rng(4))
        for _ in range(100):
            learner.update(batch, cfg)
        gap1 = float(np.linalg.norm(learner.target_critic_theta - learner.critic_theta))
        assert gap1 < 0.05 * gap0

    def test_epsilon_schedule_non_increasing_with_floor(self):
        cfg = TrainConfig(epsilon_start=1.0, epsilon_min=0.05, epsilon_decay=0.9)
        learner = make_learner(TrainConfig(hidden=(16, 16), batch_size=8, warmup=8,
                                           buffer_capacity=64))
        values = [learner.epsilon]
        for _ in range(60):
            learner.decay_exploration(cfg)
            values.append(learner.epsilon)
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(0.05)


SMALL = """
seed = 19
[topology]
mobile = 2
edge = 2
[env]
episode_length = 20
[training]
episodes = 3
batch_size = 8
warmup = 8
buffer_capacity = 512
hidden = [12, 12]
eval_every = 2
eval_episodes = 1
"""


class TestTrain:
    def test_zero_episodes_empty_trace(self):
        cfg = loads_config(SMALL.replace("episodes = 3", "episodes = 0"))
        result = train(cfg)
        assert result.trace.rows == []

    def test_same_seed_bit_identical_traces(self):
        cfg = loads_config(SMALL)
        rows_a = [tuple(vars(r).values()) for r in train(cfg).trace.rows]
        rows_b = [tuple(vars(r).values()) for r in train(cfg).trace.rows]
        assert len(rows_a) == 3
        assert rows_a == rows_b

    def test_trace_reports_episode_epsilon(self):
        cfg = loads_config(SMALL)
        rows = train(cfg).trace.rows
        assert rows[0].epsilon == 1.0
        assert rows[1].epsilon == pytest.approx(0.97)
        assert rows[2].epsilon == pytest.approx(0.97 * 0.97)

    def test_eval_cost_carried_forward(self):
        cfg = loads_config(SMALL)
        rows = train(cfg).trace.rows
        assert np.isfinite(rows[0].eval_cost)  # pre-training evaluation
        assert np.isfinite(rows[1].eval_cost)  # episode 2 evaluates afresh
        assert rows[2].eval_cost == rows[1].eval_cost  # carried forward
        assert all(np.isfinite(r.eval_cost) for r in rows)

    def test_parameters_finite_after_training(self):
        cfg = loads_config(SMALL)
        result = train(cfg)
        assert all(l.params_finite() for l in result.learners.values())


class TestEvaluate:
    def test_random_baseline_reproducible(self):
        cfg = loads_config(SMALL)
        m1, per1 = evaluate(cfg, "random", 3, seed=77)
        m2, per2 = evaluate(cfg, "random", 3, seed=77)
        assert m1 == m2 and per1 == per2
        assert np.isfinite(m1) and m1 > 0
        assert len(per1) == 3

    def test_all_local_matches_analytic_cost(self):
        # every idle step brings a 2 s local task that blocks one step beyond
        # itself, so tasks start at steps 0, 2, 4, ... (ceil(2/1) = 2 busy)
        cfg = loads_config(
            """
            [topology]
            mobile = 1
            edge = 1
            [tasks]
            n_min = 6
            n_max = 6
            k_min = 3
            k_max = 3
            [env]
            arrival_prob = 1.0
            episode_length = 20
            """
        )
        steps = cfg.env.episode_length
        starts = (steps + 1) // 2
        expected = 2.0 * starts / steps
        mean, per = evaluate(cfg, "all-local", 4, seed=5)
        assert mean == pytest.approx(expected)
        assert all(c == pytest.approx(expected) for c in per)

    def test_unknown_policy_name(self):
        from qnetrl.errors import UnknownPolicy

        cfg = loads_config(SMALL)
        with pytest.raises(UnknownPolicy):
            evaluate(cfg, "perfect", 1, seed=0)


def test_softmax_rows_sum_to_one():
    z = np.random.default_rng(0).normal(size=(5, 7)) * 30
    p = softmax(z)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-12)
    assert np.all(p > 0)


def test_sigmoid_extremes_stable():
    z = np.array([[-800.0, 800.0, 0.0]])
    s = sigmoid(z)
    np.testing.assert_allclose(s, [[0.0, 1.0, 0.5]], atol=1e-12)
