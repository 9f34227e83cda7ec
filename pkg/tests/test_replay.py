import numpy as np
import pytest

from qnetrl.env import HybridAction, TransitionRecord
from qnetrl.errors import InsufficientExperience
from qnetrl.replay import ReplayBuffer


def record(tag: float) -> TransitionRecord:
    # reward doubles as an identity tag for content assertions
    return TransitionRecord(
        observation=np.full(3, tag),
        action=HybridAction(target=1, fraction=0.5),
        reward=tag,
        next_observation=np.full(3, tag + 0.5),
        done=False,
    )


def stored_tags(buf):
    return [r.reward for r in buf.records()]


class TestStore:
    def test_fifo_eviction_at_capacity(self):
        buf = ReplayBuffer(2, obs_size=3)
        for tag in (1.0, 2.0, 3.0):
            buf.store(record(tag))
        assert stored_tags(buf) == [2.0, 3.0]
        assert len(buf) == 2

    def test_growth_until_capacity(self):
        buf = ReplayBuffer(4, obs_size=3)
        for i in range(3):
            buf.store(record(float(i)))
            assert len(buf) == i + 1
        assert stored_tags(buf) == [0.0, 1.0, 2.0]

    def test_wraparound_keeps_exactly_last_n(self):
        n = 5
        buf = ReplayBuffer(n, obs_size=3)
        for tag in range(2 * n):
            buf.store(record(float(tag)))
        assert len(buf) == n
        assert stored_tags(buf) == [float(t) for t in range(n, 2 * n)]

    def test_record_fields_round_trip(self):
        buf = ReplayBuffer(2, obs_size=3)
        buf.store(record(7.0))
        out = buf.records()[0]
        np.testing.assert_array_equal(out.observation, np.full(3, 7.0))
        np.testing.assert_array_equal(out.next_observation, np.full(3, 7.5))
        assert out.action == HybridAction(1, 0.5)
        assert out.reward == 7.0
        assert out.done is False


class TestSample:
    def test_insufficient_experience(self):
        buf = ReplayBuffer(100, obs_size=3)
        for i in range(10):
            buf.store(record(float(i)))
        with pytest.raises(InsufficientExperience):
            buf.sample(16, np.random.default_rng(0))

    def test_single_record_sample(self):
        buf = ReplayBuffer(4, obs_size=3)
        buf.store(record(9.0))
        batch = buf.sample(1, np.random.default_rng(0))
        assert len(batch) == 1
        assert batch.reward[0] == 9.0
        np.testing.assert_array_equal(batch.obs[0], np.full(3, 9.0))

    def test_equal_seeds_identical_batches(self):
        buf = ReplayBuffer(50, obs_size=3)
        for i in range(30):
            buf.store(record(float(i)))
        a = buf.sample(8, np.random.default_rng(42))
        b = buf.sample(8, np.random.default_rng(42))
        np.testing.assert_array_equal(a.reward, b.reward)
        np.testing.assert_array_equal(a.obs, b.obs)

    def test_uniform_with_replacement(self):
        # per-index frequency stays within 3 sigma of uniform
        size, batch, draws = 10, 10, 10_000
        buf = ReplayBuffer(size, obs_size=3)
        for i in range(size):
            buf.store(record(float(i)))
        rng = np.random.default_rng(7)
        counts = np.zeros(size)
        for _ in range(draws):
            got = buf.sample(batch, rng)
            for tag in got.reward:
                counts[int(tag)] += 1
        n = batch * draws
        p = 1.0 / size
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3 * sigma)

    def test_replacement_allows_batch_above_unique_content(self):
        buf = ReplayBuffer(4, obs_size=3)
        buf.store(record(1.0))
        buf.store(record(2.0))
        batch = buf.sample(2, np.random.default_rng(3))
        assert set(batch.reward) <= {1.0, 2.0}
