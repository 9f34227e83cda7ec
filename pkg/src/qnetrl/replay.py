"""Fixed-capacity experience ring with uniform batch sampling.

Storage is struct-of-arrays so sampled batches feed the dense-layer kernels
without per-record repacking; eviction is strictly oldest-first.
"""

from dataclasses import dataclass

import numpy as np

from .env import HybridAction, TransitionRecord
from .errors import InsufficientExperience


@dataclass(frozen=True)
class Batch:
    """Column view of sampled transitions (rows align across arrays)."""

    obs: np.ndarray        # (B, obs_size)
    target: np.ndarray     # (B,) int64 discrete action index
    fraction: np.ndarray   # (B,)
    reward: np.ndarray     # (B,)
    next_obs: np.ndarray   # (B, obs_size)
    done: np.ndarray       # (B,) 0.0 / 1.0

    def __len__(self):
        return self.obs.shape[0]


class ReplayBuffer:
    def __init__(self, capacity: int, obs_size: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._obs = np.zeros((capacity, obs_size), dtype=np.float64)
        self._target = np.zeros(capacity, dtype=np.int64)
        self._fraction = np.zeros(capacity, dtype=np.float64)
        self._reward = np.zeros(capacity, dtype=np.float64)
        self._next_obs = np.zeros((capacity, obs_size), dtype=np.float64)
        self._done = np.zeros(capacity, dtype=np.float64)
        self._cursor = 0
        self._size = 0

    def __len__(self):
        return self._size

    def store(self, record: TransitionRecord):
        i = self._cursor
        self._obs[i] = record.observation
        self._target[i] = record.action.target
        self._fraction[i] = record.action.fraction
        self._reward[i] = record.reward
        self._next_obs[i] = record.next_observation
        self._done[i] = 1.0 if record.done else 0.0
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform with replacement over the stored records."""
        if self._size < batch_size:
            raise InsufficientExperience(
                f"buffer holds {self._size} records, batch needs {batch_size}")
        idx = rng.integers(0, self._size, size=batch_size)
        return Batch(
            obs=self._obs[idx].copy(),
            target=self._target[idx].copy(),
            fraction=self._fraction[idx].copy(),
            reward=self._reward[idx].copy(),
            next_obs=self._next_obs[idx].copy(),
            done=self._done[idx].copy(),
        )

    def records(self) -> list:
        """Stored transitions, oldest first."""
        if self._size < self.capacity:
            order = range(self._size)
        else:
            order = [(self._cursor + j) % self.capacity for j in range(self.capacity)]
        return [
            TransitionRecord(
                observation=self._obs[i].copy(),
                action=HybridAction(int(self._target[i]), float(self._fraction[i])),
                reward=float(self._reward[i]),
                next_observation=self._next_obs[i].copy(),
                done=bool(self._done[i]),
            )
            for i in order
        ]
