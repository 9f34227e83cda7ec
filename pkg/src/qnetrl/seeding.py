"""Deterministic stream derivation from a single root seed.

Every stochastic component draws from its own numpy Generator whose seed is
derived from (root seed, component name, instance index). Streams are
therefore stable across runs and insensitive to the order in which other
components consume randomness.
"""

import hashlib

import numpy as np


def stream_seed(root_seed: int, name: str, index: int = 0) -> int:
    """128-bit seed for the (name, index) stream under root_seed."""
    digest = hashlib.sha256(f"{root_seed}:{name}:{index}".encode()).digest()
    return int.from_bytes(digest[:16], "little")


def stream(root_seed: int, name: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(stream_seed(root_seed, name, index))
