"""Binary policy checkpoints.

Layout (all integers u32 little-endian, all floats f64 little-endian):

    magic "QNETPOL1"
    n_agents
    per agent: id length, utf-8 id, net count (4: actor, critic,
        target actor, target critic), and per net: layer count, then per
        layer n_in, n_out, row-major weights (n_in*n_out), biases (n_out).

The flat parameter vectors used by the networks already store layers as
[weights, biases] in order, so each net serializes as contiguous slices.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import IoError, ParseError
from .nn import Mlp, param_count

MAGIC = b"QNETPOL1"
NET_NAMES = ("actor", "critic", "target_actor", "target_critic")


def _pack_net(chunks: list, sizes, theta: np.ndarray):
    chunks.append(struct.pack("<I", len(sizes) - 1))
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        chunks.append(struct.pack("<II", n_in, n_out))
        w = theta[offset:offset + n_in * n_out]
        offset += n_in * n_out
        b = theta[offset:offset + n_out]
        offset += n_out
        chunks.append(w.astype("<f8", copy=False).tobytes())
        chunks.append(b.astype("<f8", copy=False).tobytes())


def serialize(learners: dict) -> bytes:
    """learners: agent id -> object with actor/critic/target_* Mlps."""
    chunks = [MAGIC, struct.pack("<I", len(learners))]
    for agent_id, learner in learners.items():
        ident = agent_id.encode("utf-8")
        chunks.append(struct.pack("<I", len(ident)))
        chunks.append(ident)
        chunks.append(struct.pack("<I", len(NET_NAMES)))
        for name in NET_NAMES:
            net = getattr(learner, name)
            _pack_net(chunks, net.sizes, net.theta)
    return b"".join(chunks)


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ParseError("truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def deserialize(blob: bytes) -> dict:
    """Returns agent id -> {net name: (sizes, flat parameter vector)}."""
    cur = _Cursor(blob)
    if cur.take(len(MAGIC)) != MAGIC:
        raise ParseError("not a policy checkpoint (bad magic)")
    agents = {}
    for _ in range(cur.u32()):
        ident = cur.take(cur.u32()).decode("utf-8")
        nets = {}
        n_nets = cur.u32()
        if n_nets != len(NET_NAMES):
            raise ParseError(f"expected {len(NET_NAMES)} nets per agent, got {n_nets}")
        for name in NET_NAMES:
            n_layers = cur.u32()
            if n_layers < 1:
                raise ParseError("net with no layers")
            dims = []
            parts = []
            for i in range(n_layers):
                n_in, n_out = cur.u32(), cur.u32()
                if i == 0:
                    dims.append(n_in)
                elif n_in != dims[-1]:
                    raise ParseError(
                        f"layer {i} input {n_in} does not chain from {dims[-1]}")
                dims.append(n_out)
                parts.append(np.frombuffer(cur.take(8 * n_in * n_out), dtype="<f8"))
                parts.append(np.frombuffer(cur.take(8 * n_out), dtype="<f8"))
            sizes = tuple(dims)
            theta = np.concatenate(parts).astype(np.float64)
            if theta.shape != (param_count(sizes),):
                raise ParseError("parameter count does not match layer dims")
            nets[name] = (sizes, theta)
        agents[ident] = nets
    if cur.pos != len(blob):
        raise ParseError(f"{len(blob) - cur.pos} trailing bytes after checkpoint")
    return agents


def save_checkpoint(learners: dict, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(serialize(learners))
    except OSError as exc:
        raise IoError(f"cannot write checkpoint to {path}: {exc}") from exc


def read_checkpoint(path) -> dict:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint from {path}: {exc}") from exc
    return deserialize(blob)


class CheckpointPolicy:
    """Greedy policy rebuilt from a checkpoint's actor networks.

    obs_scale must match the one used in training (it is derived from the
    run config, so evaluating under the training config reproduces it).
    """

    def __init__(self, agents: dict, obs_scale=None):
        from .marl import sigmoid  # local import keeps module load light

        self._sigmoid = sigmoid
        self.obs_scale = obs_scale
        self.actors = {}
        self.n_targets = {}
        for agent_id, nets in agents.items():
            sizes, theta = nets["actor"]
            self.actors[agent_id] = Mlp(sizes, theta)
            self.n_targets[agent_id] = sizes[-1] - 1

    def select(self, agent_id: str, obs: np.ndarray, rng=None):
        from .env import LOCAL_TARGET, HybridAction

        if agent_id not in self.actors:
            raise ParseError(f"checkpoint has no policy for agent {agent_id!r}")
        obs = np.asarray(obs, dtype=np.float64)
        if self.obs_scale is not None:
            obs = obs / self.obs_scale
        out = self.actors[agent_id].forward(obs[None, :])[0]
        n_t = self.n_targets[agent_id]
        target = int(np.argmax(out[:n_t]))
        fraction = float(self._sigmoid(out[n_t:])[0])
        if target == LOCAL_TARGET:
            fraction = 0.0
        return HybridAction(target=target, fraction=fraction)


def load_policy(path, obs_scale=None) -> CheckpointPolicy:
    return CheckpointPolicy(read_checkpoint(path), obs_scale=obs_scale)
