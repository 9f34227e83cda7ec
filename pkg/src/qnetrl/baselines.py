"""Non-learning reference policies: Random, Greedy, AllLocal, AllCloud.

Greedy is myopic: it scores every (target, fraction) candidate with the same
cost model the environment applies, using only what the observation carries
(last-known free qubits, mean link fidelities) and picks the cheapest.
"""

import dataclasses
import math

import numpy as np

from .config import RunConfig
from .env import LOCAL_TARGET, HybridAction, no_op_action
from .errors import UnknownPolicy
from .network import build_topology, path_metrics
from .quantum import autoencoder_qubit_requirement, expected_pairs_consumed, purification_rounds
from .tasks import TaskSpec, split_execution

FRACTION_GRID = tuple(round(0.1 * i, 1) for i in range(11))


class RandomPolicy:
    """Uniform target, uniform fraction."""

    def __init__(self, config: RunConfig):
        topo = build_topology(config.topology)
        self.n_targets = 1 + len(topo.edge_ids()) + 1

    def select(self, agent_id: str, obs: np.ndarray, rng: np.random.Generator) -> HybridAction:
        target = int(rng.integers(self.n_targets))
        fraction = float(rng.uniform())
        if target == LOCAL_TARGET:
            fraction = 0.0
        return HybridAction(target=target, fraction=fraction)


class AllLocalPolicy:
    def select(self, agent_id, obs, rng) -> HybridAction:
        return no_op_action()


class AllCloudPolicy:
    def __init__(self, config: RunConfig):
        topo = build_topology(config.topology)
        self.cloud_target = 1 + len(topo.edge_ids())

    def select(self, agent_id, obs, rng) -> HybridAction:
        return HybridAction(target=self.cloud_target, fraction=1.0)


class GreedyPolicy:
    """Myopic minimum over all targets and the 11-point fraction grid.

    Candidate (target, x) is scored by the split-execution cost model with
    mean link fidelities standing in for the unseen draws. Free qubits are
    known for the agent's assigned edge and the cloud (one step stale); other
    edges are assumed fully free, which only costs the policy a fallback when
    wrong. Ties resolve to the lexicographically smallest (target, x).
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.topology = build_topology(config.topology)
        self.edge_ids = self.topology.edge_ids()
        self.cloud = self.topology.cloud_id()
        self.n_targets = 1 + len(self.edge_ids) + 1
        self._route_cache = {}
        for m in self.topology.mobile_ids():
            for t in range(1, self.n_targets):
                remote = self._remote_id(t)
                metrics = path_metrics(self.topology, m, remote)
                links = self.topology.routes[(m, remote)]
                f_route = min(self.topology.links[l].fidelity_dist.mean for l in links)
                self._route_cache[(m, t)] = (remote, metrics, f_route)

    def _remote_id(self, target: int) -> str:
        if 1 <= target <= len(self.edge_ids):
            return self.edge_ids[target - 1]
        return self.cloud

    def select(self, agent_id: str, obs: np.ndarray, rng) -> HybridAction:
        n, k = int(obs[0]), int(obs[1])
        if n == 0:
            return no_op_action()
        task = TaskSpec(task_id="", origin=agent_id, n=n, k=k, work=float(obs[2]),
                        payload_bits=float(obs[3]), key_ratio=self.config.tasks.key_ratio)
        demand = autoencoder_qubit_requirement(n, k).total
        local_spec = self.topology.nodes[agent_id]
        assigned = self.topology.assigned_edge[agent_id]
        known_free = {assigned: float(obs[5]), self.cloud: float(obs[6])}

        best = None  # (cost, target, x)
        local_cost = split_execution(task, 0.0, local_spec, None, None, self.config.qos).cost
        best = (local_cost, LOCAL_TARGET, 0.0)
        for target in range(1, self.n_targets):
            remote, metrics, f_route = self._route_cache[(agent_id, target)]
            rounds = purification_rounds(f_route, self.config.env.fidelity_target,
                                         self.config.quantum.round_cap)
            if rounds is None:
                continue
            pairs = expected_pairs_consumed(f_route, self.config.env.fidelity_target,
                                            self.config.quantum.round_cap)
            if metrics.min_epr_rate == 0.0:
                continue  # no pair generation on this route, offload impossible
            if metrics.min_key_rate == 0.0 and task.payload_bits * task.key_ratio > 0:
                continue
            free = known_free.get(remote, float(self.topology.nodes[remote].qubit_capacity))
            route = dataclasses.replace(
                metrics, latency=metrics.latency + pairs / metrics.min_epr_rate)
            for x in FRACTION_GRID:
                if x == 0.0:
                    continue  # identical to the local candidate, which wins ties
                if math.ceil(x * demand) > free:
                    continue
                cost = split_execution(task, x, local_spec, self.topology.nodes[remote],
                                       route, self.config.qos).cost
                if cost < best[0] - 1e-15:
                    best = (cost, target, x)
        _, target, x = best
        return HybridAction(target=target, fraction=float(x))


BASELINE_NAMES = ("random", "greedy", "all-local", "all-cloud")


def baseline_policy(name: str, config: RunConfig):
    """Factory for the named baselines; UnknownPolicy for anything else."""
    key = name.lower()
    if key == "random":
        return RandomPolicy(config)
    if key == "greedy":
        return GreedyPolicy(config)
    if key in ("all-local", "alllocal", "local"):
        return AllLocalPolicy()
    if key in ("all-cloud", "allcloud", "cloud"):
        return AllCloudPolicy(config)
    raise UnknownPolicy(f"no baseline named {name!r}; known: {', '.join(BASELINE_NAMES)}")
