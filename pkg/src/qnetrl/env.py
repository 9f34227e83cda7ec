"""Partially observable multi-agent offloading environment.

Fixed-step simulation: each step replenishes link budgets, applies one hybrid
action per task-holding agent, books shared rewards, advances time, releases
finished tasks' qubits, and draws next arrivals. All randomness flows through
a Draws provider so rollouts can be replayed against frozen tables.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .errors import InvalidConfig, MalformedAction, UnknownAgent
from .network import build_topology, path_metrics
from .quantum import (
    autoencoder_qubit_requirement,
    expected_pairs_consumed,
    purification_rounds,
    sample_fidelity,
)
from .seeding import stream
from .tasks import TaskSpec, generate_task, split_execution

LOCAL_TARGET = 0

# observation layout: task (n, k, work, payload), own free qubits,
# assigned-edge free qubits (stale), cloud free qubits (stale), last own cost
OBS_SIZE = 8


@dataclass(frozen=True)
class HybridAction:
    """Joint discrete/continuous action.

    target: 0 = local, 1..n_edges = that edge (build order), n_edges+1 = cloud.
    fraction: offloaded share of the task, in [0, 1]; forced to 0 for local.
    """

    target: int
    fraction: float


@dataclass(frozen=True)
class TransitionRecord:
    """One stored experience tuple; done marks episode end only."""

    observation: np.ndarray
    action: HybridAction
    reward: float
    next_observation: np.ndarray
    done: bool


@dataclass
class EnvState:
    """Mutable simulator state; rng streams live in the env's Draws provider."""

    time_step: int
    free: dict                 # node id -> free qubits
    key_budget: dict           # link id -> accumulated secret-key bits
    pair_budget: dict          # link id -> accumulated entangled pairs
    pending: dict              # agent id -> TaskSpec or None
    busy_until: dict           # node id -> step at which the node frees up
    holds: list = field(default_factory=list)  # (node id, qubits, release step)


class LiveDraws:
    """Stochastic sources backed by independent named rng streams.

    Consumption per step is action-independent: arrival uniforms are drawn for
    every agent, one fidelity per link, and task parameters whenever an
    arrival fires (whether or not the agent can accept it). Identical seeds
    therefore give identical draw tables under any policy.
    """

    def __init__(self, seed: int, agent_ids, link_ids, task_config):
        self._arrival = stream(seed, "arrivals")
        self._tasks = {a: stream(seed, f"task:{a}") for a in agent_ids}
        self._fid = {l: stream(seed, f"fidelity:{l}") for l in link_ids}
        self._task_config = task_config
        self._agent_ids = list(agent_ids)
        self._link_ids = list(link_ids)
        self._step = -1
        self._arrival_row = {}
        self._fid_row = {}

    def begin_step(self, step: int):
        if step != self._step + 1:
            raise ValueError(f"draws must advance one step at a time, got {step} after {self._step}")
        self._step = step
        self._arrival_row = {a: float(self._arrival.uniform()) for a in self._agent_ids}
        self._fid_row = {}

    def arrival_u(self, step: int, agent: str) -> float:
        return self._arrival_row[agent]

    def task(self, step: int, agent: str) -> TaskSpec:
        return generate_task(self._tasks[agent], agent, self._task_config,
                             task_id=f"{agent}-t{step}")

    def fidelity(self, step: int, link_id: str, dist) -> float:
        if link_id not in self._fid_row:
            self._fid_row[link_id] = sample_fidelity(dist, self._fid[link_id])
        return self._fid_row[link_id]


class FrozenDraws:
    """Pre-drawn tables; see stochastic evaluation for scenario construction."""

    def __init__(self, arrival_u, tasks, fidelities):
        # arrival_u: {(step, agent): u}; tasks: {(step, agent): TaskSpec};
        # fidelities: {(step, link): f}
        self._arrival_u = arrival_u
        self._tasks = tasks
        self._fidelities = fidelities

    def begin_step(self, step: int):
        pass

    def arrival_u(self, step: int, agent: str) -> float:
        return self._arrival_u[(step, agent)]

    def task(self, step: int, agent: str) -> TaskSpec:
        return self._tasks[(step, agent)]

    def fidelity(self, step: int, link_id: str, dist) -> float:
        return self._fidelities[(step, link_id)]


class OffloadEnv:
    """Quantum-workload offloading game over a mobile/edge/cloud topology."""

    def __init__(self, config: RunConfig, draws=None):
        self.config = config
        self.topology = build_topology(config.topology)
        self.agent_ids = self.topology.mobile_ids()
        self.edge_ids = self.topology.edge_ids()
        self.cloud = self.topology.cloud_id()
        self.n_targets = 1 + len(self.edge_ids) + 1
        self.observation_size = OBS_SIZE
        self._external_draws = draws
        self.draws = None
        self.state = None
        self._stale_free = {}
        self._last_cost = {}
        self._last_obs = {}
        # route metrics are static per topology; compute once
        self._metrics = {}
        for m in self.agent_ids:
            for remote in self.edge_ids + [self.cloud]:
                self._metrics[(m, remote)] = path_metrics(self.topology, m, remote)

    # -- target coding ----------------------------------------------------
    def target_node(self, agent: str, target: int):
        """Node id for an action target, None for local."""
        if target == LOCAL_TARGET:
            return None
        if 1 <= target <= len(self.edge_ids):
            return self.edge_ids[target - 1]
        if target == len(self.edge_ids) + 1:
            return self.cloud
        raise MalformedAction(f"target {target} outside [0, {self.n_targets - 1}]")

    # -- lifecycle ---------------------------------------------------------
    def reset(self, seed=None):
        """Start an episode; returns (state, per-agent observations)."""
        if self.config.env.episode_length < 1:
            raise InvalidConfig("episode_length must be >= 1")
        root = self.config.seed if seed is None else seed
        if self._external_draws is not None:
            self.draws = self._external_draws
        else:
            self.draws = LiveDraws(root, self.agent_ids,
                                   list(self.topology.links), self.config.tasks)
        self.state = EnvState(
            time_step=0,
            free={n: spec.qubit_capacity for n, spec in self.topology.nodes.items()},
            key_budget={l: 0.0 for l in self.topology.links},
            pair_budget={l: 0.0 for l in self.topology.links},
            pending={a: None for a in self.agent_ids},
            busy_until={n: 0 for n in self.topology.nodes},
        )
        self._stale_free = dict(self.state.free)
        self._last_cost = {a: 0.0 for a in self.agent_ids}
        self.draws.begin_step(0)
        self._draw_arrivals()
        self._build_observations()
        return self.state, self.observe()

    def observe(self):
        """Per-agent observation vectors for the current state (copies)."""
        return {a: obs.copy() for a, obs in self._last_obs.items()}

    def step(self, joint_action: dict):
        """Apply one joint action; returns (state, rewards, done, info)."""
        s = self.state
        if s is None:
            raise InvalidConfig("reset the environment before stepping")
        self._check_actions(joint_action)

        # 1. budgets accumulate key bits and entangled pairs over dt
        dt = self.config.env.dt
        for lid, link in self.topology.links.items():
            s.key_budget[lid] += link.key_rate * dt
            s.pair_budget[lid] += link.epr_rate * dt

        # 2. apply actions in fixed agent order
        costs = {}
        fallbacks = {}
        for agent in self.agent_ids:
            task = s.pending[agent]
            if task is None:
                continue
            action = joint_action[agent]
            cost, reason = self._execute(agent, task, action)
            costs[agent] = cost
            self._last_cost[agent] = cost
            if reason is not None:
                fallbacks[agent] = reason
            s.pending[agent] = None

        # remote-load snapshot for next step's stale observation fields:
        # free counts at peak usage (after actions, before holds release),
        # otherwise sub-step tasks would never be visible to other agents
        self._stale_free = dict(s.free)

        # 3. shared reward
        global_cost = float(sum(costs.values()))
        rewards = {a: -global_cost for a in self.agent_ids}

        # 4. advance time, release finished holds
        s.time_step += 1
        done = s.time_step >= self.config.env.episode_length
        kept = []
        for node, qubits, release in s.holds:
            if release <= s.time_step:
                s.free[node] += qubits
            else:
                kept.append((node, qubits, release))
        s.holds = kept

        # 5. next arrivals (drawn for every agent, applied only to idle ones)
        self.draws.begin_step(s.time_step)
        arrivals = self._draw_arrivals()

        # 6. observations: remote fields show the previous step's snapshot
        self._build_observations()

        info = {
            "observations": self.observe(),
            "global_cost": global_cost,
            "per_agent_cost": costs,
            "fallbacks": fallbacks,
            "arrivals": arrivals,
            "time_step": s.time_step,
        }
        return s, rewards, done, info

    # -- internals ----------------------------------------------------------
    def _check_actions(self, joint_action):
        s = self.state
        for agent in joint_action:
            if agent not in s.pending:
                raise UnknownAgent(f"no such agent {agent!r}")
        for agent, task in s.pending.items():
            if task is None:
                continue
            if agent not in joint_action:
                raise MalformedAction(f"agent {agent} holds a task but got no action")
            a = joint_action[agent]
            if not isinstance(a.target, (int, np.integer)):
                raise MalformedAction(f"agent {agent}: target must be an integer, got {a.target!r}")
            if not 0 <= a.target < self.n_targets:
                raise MalformedAction(
                    f"agent {agent}: target {a.target} outside [0, {self.n_targets - 1}]")
            if not (math.isfinite(a.fraction) and 0.0 <= a.fraction <= 1.0):
                raise MalformedAction(f"agent {agent}: fraction {a.fraction} outside [0, 1]")

    def _execute(self, agent: str, task: TaskSpec, action: HybridAction):
        """Run one task; returns (cost, fallback reason or None)."""
        s = self.state
        env_cfg = self.config.env
        local_spec = self.topology.nodes[agent]
        demand = autoencoder_qubit_requirement(task.n, task.k).total
        x = float(action.fraction)
        remote_id = self.target_node(agent, action.target)
        if remote_id is None:
            x = 0.0  # fraction forced to zero for local execution

        if x == 0.0:
            return self._run_local(agent, task, demand, penalized=False), None

        remote_need = math.ceil(x * demand)
        local_need = math.ceil((1.0 - x) * demand)
        route_links = self.topology.routes[(agent, remote_id)]
        metrics = self._metrics[(agent, remote_id)]

        # purification overhead against the worst link on the route
        f_route = min(
            self.draws.fidelity(s.time_step, lid, self.topology.links[lid].fidelity_dist)
            for lid in route_links
        )
        rounds = purification_rounds(f_route, env_cfg.fidelity_target,
                                     self.config.quantum.round_cap)
        if rounds is None:
            return self._run_local(agent, task, demand, penalized=True), "fidelity"
        pairs = expected_pairs_consumed(f_route, env_cfg.fidelity_target,
                                        self.config.quantum.round_cap)

        if any(s.pair_budget[lid] < pairs for lid in route_links):
            return self._run_local(agent, task, demand, penalized=True), "pairs"

        key_need = x * task.payload_bits * task.key_ratio
        if any(s.key_budget[lid] < key_need for lid in route_links):
            return self._run_local(agent, task, demand, penalized=True), "key"

        if s.free[remote_id] < remote_need:
            return self._run_local(agent, task, demand, penalized=True), "qubits"
        if s.free[agent] < local_need:
            raise InvalidConfig(
                f"node {agent} has {s.free[agent]} free qubits, local share needs {local_need}")

        # pair generation time inflates the route's propagation latency
        route = dataclasses.replace(
            metrics, latency=metrics.latency + pairs / metrics.min_epr_rate)
        breakdown = split_execution(task, x, local_spec,
                                    self.topology.nodes[remote_id], route, self.config.qos)

        for lid in route_links:
            s.pair_budget[lid] -= pairs
            s.key_budget[lid] -= key_need
        release = s.time_step + max(1, math.ceil(breakdown.latency / env_cfg.dt))
        if local_need > 0:
            s.free[agent] -= local_need
            s.holds.append((agent, local_need, release))
        s.free[remote_id] -= remote_need
        s.holds.append((remote_id, remote_need, release))
        s.busy_until[agent] = release
        return breakdown.cost, None

    def _run_local(self, agent: str, task: TaskSpec, demand: int, penalized: bool) -> float:
        s = self.state
        if s.free[agent] < demand:
            # config validation guarantees capacity covers the largest task
            raise InvalidConfig(
                f"node {agent} has {s.free[agent]} free qubits, task needs {demand}")
        breakdown = split_execution(task, 0.0, self.topology.nodes[agent],
                                    None, None, self.config.qos)
        release = s.time_step + max(1, math.ceil(breakdown.latency / self.config.env.dt))
        s.free[agent] -= demand
        s.holds.append((agent, demand, release))
        s.busy_until[agent] = release
        if penalized:
            return breakdown.cost * self.config.env.penalty
        return breakdown.cost

    def _draw_arrivals(self):
        """Bernoulli arrivals; tasks land only on idle agents, others drop."""
        s = self.state
        arrived = []
        for agent in self.agent_ids:
            u = self.draws.arrival_u(s.time_step, agent)
            if u >= self.config.env.arrival_prob:
                continue
            task = self.draws.task(s.time_step, agent)
            idle = s.pending[agent] is None and s.busy_until[agent] <= s.time_step
            if idle:
                s.pending[agent] = task
                arrived.append(agent)
        return arrived

    def _build_observations(self):
        s = self.state
        obs = {}
        for agent in self.agent_ids:
            task = s.pending[agent]
            vec = np.zeros(OBS_SIZE, dtype=np.float64)
            if task is not None:
                vec[0] = task.n
                vec[1] = task.k
                vec[2] = task.work
                vec[3] = task.payload_bits
            vec[4] = s.free[agent]
            vec[5] = self._stale_free[self.topology.assigned_edge[agent]]
            vec[6] = self._stale_free[self.cloud]
            vec[7] = self._last_cost[agent]
            obs[agent] = vec
        self._last_obs = obs


def observation_scale(config: RunConfig) -> np.ndarray:
    """Per-field positive scale of the observation vector, from config bounds.

    Learners divide observations by this before feeding their networks; raw
    fields span ~1 to ~1e5 (work units), which would otherwise unbalance
    first-layer gradients. Derived from config only, so a policy evaluated
    under its training config normalizes identically.
    """
    t = config.tasks
    topo = config.topology
    t_local = t.work_max / topo.mobile_nodes.gate_speed
    cost_scale = (config.qos.d * t_local
                  + config.qos.e * t_local * topo.mobile_nodes.power_active)
    return np.array([
        t.n_max,
        t.k_max,
        t.work_max,
        t.payload_max,
        topo.mobile_nodes.qubit_capacity,
        topo.edge_nodes.qubit_capacity,
        topo.cloud_nodes.qubit_capacity,
        max(cost_scale, 1e-12),
    ], dtype=np.float64)


def no_op_action() -> HybridAction:
    return HybridAction(target=LOCAL_TARGET, fraction=0.0)
