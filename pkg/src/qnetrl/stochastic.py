"""Scenario sampling and an exhaustive small-instance oracle.

The offloading problem is stochastic in link fidelities and task arrivals.
Here that uncertainty is realized as sample-average approximation: draw a
set of frozen scenarios, evaluate policies against all of them, and (on
small instances) brute-force the best stationary joint action as a
ground-truth reference for learned policies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .env import FrozenDraws, HybridAction, LOCAL_TARGET, OffloadEnv, no_op_action
from .errors import SearchSpaceTooLarge
from .network import build_topology
from .quantum import sample_fidelity
from .seeding import stream
from .tasks import generate_task

MAX_JOINT_ACTIONS = 100_000


@dataclass(frozen=True)
class Scenario:
    """One frozen realization of an episode's randomness.

    Tables cover steps 0..episode_length inclusive (arrivals are drawn once
    at reset and once after every step). Keys match the environment's frozen
    draw provider: (step, agent) and (step, link id).
    """

    arrival_u: dict
    tasks: dict
    fidelities: dict
    weight: float

    def draws(self) -> FrozenDraws:
        return FrozenDraws(self.arrival_u, self.tasks, self.fidelities)


def sample_scenarios(config: RunConfig, count: int, seed: int):
    """count i.i.d. scenarios with uniform weight 1/count; deterministic per seed.

    Each scenario draws, per step: one arrival uniform per agent, one task
    per agent (kept even if the arrival does not fire, so tables are
    rectangular), and one fidelity per link.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    topology = build_topology(config.topology)
    agents = topology.mobile_ids()
    links = list(topology.links)
    steps = config.env.episode_length
    weight = 1.0 / count
    scenarios = []
    for i in range(count):
        rng = stream(seed, "scenario", i)
        arrival_u, tasks, fidelities = {}, {}, {}
        for step in range(steps + 1):
            for a in agents:
                arrival_u[(step, a)] = float(rng.uniform())
            for a in agents:
                tasks[(step, a)] = generate_task(
                    rng, a, config.tasks, task_id=f"{a}-s{i}t{step}")
            for lid in links:
                fidelities[(step, lid)] = sample_fidelity(
                    topology.links[lid].fidelity_dist, rng)
        scenarios.append(Scenario(arrival_u, tasks, fidelities, weight))
    return scenarios


def _episode_cost(config: RunConfig, policy, scenario: Scenario,
                  policy_rng: np.random.Generator) -> float:
    """Total (summed over steps) global cost of one episode on a frozen scenario."""
    env = OffloadEnv(config, draws=scenario.draws())
    _, obs = env.reset()
    total = 0.0
    done = False
    while not done:
        actions = {}
        for a in env.agent_ids:
            if env.state.pending[a] is not None:
                actions[a] = policy.select(a, obs[a], policy_rng)
            else:
                actions[a] = no_op_action()
        _, _, done, info = env.step(actions)
        total += info["global_cost"]
        obs = info["observations"]
    return total


def expected_cost(config: RunConfig, policy, scenarios):
    """(mean, standard error) of episode cost over a scenario set.

    Stochastic policies draw from a stream keyed by scenario index, so
    repeated calls see identical randomness. Standard error uses the
    sample standard deviation (ddof=1); a single scenario gives 0.
    """
    if not scenarios:
        raise ValueError("scenario set must be non-empty")
    costs = np.array([
        _episode_cost(config, policy, sc, stream(i, "scenario-policy"))
        for i, sc in enumerate(scenarios)
    ])
    weights = np.array([sc.weight for sc in scenarios])
    mean = float(np.average(costs, weights=weights))
    if len(costs) < 2:
        return mean, 0.0
    se = float(np.std(costs, ddof=1) / math.sqrt(len(costs)))
    return mean, se


class StationaryPolicy:
    """Plays one fixed action per agent, whatever the observation."""

    def __init__(self, actions: dict):
        self.actions = dict(actions)

    def select(self, agent_id: str, obs, rng=None) -> HybridAction:
        return self.actions[agent_id]


@dataclass(frozen=True)
class OracleResult:
    actions: dict        # agent id -> HybridAction
    expected_cost: float
    standard_error: float
    candidates: int      # joint actions evaluated


def _per_agent_candidates(n_targets: int, fraction_grid):
    grid = sorted({float(x) for x in fraction_grid})
    for x in grid:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"fractions must lie in [0, 1], got {x}")
    cands = [HybridAction(LOCAL_TARGET, 0.0)]
    for target in range(1, n_targets):
        for x in grid:
            cands.append(HybridAction(target, x))
    return cands


def exhaustive_oracle(config: RunConfig, fraction_grid, scenarios) -> OracleResult:
    """Best stationary joint action under the grid, by full enumeration.

    Candidates are ordered lexicographically by (target, fraction) per agent
    and only strict improvements replace the incumbent, so cost ties resolve
    to the lexicographically smallest joint action.
    """
    if not scenarios:
        raise ValueError("scenario set must be non-empty")
    topology = build_topology(config.topology)
    agents = topology.mobile_ids()
    n_targets = 1 + len(topology.edge_ids()) + 1
    per_agent = _per_agent_candidates(n_targets, fraction_grid)
    total = len(per_agent) ** len(agents)
    if total > MAX_JOINT_ACTIONS:
        raise SearchSpaceTooLarge(
            f"{total} joint actions exceed the {MAX_JOINT_ACTIONS} cap")
    best_actions = None
    best_mean = math.inf
    best_se = 0.0
    for joint in itertools.product(per_agent, repeat=len(agents)):
        actions = dict(zip(agents, joint))
        mean, se = expected_cost(config, StationaryPolicy(actions), scenarios)
        if mean < best_mean:
            best_actions, best_mean, best_se = actions, mean, se
    return OracleResult(actions=best_actions, expected_cost=best_mean,
                        standard_error=best_se, candidates=total)
