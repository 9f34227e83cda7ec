"""Quantum-autoencoder workloads and their latency/energy/cost accounting.

A task compresses n input qubits into k latent qubits; its classical footprint
is `work` work-units of circuit execution plus `payload_bits` of data to move
when offloading. Offloading a fraction x runs both shares concurrently, so
latency is the slower of the local and remote sides.
"""

from dataclasses import dataclass

import numpy as np

from .errors import KeyStarvation, MissingRemote
from .network import NodeSpec, PathMetrics

N_RANGE = (6, 9)   # input qubits
K_RANGE = (3, 5)   # latent qubits


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    origin: str          # mobile node id
    n: int               # input qubits
    k: int               # latent qubits
    work: float          # work-units = circuit_depth * shots
    payload_bits: float  # classical bits moved when offloading
    key_ratio: float     # secret-key bits per payload bit

    def __post_init__(self):
        if not (N_RANGE[0] <= self.n <= N_RANGE[1]):
            raise ValueError(f"n must be in {N_RANGE}, got {self.n}")
        if not (K_RANGE[0] <= self.k <= K_RANGE[1]):
            raise ValueError(f"k must be in {K_RANGE}, got {self.k}")
        if self.work <= 0:
            raise ValueError("work must be > 0")
        if self.payload_bits < 0:
            raise ValueError("payload_bits must be >= 0")
        if self.key_ratio < 0:
            raise ValueError("key_ratio must be >= 0")


@dataclass(frozen=True)
class QosWeights:
    d: float  # latency weight, cost per second
    e: float  # energy weight, cost per joule

    def __post_init__(self):
        if self.d < 0 or self.e < 0 or self.d + self.e <= 0:
            raise ValueError(f"need d >= 0, e >= 0, d + e > 0, got d={self.d}, e={self.e}")


@dataclass(frozen=True)
class CostBreakdown:
    latency: float  # s
    energy: float   # J
    cost: float     # d*latency + e*energy


@dataclass(frozen=True)
class TaskConfig:
    n_min: int = 6
    n_max: int = 9
    k_min: int = 3
    k_max: int = 5
    work_min: float = 2e5    # circuit_depth 200 * shots 1000
    work_max: float = 2e5
    payload_min: float = 1000.0   # bits
    payload_max: float = 4000.0
    key_ratio: float = 1.0


def generate_task(rng: np.random.Generator, origin: str, config: TaskConfig,
                  task_id: str = "") -> TaskSpec:
    """Draw one task: n, k uniform on their ranges, then work, then payload.

    The draw order is part of the determinism contract; equal rng states give
    identical task streams.
    """
    n = int(rng.integers(config.n_min, config.n_max + 1))
    k = int(rng.integers(config.k_min, config.k_max + 1))
    work = float(rng.uniform(config.work_min, config.work_max))
    payload = float(rng.uniform(config.payload_min, config.payload_max))
    return TaskSpec(task_id=task_id, origin=origin, n=n, k=k, work=work,
                    payload_bits=payload, key_ratio=config.key_ratio)


def task_cost(latency: float, energy: float, q: QosWeights) -> float:
    """QoS-weighted scalar cost."""
    if latency < 0 or energy < 0:
        raise ValueError("latency and energy must be >= 0")
    return q.d * latency + q.e * energy


def split_execution(task: TaskSpec, x: float, local: NodeSpec, remote: NodeSpec | None,
                    route: PathMetrics | None, qos: QosWeights) -> CostBreakdown:
    """Cost of running fraction x of the task on `remote`, the rest locally.

    Local and offloaded shares execute in parallel; the remote side pays
    transmission (payload plus route propagation), key-wait (secret-key bits
    at the route's bottleneck key rate), and remote compute. x = 0 is pure
    local execution, independent of every remote and route parameter.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {x}")

    t_l = (1.0 - x) * task.work / local.gate_speed
    if x == 0.0:
        latency = t_l
        energy = t_l * local.power_active
        return CostBreakdown(latency, energy, task_cost(latency, energy, qos))

    if remote is None or route is None:
        raise MissingRemote(f"task {task.task_id}: offload fraction {x} needs a remote target")

    key_bits = x * task.payload_bits * task.key_ratio
    if key_bits > 0 and route.min_key_rate == 0:
        raise KeyStarvation(f"task {task.task_id}: route provides no key material")

    t_tx = x * task.payload_bits / route.min_classical_rate + route.latency
    t_key = key_bits / route.min_key_rate if key_bits > 0 else 0.0
    t_r = x * task.work / remote.gate_speed

    latency = max(t_l, t_tx + t_key + t_r)
    energy = t_l * local.power_active + t_tx * local.power_tx + t_r * remote.power_active
    return CostBreakdown(latency, energy, task_cost(latency, energy, qos))
