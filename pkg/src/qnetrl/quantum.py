"""Fidelity algebra for entangled pairs and computation-qubit accounting.

Fidelities are plain floats in [0, 1]; a pair is usable only above 0.5.
All operations are pure functions of their inputs plus an explicit rng.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleTarget, InvalidCompression

# smallest purification target we accept; at or below the 0.5 fixed point
# purification cannot help and the request is rejected at validation time
ROUND_CAP_DEFAULT = 32


@dataclass(frozen=True)
class FidelityDistribution:
    """Clamped Gaussian over pair fidelity."""

    mean: float = 0.85
    std: float = 0.05
    lo: float = 0.60
    hi: float = 0.99

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.mean <= self.hi <= 1.0):
            raise ValueError(f"fidelity bounds must satisfy 0 <= lo <= mean <= hi <= 1, got {self}")
        if self.std < 0.0:
            raise ValueError("fidelity std must be >= 0")


def sample_fidelity(dist: FidelityDistribution, rng: np.random.Generator) -> float:
    """One Gaussian(mean, std) draw clamped to [lo, hi]."""
    value = dist.mean + dist.std * rng.standard_normal()
    return float(min(max(value, dist.lo), dist.hi))


def purify_once(f: float) -> tuple[float, float]:
    """One symmetric purification attempt on two pairs of fidelity f.

    Returns (output fidelity, success probability). Two raw pairs are
    consumed per attempt; on failure both are lost.
    """
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {f}")
    p_success = f * f + (1.0 - f) * (1.0 - f)
    f_out = f * f / p_success
    return f_out, p_success


def purification_rounds(f0: float, f_target: float, round_cap: int = ROUND_CAP_DEFAULT):
    """Smallest r with fidelity >= f_target after r purification rounds.

    Returns None when the target is unreachable: f0 at or below the 0.5
    fixed point, or more than round_cap rounds needed.
    """
    if not 0.5 < f_target < 1.0:
        raise ValueError(f"purification target must be in (0.5, 1), got {f_target}")
    if not 0.0 <= f0 <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {f0}")
    if f0 >= f_target:
        return 0
    if f0 <= 0.5:
        return None
    f = f0
    for r in range(1, round_cap + 1):
        f, _ = purify_once(f)
        if f >= f_target:
            return r
    return None


def expected_pairs_consumed(f0: float, f_target: float, round_cap: int = ROUND_CAP_DEFAULT) -> float:
    """Expected raw pairs to distill one pair at >= f_target from fidelity f0.

    In-expectation tournament model: round i consumes two round-(i-1) pairs
    per attempt and succeeds with probability p_i, so the raw-pair cost is
    the product of 2 / p_i over the rounds actually needed.
    """
    rounds = purification_rounds(f0, f_target, round_cap)
    if rounds is None:
        raise InfeasibleTarget(f"cannot purify fidelity {f0} up to {f_target} within {round_cap} rounds")
    pairs = 1.0
    f = f0
    for _ in range(rounds):
        f, p_success = purify_once(f)
        pairs *= 2.0 / p_success
    return pairs


@dataclass(frozen=True)
class QubitDemand:
    """Physical qubits needed by one autoencoder task: n input, n-k reference, 1 auxiliary."""

    n: int
    k: int
    total: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", 2 * self.n - self.k + 1)


def autoencoder_qubit_requirement(n: int, k: int) -> QubitDemand:
    """Qubit demand 2n - k + 1 for compressing n qubits into k."""
    if k < 1 or n < 1 or k > n:
        raise InvalidCompression(f"need 1 <= k <= n, got n={n}, k={k}")
    return QubitDemand(n=n, k=k)


@dataclass(frozen=True)
class PackResult:
    """Outcome of pack_qubits: demand index -> node index, plus unplaced demand values."""

    assignment: dict
    unplaced: list

    @property
    def feasible(self) -> bool:
        return not self.unplaced


def pack_qubits(demands, capacities) -> PackResult:
    """First-fit-decreasing packing of qubit demands onto node capacities.

    Demands are placed largest first (ties by original position) on the first
    node with enough remaining capacity. A heuristic: it may miss feasible
    packings, but never over-commits a node.
    """
    for d in demands:
        if d <= 0:
            raise ValueError(f"demands must be positive, got {d}")
    for c in capacities:
        if c <= 0:
            raise ValueError(f"capacities must be positive, got {c}")
    order = sorted(range(len(demands)), key=lambda i: (-demands[i], i))
    residual = list(capacities)
    assignment = {}
    unplaced = []
    for i in order:
        need = demands[i]
        for node, free in enumerate(residual):
            if free >= need:
                assignment[i] = node
                residual[node] = free - need
                break
        else:
            unplaced.append(need)
    return PackResult(assignment=assignment, unplaced=unplaced)


# exact search is exponential in the demand count; refuse beyond this
EXACT_PACK_LIMIT = 1_000_000


def pack_qubits_exact(demands, capacities) -> PackResult:
    """Exhaustive packing: finds a complete assignment whenever one exists.

    Enumerates node choices per demand (largest demands first, so dead
    branches prune early). Falls back to the first-fit-decreasing result if
    no complete packing exists. Only for small instances; raises ValueError
    when the search space exceeds EXACT_PACK_LIMIT states.
    """
    ffd = pack_qubits(demands, capacities)
    if ffd.feasible:
        return ffd
    if len(capacities) ** len(demands) > EXACT_PACK_LIMIT:
        raise ValueError(
            f"exact packing over {len(capacities)}^{len(demands)} states exceeds {EXACT_PACK_LIMIT}"
        )
    order = sorted(range(len(demands)), key=lambda i: (-demands[i], i))
    residual = list(capacities)
    assignment = {}

    def place(pos: int) -> bool:
        if pos == len(order):
            return True
        i = order[pos]
        for node, free in enumerate(residual):
            if free >= demands[i]:
                residual[node] = free - demands[i]
                assignment[i] = node
                if place(pos + 1):
                    return True
                residual[node] = free
                del assignment[i]
        return False

    if place(0):
        return PackResult(assignment=assignment, unplaced=[])
    return ffd


def pack(demands, capacities, method: str = "ffd") -> PackResult:
    """Packing entry point selected by the quantum.packing config key."""
    if method == "ffd":
        return pack_qubits(demands, capacities)
    if method == "exhaustive":
        return pack_qubits_exact(demands, capacities)
    raise ValueError(f"unknown packing method {method!r}")
