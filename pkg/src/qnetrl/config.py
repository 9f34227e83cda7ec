"""Run configuration: TOML loading, strict-key merging, validation, hashing.

Every key is optional; defaults reproduce the 10 mobile / 5 edge / 1 cloud
reference setup. Unknown keys and wrong types are ParseError; out-of-range
values are collected and raised together as one ValidationError.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .network import LinkParams, NodeParams, TopologyConfig
from .quantum import ROUND_CAP_DEFAULT, FidelityDistribution
from .tasks import QosWeights, TaskConfig


@dataclass(frozen=True)
class EnvConfig:
    episode_length: int = 200
    arrival_prob: float = 0.6    # Bernoulli per mobile node per step
    penalty: float = 1.5         # cost multiplier on infeasible-action fallback
    fidelity_target: float = 0.95
    dt: float = 1.0              # s per step, budget replenishment interval


@dataclass(frozen=True)
class QuantumConfig:
    round_cap: int = ROUND_CAP_DEFAULT
    packing: str = "ffd"         # qubit packing heuristic: ffd | exhaustive


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 400
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    gamma: float = 0.95
    batch_size: int = 64
    buffer_capacity: int = 100_000
    tau: float = 0.01
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.97  # per episode
    noise_start: float = 0.2     # fraction-head Gaussian noise std
    noise_min: float = 0.02
    noise_decay: float = 0.97
    hidden: tuple = (64, 64)
    grad_clip: float = 10.0
    update_every: int = 1        # steps between gradient updates
    warmup: int = 64             # min buffer size before updates
    eval_every: int = 10         # episodes between in-training evaluations
    eval_episodes: int = 3       # episodes per in-training evaluation


@dataclass(frozen=True)
class OutputConfig:
    metrics: str = ""            # default --out, empty = require CLI flag
    checkpoint: str = ""


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    quantum: QuantumConfig = field(default_factory=QuantumConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    qos: QosWeights = field(default_factory=lambda: QosWeights(d=1.0, e=0.0))
    training: TrainConfig = field(default_factory=TrainConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _default_tree() -> dict:
    return dataclasses.asdict(RunConfig())


def _merge(defaults: dict, user: dict, path: str, out: dict):
    for key, value in user.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ParseError(f"unknown key {here!r}")
        base = defaults[key]
        if isinstance(base, dict):
            if not isinstance(value, dict):
                raise ParseError(f"key {here!r} must be a table")
            _merge(base, value, here, out[key])
        elif isinstance(base, bool):
            if not isinstance(value, bool):
                raise ParseError(f"key {here!r} must be a boolean")
            out[key] = value
        elif isinstance(base, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(f"key {here!r} must be an integer")
            out[key] = value
        elif isinstance(base, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParseError(f"key {here!r} must be a number")
            out[key] = float(value)
        elif isinstance(base, str):
            if not isinstance(value, str):
                raise ParseError(f"key {here!r} must be a string")
            out[key] = value
        elif isinstance(base, (list, tuple)):
            if not isinstance(value, list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in value
            ):
                raise ParseError(f"key {here!r} must be a list of integers")
            out[key] = list(value)
        else:  # pragma: no cover - schema only holds the above kinds
            raise ParseError(f"key {here!r} has unsupported schema type")


def _collect_violations(tree: dict) -> list:
    v = []

    def check(cond: bool, fld: str, constraint: str):
        if not cond:
            v.append((fld, constraint))

    topo = tree["topology"]
    check(topo["mobile"] >= 1, "topology.mobile", ">= 1")
    check(topo["edge"] >= 1, "topology.edge", ">= 1")
    check(topo["cloud"] == 1, "topology.cloud", "== 1 (exactly one cloud node)")
    for tier in ("mobile_nodes", "edge_nodes", "cloud_nodes"):
        nd = topo[tier]
        check(nd["qubit_capacity"] >= 1, f"topology.{tier}.qubit_capacity", ">= 1")
        check(nd["gate_speed"] > 0, f"topology.{tier}.gate_speed", "> 0")
        check(nd["power_active"] >= 0, f"topology.{tier}.power_active", ">= 0")
        check(nd["power_tx"] >= 0, f"topology.{tier}.power_tx", ">= 0")
    for pair in ("mobile_edge_links", "edge_cloud_links"):
        lk = topo[pair]
        check(lk["classical_rate"] > 0, f"topology.{pair}.classical_rate", "> 0")
        check(lk["prop_latency"] >= 0, f"topology.{pair}.prop_latency", ">= 0")
        check(lk["quantum_channels"] >= 0, f"topology.{pair}.quantum_channels", ">= 0")
        check(lk["key_rate_per_channel"] >= 0, f"topology.{pair}.key_rate_per_channel", ">= 0")
        check(lk["epr_rate"] >= 0, f"topology.{pair}.epr_rate", ">= 0")
        fid = lk["fidelity"]
        check(0 <= fid["lo"] <= fid["mean"] <= fid["hi"] <= 1,
              f"topology.{pair}.fidelity", "0 <= lo <= mean <= hi <= 1")
        check(fid["std"] >= 0, f"topology.{pair}.fidelity.std", ">= 0")

    q = tree["quantum"]
    check(q["round_cap"] >= 1, "quantum.round_cap", ">= 1")
    check(q["packing"] in ("ffd", "exhaustive"), "quantum.packing", "one of: ffd, exhaustive")

    t = tree["tasks"]
    check(6 <= t["n_min"] <= t["n_max"] <= 9, "tasks.n_min/n_max", "6 <= n_min <= n_max <= 9")
    check(3 <= t["k_min"] <= t["k_max"] <= 5, "tasks.k_min/k_max", "3 <= k_min <= k_max <= 5")
    check(0 < t["work_min"] <= t["work_max"], "tasks.work_min/work_max", "0 < work_min <= work_max")
    check(0 <= t["payload_min"] <= t["payload_max"], "tasks.payload_min/payload_max",
          "0 <= payload_min <= payload_max")
    check(t["key_ratio"] >= 0, "tasks.key_ratio", ">= 0")

    # the largest task must fit on a mobile node or local execution can fail
    max_demand = 2 * t["n_max"] - t["k_min"] + 1
    check(topo["mobile_nodes"]["qubit_capacity"] >= max_demand,
          "topology.mobile_nodes.qubit_capacity",
          f">= largest task demand 2*n_max - k_min + 1 = {max_demand}")

    e = tree["env"]
    check(e["episode_length"] >= 1, "env.episode_length", ">= 1")
    check(0 <= e["arrival_prob"] <= 1, "env.arrival_prob", "in [0, 1]")
    check(e["penalty"] >= 1, "env.penalty", ">= 1")
    check(0.5 < e["fidelity_target"] < 1, "env.fidelity_target", "in (0.5, 1)")
    check(e["dt"] > 0, "env.dt", "> 0")

    qos = tree["qos"]
    check(qos["d"] >= 0, "qos.d", ">= 0")
    check(qos["e"] >= 0, "qos.e", ">= 0")
    if qos["d"] >= 0 and qos["e"] >= 0:
        check(qos["d"] + qos["e"] > 0, "qos.d/qos.e", "d + e > 0")

    tr = tree["training"]
    check(tr["episodes"] >= 0, "training.episodes", ">= 0")
    check(tr["actor_lr"] > 0, "training.actor_lr", "> 0")
    check(tr["critic_lr"] > 0, "training.critic_lr", "> 0")
    check(0 <= tr["gamma"] < 1, "training.gamma", "in [0, 1)")
    check(tr["batch_size"] >= 1, "training.batch_size", ">= 1")
    check(tr["buffer_capacity"] >= tr["batch_size"], "training.buffer_capacity", ">= batch_size")
    check(0 < tr["tau"] <= 1, "training.tau", "in (0, 1]")
    check(0 <= tr["epsilon_min"] <= tr["epsilon_start"] <= 1,
          "training.epsilon_min/epsilon_start", "0 <= min <= start <= 1")
    check(0 < tr["epsilon_decay"] <= 1, "training.epsilon_decay", "in (0, 1]")
    check(0 <= tr["noise_min"] <= tr["noise_start"], "training.noise_min/noise_start",
          "0 <= min <= start")
    check(0 < tr["noise_decay"] <= 1, "training.noise_decay", "in (0, 1]")
    check(len(tr["hidden"]) >= 1 and all(h >= 1 for h in tr["hidden"]),
          "training.hidden", "non-empty list of sizes >= 1")
    check(tr["grad_clip"] > 0, "training.grad_clip", "> 0")
    check(tr["update_every"] >= 1, "training.update_every", ">= 1")
    check(tr["warmup"] >= tr["batch_size"], "training.warmup", ">= batch_size")
    check(tr["eval_every"] >= 1, "training.eval_every", ">= 1")
    check(tr["eval_episodes"] >= 1, "training.eval_episodes", ">= 1")

    check(tree["seed"] >= 0, "seed", ">= 0")
    return v


def _build(tree: dict) -> RunConfig:
    def fid(d):
        return FidelityDistribution(mean=d["mean"], std=d["std"], lo=d["lo"], hi=d["hi"])

    def nodep(d):
        return NodeParams(**d)

    def linkp(d):
        d = dict(d)
        d["fidelity"] = fid(d["fidelity"])
        return LinkParams(**d)

    topo = tree["topology"]
    return RunConfig(
        seed=tree["seed"],
        topology=TopologyConfig(
            mobile=topo["mobile"], edge=topo["edge"], cloud=topo["cloud"],
            mobile_nodes=nodep(topo["mobile_nodes"]),
            edge_nodes=nodep(topo["edge_nodes"]),
            cloud_nodes=nodep(topo["cloud_nodes"]),
            mobile_edge_links=linkp(topo["mobile_edge_links"]),
            edge_cloud_links=linkp(topo["edge_cloud_links"]),
        ),
        quantum=QuantumConfig(**tree["quantum"]),
        tasks=TaskConfig(**tree["tasks"]),
        env=EnvConfig(**tree["env"]),
        qos=QosWeights(d=tree["qos"]["d"], e=tree["qos"]["e"]),
        training=TrainConfig(**{**tree["training"], "hidden": tuple(tree["training"]["hidden"])}),
        output=OutputConfig(**tree["output"]),
    )


def loads_config(text: str) -> RunConfig:
    """Parse and validate a TOML config string."""
    try:
        user = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}") from exc
    tree = _default_tree()
    _merge(_default_tree(), user, "", tree)
    violations = _collect_violations(tree)
    if violations:
        raise ValidationError(violations)
    return _build(tree)


def load_config(path: str) -> RunConfig:
    """Read, parse and validate a TOML config file."""
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text)


def config_hash(config: RunConfig) -> str:
    """16-hex digest over every resolved config field (seed included)."""
    tree = dataclasses.asdict(config)
    canon = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
