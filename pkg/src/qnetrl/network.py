"""Static heterogeneous network: tiered nodes, links, routes, path queries.

Topologies are immutable after construction and safe to share read-only.
Units: rates in bits/s, latencies in seconds, gate speeds in work-units/s,
powers in watts, epr_rate in pairs/s.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DanglingLinkEndpoint, DuplicateNodeId, MissingCloud, NoRoute
from .quantum import FidelityDistribution


class Tier(Enum):
    MOBILE = "mobile"
    EDGE = "edge"
    CLOUD = "cloud"


@dataclass(frozen=True)
class NodeSpec:
    id: str
    tier: Tier
    qubit_capacity: int      # physical computation qubits
    gate_speed: float        # work-units per second
    power_active: float      # W while computing
    power_tx: float          # W while transmitting


@dataclass(frozen=True)
class LinkSpec:
    id: str
    endpoints: tuple         # (node id, node id), order irrelevant for traversal
    classical_rate: float    # bits/s
    prop_latency: float      # s
    quantum_channels: int
    key_rate_per_channel: float  # secret-key bits/s per channel
    epr_rate: float          # entangled pairs/s
    fidelity_dist: FidelityDistribution

    @property
    def key_rate(self) -> float:
        """Aggregate secret-key rate of the link, bits/s."""
        return self.quantum_channels * self.key_rate_per_channel


@dataclass(frozen=True)
class NetworkTopology:
    nodes: dict              # node id -> NodeSpec
    links: dict              # link id -> LinkSpec
    routes: dict             # (src id, dst id) -> tuple of link ids
    assigned_edge: dict      # mobile id -> its statically assigned edge id

    def mobile_ids(self):
        return [n for n, spec in self.nodes.items() if spec.tier is Tier.MOBILE]

    def edge_ids(self):
        return [n for n, spec in self.nodes.items() if spec.tier is Tier.EDGE]

    def cloud_id(self):
        for n, spec in self.nodes.items():
            if spec.tier is Tier.CLOUD:
                return n
        raise MissingCloud("topology has no cloud node")


# per-tier node parameters used by build_topology
@dataclass(frozen=True)
class NodeParams:
    qubit_capacity: int = 16
    gate_speed: float = 1e5
    power_active: float = 5.0
    power_tx: float = 1.0


# per-tier-pair link parameters used by build_topology
@dataclass(frozen=True)
class LinkParams:
    classical_rate: float = 1e8
    prop_latency: float = 0.005
    quantum_channels: int = 8
    key_rate_per_channel: float = 2000.0
    epr_rate: float = 200.0
    fidelity: FidelityDistribution = field(default_factory=FidelityDistribution)


@dataclass(frozen=True)
class TopologyConfig:
    mobile: int = 10
    edge: int = 5
    cloud: int = 1
    mobile_nodes: NodeParams = field(default_factory=NodeParams)
    edge_nodes: NodeParams = field(
        default_factory=lambda: NodeParams(qubit_capacity=24, gate_speed=5e5, power_active=6.0, power_tx=2.0)
    )
    cloud_nodes: NodeParams = field(
        default_factory=lambda: NodeParams(qubit_capacity=128, gate_speed=5e6, power_active=20.0, power_tx=5.0)
    )
    mobile_edge_links: LinkParams = field(default_factory=LinkParams)
    edge_cloud_links: LinkParams = field(
        default_factory=lambda: LinkParams(
            classical_rate=1e9, prop_latency=0.020, quantum_channels=32,
            key_rate_per_channel=2000.0, epr_rate=500.0,
        )
    )


@dataclass(frozen=True)
class Violation:
    kind: str       # e.g. DanglingLinkEndpoint, BrokenRoute, NoRoute
    subject: str    # offending node / link / route
    detail: str

    def __str__(self):
        return f"{self.kind}({self.subject}): {self.detail}"


@dataclass(frozen=True)
class PathMetrics:
    latency: float            # s, sum of prop latencies
    min_classical_rate: float  # bits/s, bottleneck
    min_key_rate: float        # bits/s, bottleneck of channels * per-channel rate
    min_epr_rate: float        # pairs/s, bottleneck


def _node(node_id: str, tier: Tier, p: NodeParams) -> NodeSpec:
    return NodeSpec(
        id=node_id, tier=tier, qubit_capacity=p.qubit_capacity,
        gate_speed=p.gate_speed, power_active=p.power_active, power_tx=p.power_tx,
    )


def _link(a: str, b: str, p: LinkParams) -> LinkSpec:
    return LinkSpec(
        id=f"{a}-{b}", endpoints=(a, b), classical_rate=p.classical_rate,
        prop_latency=p.prop_latency, quantum_channels=p.quantum_channels,
        key_rate_per_channel=p.key_rate_per_channel, epr_rate=p.epr_rate,
        fidelity_dist=p.fidelity,
    )


def build_topology(config: TopologyConfig) -> NetworkTopology:
    """Instantiate the tiered topology.

    Each mobile node gets a direct link to one edge node (round-robin
    assignment); every edge links to the single cloud node. Routes from each
    mobile cover itself, every edge, and the cloud; non-assigned edges are
    reached through the assigned edge and the cloud.
    """
    if config.mobile < 1 or config.edge < 1:
        raise ValueError("need at least one mobile and one edge node")
    if config.cloud != 1:
        raise MissingCloud(f"exactly one cloud node required, config asks for {config.cloud}")

    nodes = {}
    for i in range(config.mobile):
        nodes[f"m{i}"] = _node(f"m{i}", Tier.MOBILE, config.mobile_nodes)
    for j in range(config.edge):
        nodes[f"e{j}"] = _node(f"e{j}", Tier.EDGE, config.edge_nodes)
    nodes["c0"] = _node("c0", Tier.CLOUD, config.cloud_nodes)
    if len(nodes) != config.mobile + config.edge + 1:
        raise DuplicateNodeId("generated node ids collide")

    links = {}
    assigned = {}
    for i in range(config.mobile):
        j = i % config.edge
        assigned[f"m{i}"] = f"e{j}"
        link = _link(f"m{i}", f"e{j}", config.mobile_edge_links)
        links[link.id] = link
    for j in range(config.edge):
        link = _link(f"e{j}", "c0", config.edge_cloud_links)
        links[link.id] = link

    for link in links.values():
        for end in link.endpoints:
            if end not in nodes:
                raise DanglingLinkEndpoint(f"link {link.id} references unknown node {end}")

    routes = {}
    for i in range(config.mobile):
        m = f"m{i}"
        a = assigned[m]
        up = f"{m}-{a}"          # direct mobile->edge link
        a_cloud = f"{a}-c0"
        routes[(m, m)] = ()
        routes[(m, "c0")] = (up, a_cloud)
        for j in range(config.edge):
            e = f"e{j}"
            if e == a:
                routes[(m, e)] = (up,)
            else:
                # detour through the assigned edge and the cloud
                routes[(m, e)] = (up, a_cloud, f"{e}-c0")

    return NetworkTopology(nodes=nodes, links=links, routes=routes, assigned_edge=assigned)


def _walk_route(topology: NetworkTopology, src: str, dst: str, link_ids) -> str | None:
    """Returns an error detail if the route does not chain src to dst, else None."""
    current = src
    for link_id in link_ids:
        link = topology.links.get(link_id)
        if link is None:
            return f"references unknown link {link_id}"
        a, b = link.endpoints
        if current == a:
            current = b
        elif current == b:
            current = a
        else:
            return f"link {link_id} does not touch {current}"
    if current != dst:
        return f"route ends at {current}, not {dst}"
    return None


def validate_topology(topology: NetworkTopology) -> list:
    """All invariant violations, empty when the topology is well formed."""
    violations = []

    clouds = [n for n, s in topology.nodes.items() if s.tier is Tier.CLOUD]
    if len(clouds) != 1:
        violations.append(Violation("MissingCloud", ",".join(clouds) or "<none>",
                                    f"expected exactly one cloud node, found {len(clouds)}"))

    for node_id, spec in topology.nodes.items():
        if spec.qubit_capacity < 1:
            violations.append(Violation("InvalidNode", node_id, "qubit_capacity must be >= 1"))
        if spec.gate_speed <= 0:
            violations.append(Violation("InvalidNode", node_id, "gate_speed must be > 0"))
        if spec.power_active < 0 or spec.power_tx < 0:
            violations.append(Violation("InvalidNode", node_id, "power draws must be >= 0"))

    for link_id, link in topology.links.items():
        a, b = link.endpoints
        if a == b:
            violations.append(Violation("InvalidLink", link_id, "endpoints must be distinct"))
        for end in (a, b):
            if end not in topology.nodes:
                violations.append(Violation("DanglingLinkEndpoint", link_id, f"unknown endpoint {end}"))
        if link.classical_rate <= 0:
            violations.append(Violation("InvalidLink", link_id, "classical_rate must be > 0"))
        if link.prop_latency < 0 or link.quantum_channels < 0 \
                or link.key_rate_per_channel < 0 or link.epr_rate < 0:
            violations.append(Violation("InvalidLink", link_id, "rates and latency must be >= 0"))

    for (src, dst), link_ids in topology.routes.items():
        for end in (src, dst):
            if end not in topology.nodes:
                violations.append(Violation("BrokenRoute", f"{src}->{dst}", f"unknown endpoint {end}"))
                break
        else:
            detail = _walk_route(topology, src, dst, link_ids)
            if detail is not None:
                violations.append(Violation("BrokenRoute", f"{src}->{dst}", detail))

    if len(clouds) == 1:
        cloud = clouds[0]
        for m, spec in topology.nodes.items():
            if spec.tier is not Tier.MOBILE:
                continue
            targets = [n for n, s in topology.nodes.items() if s.tier is Tier.EDGE] + [cloud]
            for dst in targets:
                if (m, dst) not in topology.routes:
                    violations.append(Violation("NoRoute", f"{m}->{dst}", "required route missing"))

    return violations


def path_metrics(topology: NetworkTopology, src: str, dst: str) -> PathMetrics:
    """Aggregate route metrics: additive latency, bottleneck rates.

    The self-route carries no transmission: zero latency, infinite rates.
    """
    if (src, dst) not in topology.routes:
        raise NoRoute(f"no route {src} -> {dst}")
    if src == dst:
        return PathMetrics(0.0, math.inf, math.inf, math.inf)
    latency = 0.0
    min_classical = math.inf
    min_key = math.inf
    min_epr = math.inf
    for link_id in topology.routes[(src, dst)]:
        link = topology.links[link_id]
        latency += link.prop_latency
        min_classical = min(min_classical, link.classical_rate)
        min_key = min(min_key, link.key_rate)
        min_epr = min(min_epr, link.epr_rate)
    return PathMetrics(latency, min_classical, min_key, min_epr)
