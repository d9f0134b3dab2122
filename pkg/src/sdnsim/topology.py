"""Physical data-center graph: hosts, switches, storage and links.

Topology files are JSON documents with four top-level arrays::

    {"hosts":    [{"name", "pes", "mips_per_pe", "ram_mb"}],
     "switches": [{"name", "tier"}],
     "storage":  [{"name", "pes", "mips_per_pe", "ram_mb"}],
     "links":    [{"a", "b", "bandwidth_bps"}]}

Unknown or missing fields are rejected.  Bandwidth is always bits/second.
Parallel links between the same pair of nodes are distinct links.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Union

TIERS = ("core", "aggregation", "edge")


class TopologyError(Exception):
    pass


class SchemaError(TopologyError):
    pass


class DanglingLink(TopologyError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class NonPositiveBandwidth(TopologyError):
    pass


class UnattachedNode(TopologyError):
    pass


class ShapeError(TopologyError):
    pass


@dataclass(frozen=True)
class HostSpec:
    name: str
    pes: int
    mips_per_pe: float
    ram_mb: int

    @property
    def total_mips(self) -> float:
        return self.pes * self.mips_per_pe


@dataclass(frozen=True)
class StorageSpec:
    name: str
    pes: int
    mips_per_pe: float
    ram_mb: int

    @property
    def total_mips(self) -> float:
        return self.pes * self.mips_per_pe


@dataclass(frozen=True)
class SwitchSpec:
    name: str
    tier: str


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    bandwidth_bps: float

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a


NodeSpec = Union[HostSpec, SwitchSpec, StorageSpec]


class PhysicalTopology:
    """Immutable graph.  Links are addressed by their index in ``links``."""

    def __init__(self, hosts=(), switches=(), storage=(), links=()):
        self.hosts = tuple(hosts)
        self.switches = tuple(switches)
        self.storage = tuple(storage)
        self.links = tuple(links)
        self.nodes: dict[str, NodeSpec] = {}
        for spec in (*self.hosts, *self.switches, *self.storage):
            self.nodes.setdefault(spec.name, spec)
        adjacency: dict[str, list[tuple[str, int]]] = {name: [] for name in self.nodes}
        for index, link in enumerate(self.links):
            if link.a in adjacency and link.b in adjacency and link.a != link.b:
                adjacency[link.a].append((link.b, index))
                adjacency[link.b].append((link.a, index))
        self.adjacency = {n: tuple(sorted(v)) for n, v in adjacency.items()}

    def kind(self, name: str) -> str:
        spec = self.nodes[name]
        if isinstance(spec, HostSpec):
            return "host"
        if isinstance(spec, StorageSpec):
            return "storage"
        return "switch"

    def neighbors(self, name: str):
        return self.adjacency[name]

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(self.nodes))
        seen = {start}
        todo = deque([start])
        while todo:
            node = todo.popleft()
            for nxt, _ in self.adjacency[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return len(seen) == len(self.nodes)

    def _key(self):
        return (self.hosts, self.switches, self.storage, self.links)

    def __eq__(self, other):
        return isinstance(other, PhysicalTopology) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return (f"PhysicalTopology(hosts={len(self.hosts)}, switches={len(self.switches)}, "
                f"storage={len(self.storage)}, links={len(self.links)})")


def validate(topology: PhysicalTopology) -> list[TopologyError]:
    """Return every invariant violation; an empty list means the topology is valid."""
    problems: list[TopologyError] = []
    seen = set()
    for spec in (*topology.hosts, *topology.switches, *topology.storage):
        if spec.name in seen:
            problems.append(SchemaError(f"duplicate node name {spec.name!r}"))
        seen.add(spec.name)
        if isinstance(spec, SwitchSpec):
            if spec.tier not in TIERS:
                problems.append(SchemaError(f"switch {spec.name!r}: unknown tier {spec.tier!r}"))
        elif spec.pes < 1 or spec.mips_per_pe <= 0 or spec.ram_mb < 1:
            problems.append(SchemaError(f"node {spec.name!r}: resources must be positive"))
    for link in topology.links:
        for end in (link.a, link.b):
            if end not in topology.nodes:
                problems.append(DanglingLink(f"link {link.a}-{link.b}: unknown node {end!r}"))
        if link.a == link.b:
            problems.append(SchemaError(f"link {link.a}-{link.b}: endpoints must differ"))
        if not link.bandwidth_bps > 0:
            problems.append(NonPositiveBandwidth(
                f"link {link.a}-{link.b}: bandwidth {link.bandwidth_bps}"))
    for spec in (*topology.hosts, *topology.storage):
        if not any(isinstance(topology.nodes[n], SwitchSpec)
                   for n, _ in topology.adjacency.get(spec.name, ())):
            problems.append(UnattachedNode(f"{spec.name!r} is not attached to any switch"))
    if not topology.is_connected():
        problems.append(DisconnectedGraph("topology graph is not connected"))
    return problems


_HOST_FIELDS = {"name", "pes", "mips_per_pe", "ram_mb"}
_FIELDS = {
    "hosts": _HOST_FIELDS,
    "storage": _HOST_FIELDS,
    "switches": {"name", "tier"},
    "links": {"a", "b", "bandwidth_bps"},
}


def _check_fields(section: str, record) -> None:
    if not isinstance(record, dict):
        raise SchemaError(f"{section}: expected an object, got {record!r}")
    expected = _FIELDS[section]
    missing = expected - record.keys()
    extra = record.keys() - expected
    if missing or extra:
        raise SchemaError(f"{section} entry {record.get('name', record)!r}: "
                          f"missing {sorted(missing)}, unexpected {sorted(extra)}")


def _number(value, section, what, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{section}: {what} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise SchemaError(f"{section}: {what} must be an integer, got {value!r}")
    return int(value) if integer else float(value)


def from_dict(document: dict) -> PhysicalTopology:
    """Build a topology from the parsed document without running validation."""
    if not isinstance(document, dict):
        raise SchemaError("topology document must be an object")
    extra = document.keys() - _FIELDS.keys()
    if extra:
        raise SchemaError(f"unexpected top-level keys {sorted(extra)}")
    sections = {}
    for section in _FIELDS:
        records = document.get(section, [])
        if not isinstance(records, list):
            raise SchemaError(f"{section} must be an array")
        for record in records:
            _check_fields(section, record)
        sections[section] = records

    def machine(cls, section, r):
        return cls(str(r["name"]), _number(r["pes"], section, "pes", True),
                   _number(r["mips_per_pe"], section, "mips_per_pe"),
                   _number(r["ram_mb"], section, "ram_mb", True))

    return PhysicalTopology(
        hosts=[machine(HostSpec, "hosts", r) for r in sections["hosts"]],
        switches=[SwitchSpec(str(r["name"]), str(r["tier"])) for r in sections["switches"]],
        storage=[machine(StorageSpec, "storage", r) for r in sections["storage"]],
        links=[LinkSpec(str(r["a"]), str(r["b"]),
                        _number(r["bandwidth_bps"], "links", "bandwidth_bps"))
               for r in sections["links"]],
    )


def parse_topology(document: Union[str, dict]) -> PhysicalTopology:
    """Parse and validate a topology document (JSON text or an already-decoded dict).

    Raises the first violation found by :func:`validate`.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    topology = from_dict(document)
    problems = validate(topology)
    if problems:
        raise problems[0]
    return topology


def load_topology(path) -> PhysicalTopology:
    with open(path, encoding="utf-8") as fh:
        return parse_topology(fh.read())


def to_dict(topology: PhysicalTopology) -> dict:
    def machine(s):
        return {"name": s.name, "pes": s.pes, "mips_per_pe": s.mips_per_pe, "ram_mb": s.ram_mb}

    return {
        "hosts": [machine(h) for h in topology.hosts],
        "switches": [{"name": s.name, "tier": s.tier} for s in topology.switches],
        "storage": [machine(s) for s in topology.storage],
        "links": [{"a": l.a, "b": l.b, "bandwidth_bps": l.bandwidth_bps}
                  for l in topology.links],
    }


def serialize(topology: PhysicalTopology) -> str:
    return json.dumps(to_dict(topology), indent=2) + "\n"


def build_three_tier(cores: int, aggs: int, edges: int, hosts: int,
                     core_agg_bps: float, agg_edge_bps: float, edge_host_bps: float,
                     san_core_bps: float, *, core_agg_links: int = 2,
                     host_spec: tuple = (8, 10000.0, 30720),
                     storage_spec: tuple = (8, 10000.0, 30720)) -> PhysicalTopology:
    """Generate the three-tier fabric used by the bundled use-case.

    Wiring:

    * the storage node hangs off ``core1`` by a single link;
    * cores form pairs; aggregation switch ``i`` (1-based) is wired to every
      core of pair ``(i - 1) % npairs``, with ``core_agg_links`` parallel
      links per core/aggregation pair (odd aggs to the first pair, even
      aggs to the second when there are four cores);
    * aggregation switches are grouped two per pod; every aggregation switch
      of a pod links once to every edge switch of that pod;
    * hosts are split evenly and contiguously across edge switches.

    With ``(4, 8, 8, 16)`` this gives 37 nodes and 65 links.
    """
    if min(cores, aggs, edges, hosts) < 1:
        raise ShapeError("all tier sizes must be positive")
    if hosts % edges:
        raise ShapeError(f"{hosts} hosts cannot be split evenly over {edges} edge switches")
    if edges % aggs:
        raise ShapeError(f"{edges} edge switches cannot be split evenly over {aggs} aggregation switches")
    if cores > 1 and cores % 2:
        raise ShapeError(f"{cores} core switches cannot be paired")
    if aggs < max(1, cores // 2):
        raise ShapeError(f"{aggs} aggregation switches leave some core pair unconnected")
    pod_aggs = min(2, aggs)
    if aggs % pod_aggs:
        raise ShapeError(f"{aggs} aggregation switches cannot be grouped in pairs")

    pod_edges = pod_aggs * (edges // aggs)
    hosts_per_edge = hosts // edges
    width = len(str(hosts))

    core_names = [f"core{i + 1}" for i in range(cores)]
    agg_names = [f"agg{i + 1}" for i in range(aggs)]
    edge_names = [f"edge{i + 1}" for i in range(edges)]
    host_names = [f"host{i + 1:0{width}d}" for i in range(hosts)]

    switches = ([SwitchSpec(n, "core") for n in core_names]
                + [SwitchSpec(n, "aggregation") for n in agg_names]
                + [SwitchSpec(n, "edge") for n in edge_names])
    host_specs = [HostSpec(n, *host_spec) for n in host_names]
    san = StorageSpec("san", *storage_spec)

    links = [LinkSpec(san.name, core_names[0], san_core_bps)]
    pairs = [core_names[i:i + 2] for i in range(0, cores, 2)]
    for i, agg in enumerate(agg_names):
        for core in pairs[i % len(pairs)]:
            links.extend(LinkSpec(core, agg, core_agg_bps) for _ in range(core_agg_links))
    for pod in range(aggs // pod_aggs):
        for agg in agg_names[pod * pod_aggs:(pod + 1) * pod_aggs]:
            for edge in edge_names[pod * pod_edges:(pod + 1) * pod_edges]:
                links.append(LinkSpec(agg, edge, agg_edge_bps))
    for e, edge in enumerate(edge_names):
        for host in host_names[e * hosts_per_edge:(e + 1) * hosts_per_edge]:
            links.append(LinkSpec(edge, host, edge_host_bps))

    return PhysicalTopology(hosts=host_specs, switches=switches, storage=[san], links=links)


def usecase_topology() -> PhysicalTopology:
    """The 4-core / 8-aggregation / 8-edge / 16-host fabric with 1 Gbps links and a 4 Gbps storage uplink."""
    return build_three_tier(4, 8, 8, 16, 1e9, 1e9, 1e9, 4e9)
