"""SDN controller and flow-level data plane.

Every admitted packet gets its own channel along a routed path.  On each
admission and each completion the controller advances all in-flight
packets, drops finished ones, recomputes every channel's bandwidth with the
active traffic policy and schedules a single self-event at the earliest
finish time among the remaining packets.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .kernel import Entity, EventTag, SimEvent
from .topology import PhysicalTopology

# Residue below which a packet counts as delivered, relative to its size.
COMPLETION_EPSILON = 1e-9


class NetworkError(Exception):
    pass


class NoRoute(NetworkError):
    pass


class ZeroSize(NetworkError):
    pass


class ZeroBandwidth(NetworkError):
    pass


@dataclass(frozen=True)
class Flow:
    """Endpoints are VM names or the storage node name."""

    source: str
    destination: str
    job_id: Optional[int] = None
    src_task: Optional[str] = None
    dst_task: Optional[str] = None


@dataclass(frozen=True)
class Route:
    nodes: tuple
    links: tuple = ()

    @property
    def hops(self) -> int:
        return len(self.links)

    def __str__(self):
        return ">".join(self.nodes)


@dataclass
class Packet:
    id: int
    flow: Flow
    size_bits: float
    remaining_bits: float
    start_time: float
    finish_time: Optional[float] = None
    channel: Optional[int] = None
    route: Optional[Route] = None
    notify: Optional[int] = None
    # (start, end, bandwidth) records; the last one is open while in flight
    intervals: list = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.finish_time is not None

    @property
    def duration(self) -> float:
        return self.finish_time - self.start_time


@dataclass
class Channel:
    id: int
    route: Route
    packet: int
    bandwidth_bps: float = 0.0


@dataclass(frozen=True)
class ForwardingRule:
    node: str
    match: tuple  # (flow, packet id)
    next_hop: Optional[tuple]  # (node, link index); None at the last node


def transmission_time(size_bits: float, bandwidth_bps: float) -> float:
    """Time to push ``size_bits`` through a channel of ``bandwidth_bps``."""
    if size_bits == 0:
        return 0.0
    if not bandwidth_bps > 0:
        raise ZeroBandwidth(f"bandwidth {bandwidth_bps}")
    return size_bits / bandwidth_bps


# -- routing ----------------------------------------------------------------

def hop_distances(topology: PhysicalTopology, target: str) -> dict[str, int]:
    dist = {target: 0}
    todo = deque([target])
    while todo:
        node = todo.popleft()
        for nxt, _ in topology.neighbors(node):
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                todo.append(nxt)
    return dist


def _min_hop_steps(topology, dist, node):
    """Outgoing (next node, link) pairs of ``node`` that stay on a shortest path."""
    return [(nxt, link) for nxt, link in topology.neighbors(node)
            if dist.get(nxt, -1) == dist[node] - 1]


def _check_endpoints(topology, src, dst):
    for end in (src, dst):
        if end not in topology.nodes:
            raise NoRoute(f"unknown node {end!r}")
    dist = hop_distances(topology, dst)
    if src not in dist:
        raise NoRoute(f"{src} and {dst} are not connected")
    return dist


def count_min_hop_routes(topology: PhysicalTopology, src: str, dst: str) -> int:
    dist = _check_endpoints(topology, src, dst)
    return _route_counts(topology, dist, src)[src]


def _route_counts(topology, dist, src):
    # number of shortest routes from every node on the DAG to the target
    counts = {}
    order = sorted((n for n in dist if dist[n] <= dist[src]), key=lambda n: dist[n])
    for node in order:
        if dist[node] == 0:
            counts[node] = 1
        else:
            counts[node] = sum(counts[nxt] for nxt, _ in _min_hop_steps(topology, dist, node))
    return counts


def route_legacy(topology: PhysicalTopology, src: str, dst: str, rng) -> Route:
    """Draw one minimum-hop route uniformly at random (parallel links count as distinct routes)."""
    dist = _check_endpoints(topology, src, dst)
    counts = _route_counts(topology, dist, src)
    pick = rng.randrange(counts[src])
    nodes, links = [src], []
    node = src
    while node != dst:
        for nxt, link in _min_hop_steps(topology, dist, node):
            if pick < counts[nxt]:
                break
            pick -= counts[nxt]
        nodes.append(nxt)
        links.append(link)
        node = nxt
    return Route(tuple(nodes), tuple(links))


def available_bandwidth(topology: PhysicalTopology, link: int, link_loads) -> float:
    """Share a new channel would get on ``link``: capacity / (channels + 1)."""
    return topology.links[link].bandwidth_bps / (link_loads.get(link, 0) + 1)


def route_sdn(topology: PhysicalTopology, src: str, dst: str, link_loads=None) -> Route:
    """Minimum-hop route with the widest bottleneck of available bandwidth.

    Remaining ties go to the lexicographically smallest node sequence, then
    the lowest link index.
    """
    link_loads = link_loads or {}
    dist = _check_endpoints(topology, src, dst)
    # widest achievable bottleneck from each DAG node to dst
    best = {}
    for node in sorted((n for n in dist if dist[n] <= dist[src]), key=lambda n: dist[n]):
        if dist[node] == 0:
            best[node] = math.inf
            continue
        best[node] = max(min(available_bandwidth(topology, link, link_loads), best[nxt])
                         for nxt, link in _min_hop_steps(topology, dist, node))
    target = best[src]
    nodes, links = [src], []
    node = src
    while node != dst:
        nxt, link = min(
            (nxt, link) for nxt, link in _min_hop_steps(topology, dist, node)
            if min(available_bandwidth(topology, link, link_loads), best[nxt]) >= target)
        nodes.append(nxt)
        links.append(link)
        node = nxt
    return Route(tuple(nodes), tuple(links))


class RoutingProtocol(ABC):
    name = "abstract"

    @abstractmethod
    def route(self, topology: PhysicalTopology, src: str, dst: str, *,
              flow: Flow, link_loads: dict) -> Route:
        ...


class ShortestPathRandom(RoutingProtocol):
    """Legacy routing: a random min-hop route, chosen once and pinned.

    ``pin`` selects the pinning key: ``"endpoint"`` pins per (source,
    destination) endpoint pair, ``"task"`` per (source task, destination
    task) pair.
    """

    name = "shortest_path_random"

    def __init__(self, rng, pin: str = "endpoint"):
        if pin not in ("endpoint", "task"):
            raise ValueError(f"unknown pin granularity {pin!r}")
        self.rng = rng
        self.pin = pin
        self.table: dict[tuple, Route] = {}

    def _key(self, flow, src, dst):
        if self.pin == "task":
            return (flow.source, flow.src_task, flow.destination, flow.dst_task, src, dst)
        return (flow.source, flow.destination, src, dst)

    def route(self, topology, src, dst, *, flow, link_loads):
        key = self._key(flow, src, dst)
        if key not in self.table:
            self.table[key] = route_legacy(topology, src, dst, self.rng)
        return self.table[key]


class MinHopMaxBandwidth(RoutingProtocol):
    """SDN routing: re-evaluated for every packet against current link loads."""

    name = "min_hop_max_bandwidth"

    def route(self, topology, src, dst, *, flow, link_loads):
        return route_sdn(topology, src, dst, link_loads)


class TrafficPolicy(ABC):
    name = "abstract"

    @abstractmethod
    def allocate(self, topology: PhysicalTopology, channels) -> dict[int, float]:
        ...


class FairShare(TrafficPolicy):
    """Each link's capacity is split equally; a channel gets its tightest share."""

    name = "fair_share"

    def allocate(self, topology, channels):
        counts = link_channel_counts(channels)
        return {
            ch.id: min(topology.links[l].bandwidth_bps / counts[l] for l in ch.route.links)
            for ch in channels
        }


def link_channel_counts(channels) -> dict[int, int]:
    counts: dict[int, int] = {}
    for ch in channels:
        for link in ch.route.links:
            counts[link] = counts.get(link, 0) + 1
    return counts


# -- controller ------------------------------------------------------------

class SdnController(Entity):
    """Routes packets, installs forwarding rules and tracks their progress."""

    def __init__(self, topology: PhysicalTopology, routing: RoutingProtocol,
                 traffic: Optional[TrafficPolicy] = None, name: str = "sdn-controller"):
        super().__init__(name)
        self.topology = topology
        self.routing = routing
        self.traffic = traffic or FairShare()
        self.locations: dict[str, str] = {}
        self.packets: list[Packet] = []
        self.active: dict[int, Packet] = {}
        self.channels: dict[int, Channel] = {}
        self.tables: dict[str, dict[tuple, ForwardingRule]] = {n: {} for n in topology.nodes}
        self.last_update = 0.0
        self.reallocations = 0
        self.capacity_violations = 0
        self._next_channel = 0
        self._finish_event: Optional[SimEvent] = None

    # endpoints

    def attach(self, endpoint: str, node: str) -> None:
        """Bind a VM (or the storage endpoint) to the physical node it lives on."""
        if node not in self.topology.nodes:
            raise NoRoute(f"unknown node {node!r}")
        self.locations[endpoint] = node

    def locate(self, endpoint: str) -> str:
        try:
            return self.locations[endpoint]
        except KeyError:
            if endpoint in self.topology.nodes:
                return endpoint
            raise NoRoute(f"endpoint {endpoint!r} is not placed on any node") from None

    # events

    def handle(self, event: SimEvent) -> None:
        if event.tag is EventTag.TRANSMIT_PACKET:
            flow, size_bits, notify = event.payload
            self.transmit_packet(flow, size_bits, notify=notify)
        elif event.tag is EventTag.PACKET_COMPLETE:
            if event is self._finish_event:
                self._finish_event = None
                self._settle()
        else:
            raise ValueError(f"{self.name}: unexpected event {event.tag}")

    def now(self) -> float:
        return self.sim.now() if self.sim is not None else self.last_update

    def transmit_packet(self, flow: Flow, size_bits: float, notify: Optional[int] = None) -> int:
        if not size_bits > 0:
            raise ZeroSize(f"packet for {flow} has size {size_bits}")
        now = self.now()
        src, dst = self.locate(flow.source), self.locate(flow.destination)
        self._finish_completed(self.update_progress(now))
        packet = Packet(len(self.packets), flow, float(size_bits), float(size_bits), now,
                        notify=notify)
        self.packets.append(packet)
        if src == dst:
            # co-located endpoints: no link is traversed
            packet.route = Route((src,))
            packet.remaining_bits = 0.0
            packet.finish_time = now
            self._deliver([packet])
            return packet.id
        route = self.routing.route(self.topology, src, dst, flow=flow,
                                   link_loads=link_channel_counts(self.channels.values()))
        packet.route = route
        self._install_rules(packet)
        channel = Channel(self._next_channel, route, packet.id)
        self._next_channel += 1
        packet.channel = channel.id
        self.channels[channel.id] = channel
        self.active[packet.id] = packet
        self.reallocate_bandwidth()
        self._schedule_finish()
        return packet.id

    def transmit_instant(self, flow: Flow, notify: Optional[int] = None) -> int:
        """Record an empty transfer; it is delivered immediately."""
        now = self.now()
        packet = Packet(len(self.packets), flow, 0.0, 0.0, now, finish_time=now, notify=notify)
        packet.route = Route((self.locate(flow.source),))
        self.packets.append(packet)
        self._deliver([packet])
        return packet.id

    def _settle(self) -> None:
        self._finish_completed(self.update_progress(self.now()))
        self._schedule_finish()

    def _finish_completed(self, completed) -> None:
        if completed:
            self.reallocate_bandwidth()
            self._deliver([self.packets[pid] for pid in completed])

    def _deliver(self, packets) -> None:
        if self.sim is None:
            return
        for packet in packets:
            if packet.notify is not None:
                self.send(packet.notify, 0.0, EventTag.PACKET_DELIVERED, packet)

    # data plane

    def update_progress(self, at: float) -> list[int]:
        """Advance in-flight packets to ``at``; return ids of the packets that completed."""
        previous = self.last_update
        dt = at - previous
        if dt < 0:
            raise ValueError(f"progress update at {at} precedes last update {previous}")
        self.last_update = at
        if dt == 0:
            return []
        completed = []
        for pid, packet in list(self.active.items()):
            bw = self.channels[packet.channel].bandwidth_bps
            remaining = packet.remaining_bits - bw * dt
            eta = previous + packet.remaining_bits / bw if bw > 0 else math.inf
            if remaining <= COMPLETION_EPSILON * packet.size_bits or eta <= at:
                packet.remaining_bits = 0.0
                packet.finish_time = at
                completed.append(pid)
            else:
                packet.remaining_bits = remaining
        for pid in completed:
            self._retire(self.active.pop(pid))
        return completed

    def _retire(self, packet: Packet) -> None:
        start, _, bw = packet.intervals[-1]
        packet.intervals[-1] = (start, packet.finish_time, bw)
        del self.channels[packet.channel]
        for node in packet.route.nodes:
            del self.tables[node][(packet.flow, packet.id)]

    def _install_rules(self, packet: Packet) -> None:
        nodes, links = packet.route.nodes, packet.route.links
        match = (packet.flow, packet.id)
        for i, node in enumerate(nodes):
            hop = (nodes[i + 1], links[i]) if i < len(links) else None
            self.tables[node][match] = ForwardingRule(node, match, hop)

    def reallocate_bandwidth(self) -> dict[int, float]:
        channels = list(self.channels.values())
        allocation = self.traffic.allocate(self.topology, channels)
        now = self.last_update
        for ch in channels:
            bw = allocation[ch.id]
            ch.bandwidth_bps = bw
            packet = self.packets[ch.packet]
            if packet.intervals and packet.intervals[-1][2] == bw:
                continue
            if packet.intervals:
                start, _, old = packet.intervals[-1]
                if start == now:
                    packet.intervals.pop()
                else:
                    packet.intervals[-1] = (start, now, old)
            packet.intervals.append((now, None, bw))
        self.reallocations += 1
        if not self._capacity_ok():
            self.capacity_violations += 1
        return allocation

    def _capacity_ok(self) -> bool:
        load: dict[int, float] = {}
        for ch in self.channels.values():
            for link in ch.route.links:
                load[link] = load.get(link, 0.0) + ch.bandwidth_bps
        return all(total <= self.topology.links[l].bandwidth_bps * (1 + 1e-12)
                   for l, total in load.items())

    def earliest_finish_time(self) -> Optional[float]:
        if not self.active:
            return None
        return self.last_update + min(
            p.remaining_bits / self.channels[p.channel].bandwidth_bps
            for p in self.active.values())

    def _schedule_finish(self) -> None:
        if self.sim is None:
            return
        self.sim.cancel(self._finish_event)
        self._finish_event = None
        eft = self.earliest_finish_time()
        if eft is not None:
            self._finish_event = self.send(self.id, eft - self.now(), EventTag.PACKET_COMPLETE)

    # views used by the energy meter and reports

    def link_loads(self) -> dict[int, int]:
        return link_channel_counts(self.channels.values())

    def busy_nodes(self) -> set[str]:
        return {n for ch in self.channels.values() for n in ch.route.nodes}
