"""Host and switch power models and a piecewise-constant energy ledger.

Hosts draw ``p_idle + (p_max - p_idle) * u`` while active; switches draw
``p_static + n * p_per_port`` with ``n`` active ports.  With idle mode on,
a node with no activity at all draws nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import EventTag


class EnergyError(Exception):
    pass


class UtilizationOutOfRange(EnergyError):
    pass


class GapInLedger(EnergyError):
    pass


@dataclass(frozen=True)
class PowerModel:
    host_idle_w: float = 100.0
    host_max_w: float = 250.0
    switch_static_w: float = 50.0
    switch_port_w: float = 5.0
    switch_idle_w: float = 50.0
    idle_mode: bool = True

    def __post_init__(self):
        values = (self.host_idle_w, self.host_max_w, self.switch_static_w,
                  self.switch_port_w, self.switch_idle_w)
        if any(v < 0 for v in values):
            raise ValueError("power constants must be non-negative")
        if self.host_idle_w > self.host_max_w:
            raise ValueError("host idle power exceeds peak power")


def host_power(utilization: float, model: PowerModel, active=None) -> float:
    """Host draw at CPU ``utilization``.

    ``active`` marks activity other than computation (an open network
    channel); it defaults to ``utilization > 0``.
    """
    if not 0.0 <= utilization <= 1.0:
        raise UtilizationOutOfRange(f"utilization {utilization}")
    if active is None:
        active = utilization > 0
    if utilization == 0 and not active:
        return 0.0 if model.idle_mode else model.host_idle_w
    return model.host_idle_w + (model.host_max_w - model.host_idle_w) * utilization


def switch_power(active_ports: int, model: PowerModel) -> float:
    if active_ports < 0:
        raise ValueError(f"negative port count {active_ports}")
    if active_ports == 0:
        return 0.0 if model.idle_mode else model.switch_idle_w
    return model.switch_static_w + active_ports * model.switch_port_w


@dataclass
class EnergyLedger:
    """Per-node ``(start, end, power_w, busy)`` intervals."""

    kinds: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)

    def add(self, node: str, kind: str, start: float, end: float, power_w: float,
            busy: bool = True) -> None:
        self.kinds.setdefault(node, kind)
        self.intervals.setdefault(node, []).append((start, end, power_w, busy))


@dataclass
class NodeEnergy:
    node: str
    kind: str
    joules: float
    busy_s: float
    idle_s: float


def total_energy(ledger: EnergyLedger, run_end=None):
    """Integrate every node's intervals.

    Returns ``(rows, totals)`` where ``totals`` maps node kind to joules plus
    ``"datacenter"`` for hosts and switches together (storage is reported
    but left out of that figure).
    """
    rows = []
    totals = {"host": 0.0, "switch": 0.0, "storage": 0.0, "datacenter": 0.0}
    for node in ledger.intervals:
        intervals = ledger.intervals[node]
        clock = 0.0
        joules = busy = idle = 0.0
        for start, end, power, is_busy in intervals:
            if start != clock or end < start:
                raise GapInLedger(f"{node}: interval [{start}, {end}] does not follow {clock}")
            joules += power * (end - start)
            if is_busy:
                busy += end - start
            else:
                idle += end - start
            clock = end
        if run_end is not None and clock != run_end:
            raise GapInLedger(f"{node}: ledger ends at {clock}, run ends at {run_end}")
        kind = ledger.kinds[node]
        rows.append(NodeEnergy(node, kind, joules, busy, idle))
        totals[kind] = totals.get(kind, 0.0) + joules
        if kind in ("host", "switch"):
            totals["datacenter"] += joules
    return rows, totals


class EnergyMeter:
    """Samples node power after every dispatched event.

    State only changes inside event handlers, so sampling at every event
    boundary integrates the piecewise-constant power exactly.
    """

    def __init__(self, topology, controller, node_managers, model: PowerModel):
        self.topology = topology
        self.controller = controller
        self.node_managers = node_managers
        self.model = model
        self.ledger = EnergyLedger()
        self._open: dict[str, tuple] = {}
        self._start(0.0)

    def _state(self):
        loads = self.controller.link_loads()
        ports: dict[str, int] = {}
        for link in loads:
            spec = self.topology.links[link]
            ports[spec.a] = ports.get(spec.a, 0) + 1
            ports[spec.b] = ports.get(spec.b, 0) + 1
        states = {}
        for sw in self.topology.switches:
            n = ports.get(sw.name, 0)
            states[sw.name] = ("switch", switch_power(n, self.model), n > 0)
        for host in self.topology.hosts:
            nm = self.node_managers.get(host.name)
            u = nm.utilization() if nm is not None else 0.0
            busy = u > 0 or ports.get(host.name, 0) > 0 or (nm is not None and nm.running_tasks() > 0)
            states[host.name] = ("host", host_power(u, self.model, busy), busy)
        for san in self.topology.storage:
            busy = ports.get(san.name, 0) > 0
            states[san.name] = ("storage", host_power(0.0, self.model, busy), busy)
        return states

    def _start(self, now):
        for node, (kind, power, busy) in self._state().items():
            self._open[node] = (kind, now, power, busy)

    def sample(self, now: float) -> None:
        for node, (kind, power, busy) in self._state().items():
            _, start, old_power, old_busy = self._open[node]
            if power != old_power or busy != old_busy:
                if now > start:
                    self.ledger.add(node, kind, start, now, old_power, old_busy)
                    self._open[node] = (kind, now, power, busy)
                else:
                    self._open[node] = (kind, start, power, busy)

    def observe(self, event) -> None:
        # heartbeats never change task sets or channels
        if event.tag is EventTag.HEARTBEAT:
            return
        self.sample(event.fire_time)

    def close(self, run_end: float) -> EnergyLedger:
        for node, (kind, start, power, busy) in self._open.items():
            if run_end > start:
                self.ledger.add(node, kind, start, run_end, power, busy)
        self._open.clear()
        return self.ledger
