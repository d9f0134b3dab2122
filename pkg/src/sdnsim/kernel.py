"""Deterministic discrete-event engine.

Events are ordered by ``(fire_time, sequence)``; the sequence number is an
insertion counter so simultaneous events are delivered in the order they
were scheduled.
"""

from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


class SimulationError(Exception):
    pass


class SchedulingInPast(SimulationError):
    pass


class UnknownDestination(SimulationError):
    pass


class EventTag(enum.Enum):
    APP_SUBMIT = "APP_SUBMIT"
    VM_GRANT = "VM_GRANT"
    APP_DONE = "APP_DONE"
    JOB_SUBMIT = "JOB_SUBMIT"
    DATA_REQUEST = "DATA_REQUEST"
    TRANSMIT_PACKET = "TRANSMIT_PACKET"
    PACKET_COMPLETE = "PACKET_COMPLETE"
    PACKET_DELIVERED = "PACKET_DELIVERED"
    EXEC_TASK = "EXEC_TASK"
    VM_PROGRESS = "VM_PROGRESS"
    TASK_DONE = "TASK_DONE"
    HEARTBEAT = "HEARTBEAT"
    GENERIC = "GENERIC"


@dataclass(order=True)
class SimEvent:
    fire_time: float
    sequence: int = -1
    source: int = field(default=-1, compare=False)
    destination: int = field(default=-1, compare=False)
    tag: EventTag = field(default=EventTag.GENERIC, compare=False)
    payload: Any = field(default=None, compare=False)
    cancelled: bool = field(default=False, compare=False)


class Entity:
    """Base class for anything that receives events."""

    def __init__(self, name: str):
        self.name = name
        self.id: int = -1
        self.sim: Optional[Simulation] = None

    def send(self, destination: int, delay: float, tag: EventTag, payload=None) -> SimEvent:
        return self.sim.send(self.id, destination, delay, tag, payload)

    def handle(self, event: SimEvent) -> None:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, id={self.id})"


class Simulation:
    """Clock, event queue, entity registry and dispatch loop.

    ``seed`` initialises the single run-scoped generator (``self.rng``) that
    every stochastic policy draws from.  Observers registered with
    :meth:`add_observer` are called after each dispatched event.
    """

    def __init__(self, seed: int = 0, record_trace: bool = False):
        self.clock = 0.0
        self.rng = random.Random(seed)
        self.entities: dict[int, Entity] = {}
        self._queue: list[SimEvent] = []
        self._sequence = 0
        self._observers: list[Callable[[SimEvent], None]] = []
        self.record_trace = record_trace
        self.trace: list[tuple] = []
        self.dispatched = 0

    def register(self, entity: Entity) -> int:
        entity.id = len(self.entities)
        entity.sim = self
        self.entities[entity.id] = entity
        return entity.id

    def add_observer(self, fn: Callable[[SimEvent], None]) -> None:
        self._observers.append(fn)

    def now(self) -> float:
        return self.clock

    def schedule(self, event: SimEvent) -> SimEvent:
        if event.fire_time < self.clock:
            raise SchedulingInPast(
                f"event at t={event.fire_time} scheduled at clock {self.clock}")
        event.sequence = self._sequence
        self._sequence += 1
        heapq.heappush(self._queue, event)
        return event

    def send(self, source: int, destination: int, delay: float, tag: EventTag,
             payload=None) -> SimEvent:
        if delay < 0:
            raise SchedulingInPast(f"negative delay {delay}")
        return self.schedule(SimEvent(self.clock + delay, source=source,
                                      destination=destination, tag=tag, payload=payload))

    def cancel(self, event: Optional[SimEvent]) -> None:
        if event is not None:
            event.cancelled = True

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def run(self, until: Optional[float] = None) -> float:
        while self._queue:
            head = self._queue[0]
            if head.cancelled:
                heapq.heappop(self._queue)
                continue
            if until is not None and head.fire_time > until:
                self.clock = max(self.clock, until)
                break
            event = heapq.heappop(self._queue)
            target = self.entities.get(event.destination)
            if target is None:
                raise UnknownDestination(
                    f"event {event.tag.name} targets unregistered entity {event.destination}")
            self.clock = event.fire_time
            if self.record_trace:
                self.trace.append((event.fire_time, event.sequence, event.source,
                                   event.destination, event.tag.name))
            self.dispatched += 1
            target.handle(event)
            for fn in self._observers:
                fn(event)
        return self.clock
