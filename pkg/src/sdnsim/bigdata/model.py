"""Jobs, tasks, VMs and the per-job sizing and timing formulas."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional


class BigDataError(Exception):
    pass


class ConfigError(BigDataError):
    pass


class ZeroMappers(BigDataError):
    pass


class IncompleteLegs(BigDataError):
    pass


class TaskNotDone(BigDataError):
    pass


class InsufficientCapacity(BigDataError):
    pass


class TaskKind(enum.Enum):
    MAP = "map"
    REDUCE = "reduce"


class TaskState(enum.Enum):
    PENDING = "pending"
    AWAITING_DATA = "awaiting_data"
    EXECUTING = "executing"
    TRANSMITTING_OUTPUT = "transmitting_output"
    DONE = "done"


_NEXT_STATE = {
    TaskState.PENDING: TaskState.AWAITING_DATA,
    TaskState.AWAITING_DATA: TaskState.EXECUTING,
    TaskState.EXECUTING: TaskState.TRANSMITTING_OUTPUT,
    TaskState.TRANSMITTING_OUTPUT: TaskState.DONE,
}


@dataclass(frozen=True)
class VmSpec:
    pes: int = 4
    mips_per_pe: float = 1250.0
    ram_mb: int = 8192
    scheduler: str = "time_shared"

    @property
    def total_mips(self) -> float:
        return self.pes * self.mips_per_pe


@dataclass
class Job:
    id: int
    user_id: int
    job_type: str
    submit_time: float
    map_mi_total: float
    reduce_mi_total: float
    storage_to_map_bits: float
    map_to_reduce_bits: float
    reduce_to_storage_bits: float
    num_mappers: int
    num_reducers: int
    reduce_factor: Optional[float] = None

    def __post_init__(self):
        if self.num_mappers < 1:
            raise ConfigError(f"job {self.id}: needs at least one mapper")
        if self.num_reducers < 1:
            raise ConfigError(f"job {self.id}: needs at least one reducer")
        sizes = (self.map_mi_total, self.reduce_mi_total, self.storage_to_map_bits,
                 self.map_to_reduce_bits, self.reduce_to_storage_bits)
        if any(s < 0 for s in sizes):
            raise ConfigError(f"job {self.id}: sizes must be non-negative")
        if self.reduce_factor is None:
            self.reduce_factor = (self.map_to_reduce_bits / self.storage_to_map_bits
                                  if self.storage_to_map_bits else 0.0)
        elif self.reduce_factor < 0:
            raise ConfigError(f"job {self.id}: reduce factor must be non-negative")


@dataclass
class BigDataTask:
    id: str
    job_id: int
    app_id: int
    kind: TaskKind
    length_mi: float
    input_bits: float
    output_bits: float
    index: int = 0
    vm: Optional[int] = None
    state: TaskState = TaskState.PENDING
    exec_start: Optional[float] = None
    exec_end: Optional[float] = None
    inputs_expected: int = 1
    inputs_received: int = 0
    last_input_at: Optional[float] = None

    def advance(self, to: TaskState) -> None:
        if _NEXT_STATE.get(self.state) is not to:
            raise BigDataError(f"task {self.id}: illegal transition {self.state.name} -> {to.name}")
        self.state = to

    @property
    def exec_time(self) -> float:
        if self.exec_start is None or self.exec_end is None:
            raise TaskNotDone(f"task {self.id} has not finished executing")
        return self.exec_end - self.exec_start


@dataclass
class JobMetrics:
    job_id: int
    s_tr: float
    mp_tr: float
    rd_tr: float
    j_tr: float
    j_mp: float
    j_rd: float
    j_ct: float
    submit_time: float
    start_time: float
    finish_time: float

    @property
    def queuing_delay(self) -> float:
        return self.start_time - self.submit_time


def mapper_size(jl: float, nm: int) -> float:
    """Share of a job quantity handed to each of ``nm`` mappers."""
    if nm < 1:
        raise ZeroMappers(f"mapper count {nm}")
    return jl / nm


def reducer_size(ms: float, f: float) -> float:
    return ms * f


def job_transmission_time(s_tr, mp_tr, rd_tr) -> float:
    """Sum of the slowest transfer of each of the three legs."""
    legs = {"storage->map": s_tr, "map->reduce": mp_tr, "reduce->storage": rd_tr}
    empty = [name for name, leg in legs.items() if not leg]
    if empty:
        raise IncompleteLegs(f"no transfers recorded for {', '.join(empty)}")
    return max(s_tr) + max(mp_tr) + max(rd_tr)


def job_phase_times(tasks) -> tuple[float, float]:
    """Longest mapper and longest reducer execution time."""
    maps = [t.exec_time for t in tasks if t.kind is TaskKind.MAP]
    reduces = [t.exec_time for t in tasks if t.kind is TaskKind.REDUCE]
    if not maps or not reduces:
        raise TaskNotDone("a job needs finished mappers and reducers")
    return max(maps), max(reduces)


def job_completion_time(j_tr: float, j_mp: float, j_rd: float) -> float:
    return j_tr + j_mp + j_rd
