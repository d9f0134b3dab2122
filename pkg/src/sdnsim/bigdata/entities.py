"""ResourceManager, NodeManager, ApplicationMaster and StorageAreaNetwork entities."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..kernel import Entity, EventTag, SimEvent
from ..network import Flow, SdnController
from ..topology import PhysicalTopology
from .model import (BigDataTask, ConfigError, InsufficientCapacity, Job, JobMetrics, TaskKind,
                    TaskState, VmSpec, job_completion_time, job_phase_times, job_transmission_time,
                    mapper_size, reducer_size)
from .policies import JOB_SELECTION, TASK_PLACEMENT, first_fit
from .schedulers import VmScheduler, make_scheduler


@dataclass
class Vm:
    id: int
    name: str
    host: str
    spec: VmSpec
    scheduler: VmScheduler
    app_id: Optional[int] = None


@dataclass
class AppConfig:
    jobs: list
    vm_count: int = 16
    vm_spec: VmSpec = field(default_factory=VmSpec)
    job_selection: str = "fcfs"
    task_placement: str = "least_used"
    task_slots: Optional[int] = None
    per_task_mi: bool = False
    name: str = "app"

    def __post_init__(self):
        if self.vm_count < 1:
            raise ConfigError("an application needs at least one VM")
        if self.job_selection not in JOB_SELECTION:
            raise ConfigError(f"unknown job selection policy {self.job_selection!r}")
        if self.task_placement not in TASK_PLACEMENT:
            raise ConfigError(f"unknown task placement policy {self.task_placement!r}")
        if self.task_slots is not None and self.task_slots < 1:
            raise ConfigError("task_slots must be positive")
        ids = [job.id for job in self.jobs]
        if len(set(ids)) != len(ids):
            raise ConfigError("job ids must be unique")


def send_data(entity: Entity, controller: SdnController, flow: Flow, size_bits: float,
              notify: int) -> None:
    """Hand a transfer to the controller; empty transfers complete on the spot."""
    if size_bits > 0:
        entity.send(controller.id, 0.0, EventTag.TRANSMIT_PACKET, (flow, size_bits, notify))
    else:
        controller.transmit_instant(flow, notify=notify)


class NodeManager(Entity):
    """Runs the VMs of one host and reports host usage by heartbeat."""

    def __init__(self, host, rm: "ResourceManager", heartbeat_interval: float = 1.0):
        super().__init__(f"nm-{host.name}")
        self.host = host
        self.rm = rm
        self.heartbeat_interval = heartbeat_interval
        self.vms: list[Vm] = []
        self.last_update = 0.0
        self._owners: dict[str, tuple] = {}
        self._progress_event: Optional[SimEvent] = None
        self._heartbeat_event: Optional[SimEvent] = None

    def start(self) -> None:
        if self.heartbeat_interval and self.heartbeat_interval > 0:
            self._heartbeat_event = self.send(self.id, self.heartbeat_interval, EventTag.HEARTBEAT)

    def stop(self) -> None:
        self.sim.cancel(self._heartbeat_event)
        self._heartbeat_event = None

    def handle(self, event):
        if event.tag is EventTag.EXEC_TASK:
            task, vm_id, notify = event.payload
            self.execute(task, vm_id, notify)
        elif event.tag is EventTag.VM_PROGRESS:
            if event is self._progress_event:
                self._progress_event = None
                self._advance()
                self._reschedule()
        elif event.tag is EventTag.HEARTBEAT:
            self.heartbeat()
            self._heartbeat_event = self.send(self.id, self.heartbeat_interval, EventTag.HEARTBEAT)
        else:
            raise ValueError(f"{self.name}: unexpected event {event.tag}")

    def vm(self, vm_id: int) -> Vm:
        for vm in self.vms:
            if vm.id == vm_id:
                return vm
        raise KeyError(f"VM {vm_id} is not on {self.host.name}")

    def execute(self, task: BigDataTask, vm_id: int, notify: int) -> None:
        self._advance()
        task.exec_start = self.sim.now()
        self._owners[task.id] = (task, notify)
        self.vm(vm_id).scheduler.submit(task.id, task.length_mi)
        self._reschedule()

    def _advance(self) -> None:
        now = self.sim.now()
        dt = now - self.last_update
        self.last_update = now
        for vm in self.vms:
            for task_id in vm.scheduler.step(dt):
                task, notify = self._owners.pop(task_id)
                task.exec_end = now
                self.send(notify, 0.0, EventTag.TASK_DONE, task)

    def _reschedule(self) -> None:
        self.sim.cancel(self._progress_event)
        self._progress_event = None
        times = [t for t in (vm.scheduler.next_completion() for vm in self.vms) if t is not None]
        if times:
            self._progress_event = self.send(self.id, min(times), EventTag.VM_PROGRESS)

    def remaining_mi(self, vm_id: int) -> float:
        """Unfinished MI on a VM, projected to the current clock."""
        scheduler = self.vm(vm_id).scheduler
        dt = self.sim.now() - self.last_update
        return sum(max(0.0, scheduler.remaining[t] - rate * dt)
                   for t, rate in scheduler.rates().items())

    def used_mips(self) -> float:
        return sum(vm.scheduler.used_mips() for vm in self.vms)

    def used_ram(self) -> int:
        return sum(vm.spec.ram_mb for vm in self.vms)

    def utilization(self) -> float:
        return min(1.0, self.used_mips() / self.host.total_mips)

    def running_tasks(self) -> int:
        return sum(len(vm.scheduler) for vm in self.vms)

    def heartbeat(self) -> tuple:
        record = (self.sim.now(), self.host.name, self.used_mips(), self.used_ram())
        self.rm.heartbeats.append(record)
        return record


class StorageAreaNetwork(Entity):
    """Source of mapper input and sink of reducer output."""

    def __init__(self, spec, controller: SdnController):
        super().__init__(spec.name)
        self.spec = spec
        self.endpoint = spec.name
        self.controller = controller
        self.bits_sent = 0.0

    def handle(self, event):
        if event.tag is not EventTag.DATA_REQUEST:
            raise ValueError(f"{self.name}: unexpected event {event.tag}")
        flow, size_bits, notify = event.payload
        self.bits_sent += size_bits
        send_data(self, self.controller, flow, size_bits, notify)


class ResourceManager(Entity):
    """Cluster-wide VM reservations (first-come first-served) and heartbeat ledger."""

    def __init__(self, topology: PhysicalTopology, controller: SdnController, san=None,
                 heartbeat_interval: float = 1.0, name: str = "resource-manager"):
        super().__init__(name)
        self.topology = topology
        self.controller = controller
        self.san = san
        self.heartbeat_interval = heartbeat_interval
        self.hosts = sorted(topology.hosts, key=lambda h: h.name)
        self.node_managers: dict[str, NodeManager] = {}
        self.free = {h.name: [h.pes, h.ram_mb] for h in self.hosts}
        self.vms: dict[int, Vm] = {}
        self.queue: deque = deque()
        self.apps: list[ApplicationMaster] = []
        self.active_apps: set[int] = set()
        self.heartbeats: list[tuple] = []
        self._next_vm = 0

    def start(self) -> None:
        """Couple every host with a node manager and start its heartbeats."""
        for host in self.hosts:
            nm = NodeManager(host, self, self.heartbeat_interval)
            self.sim.register(nm)
            self.node_managers[host.name] = nm
            nm.start()

    def handle(self, event):
        if event.tag is EventTag.APP_SUBMIT:
            self.establish_application(event.payload)
        elif event.tag is EventTag.APP_DONE:
            self.release(event.payload)
        else:
            raise ValueError(f"{self.name}: unexpected event {event.tag}")

    def establish_application(self, config: AppConfig) -> "ApplicationMaster":
        am = ApplicationMaster(len(self.apps), config, self)
        self.sim.register(am)
        self.apps.append(am)
        self.active_apps.add(am.app_id)
        self.queue.append(am)
        self._grant_queued()
        return am

    def _allocate(self, am: "ApplicationMaster") -> Optional[list[Vm]]:
        spec = am.config.vm_spec
        trial = {name: list(v) for name, v in self.free.items()}
        chosen = []
        for _ in range(am.config.vm_count):
            host = first_fit(self.hosts, trial, (spec.pes, spec.mips_per_pe, spec.ram_mb))
            if host is None:
                return None
            trial[host][0] -= spec.pes
            trial[host][1] -= spec.ram_mb
            chosen.append(host)
        self.free = trial
        vms = []
        for host in chosen:
            vm = Vm(self._next_vm, f"vm{self._next_vm:02d}", host, spec,
                    make_scheduler(spec.scheduler, spec.pes, spec.mips_per_pe), am.app_id)
            self._next_vm += 1
            self.vms[vm.id] = vm
            self.node_managers[host].vms.append(vm)
            self.controller.attach(vm.name, host)
            vms.append(vm)
        return vms

    def _grant_queued(self) -> None:
        while self.queue:
            vms = self._allocate(self.queue[0])
            if vms is None:
                if not self.vms:
                    # nothing is leased, so no release can ever make room
                    raise InsufficientCapacity(
                        f"{self.queue[0].name}: {self.queue[0].config.vm_count} VMs exceed "
                        f"the cluster capacity")
                break
            am = self.queue.popleft()
            self.send(am.id, 0.0, EventTag.VM_GRANT, vms)

    def release(self, am: "ApplicationMaster") -> None:
        for vm in list(self.vms.values()):
            if vm.app_id != am.app_id:
                continue
            nm = self.node_managers[vm.host]
            nm.vms.remove(vm)
            self.free[vm.host][0] += vm.spec.pes
            self.free[vm.host][1] += vm.spec.ram_mb
            del self.vms[vm.id]
        self.active_apps.discard(am.app_id)
        self._grant_queued()
        if not self.active_apps and not self.queue:
            for nm in self.node_managers.values():
                nm.stop()

    def node_manager_of(self, vm: Vm) -> NodeManager:
        return self.node_managers[vm.host]


class ApplicationMaster(Entity):
    """Queues the application's jobs, places their tasks and drives the MapReduce workflow."""

    def __init__(self, app_id: int, config: AppConfig, rm: ResourceManager):
        super().__init__(f"am-{app_id}")
        self.app_id = app_id
        self.config = config
        self.rm = rm
        self.controller = rm.controller
        self.selection = JOB_SELECTION[config.job_selection]()
        self.placement = TASK_PLACEMENT[config.task_placement]()
        self.jobs = {job.id: job for job in config.jobs}
        self.vms: dict[int, Vm] = {}
        self.queue: list[Job] = []
        self.tasks: dict[str, BigDataTask] = {}
        self.job_tasks: dict[int, list[BigDataTask]] = {}
        self.legs: dict[int, dict[str, list[float]]] = {}
        self.started: dict[int, float] = {}
        self.start_order: list[int] = []
        self.metrics: dict[int, JobMetrics] = {}
        self.active_tasks = 0
        self._arrived = 0
        self._pending_output: dict[str, int] = {}
        self._final_pending: dict[int, int] = {}
        self.finished = False

    def handle(self, event):
        tag = event.tag
        if tag is EventTag.VM_GRANT:
            self._on_grant(event.payload)
        elif tag is EventTag.JOB_SUBMIT:
            self._arrived += 1
            self.queue.append(event.payload)
            self._start_jobs()
        elif tag is EventTag.PACKET_DELIVERED:
            self._on_delivered(event.payload)
        elif tag is EventTag.TASK_DONE:
            self._on_task_done(event.payload)
        else:
            raise ValueError(f"{self.name}: unexpected event {tag}")

    def _on_grant(self, vms) -> None:
        self.vms = {vm.id: vm for vm in vms}
        now = self.sim.now()
        for job in sorted(self.jobs.values(), key=lambda j: (j.submit_time, j.id)):
            self.send(self.id, max(0.0, job.submit_time - now), EventTag.JOB_SUBMIT, job)
        self._check_finished()

    def _start_jobs(self) -> None:
        slots = self.config.task_slots
        while self.queue:
            job = self.jobs[self.selection.select(self.queue)]
            needed = job.num_mappers + job.num_reducers
            if slots is not None and self.active_tasks and self.active_tasks + needed > slots:
                break
            self.queue.remove(job)
            self._start_job(job)

    def resident_load(self) -> dict[int, float]:
        """Remaining MI of the unfinished tasks resident on each VM."""
        load = {vm_id: 0.0 for vm_id in self.vms}
        for task in self.tasks.values():
            if task.state in (TaskState.PENDING, TaskState.AWAITING_DATA):
                load[task.vm] += task.length_mi
        for vm_id, vm in self.vms.items():
            load[vm_id] += self.rm.node_manager_of(vm).remaining_mi(vm_id)
        return load

    def build_tasks(self, job: Job) -> list[BigDataTask]:
        nm, nr, f = job.num_mappers, job.num_reducers, job.reduce_factor
        map_mi = job.map_mi_total if self.config.per_task_mi else mapper_size(job.map_mi_total, nm)
        reduce_mi = (job.reduce_mi_total if self.config.per_task_mi
                     else job.reduce_mi_total / nr)
        ms = mapper_size(job.storage_to_map_bits, nm)
        map_out = reducer_size(ms, f)
        tasks = []
        for i in range(nm):
            tasks.append(BigDataTask(f"j{job.id}-m{i}", job.id, self.app_id, TaskKind.MAP,
                                     map_mi, ms, map_out, index=i, inputs_expected=1))
        for r in range(nr):
            tasks.append(BigDataTask(f"j{job.id}-r{r}", job.id, self.app_id, TaskKind.REDUCE,
                                     reduce_mi, map_out * nm / nr,
                                     job.reduce_to_storage_bits / nr, index=r,
                                     inputs_expected=nm))
        return tasks

    def _start_job(self, job: Job) -> None:
        now = self.sim.now()
        tasks = self.build_tasks(job)
        placement = self.placement.place(tasks, sorted(self.vms), self.resident_load())
        for task in tasks:
            task.vm = placement[task.id]
            task.advance(TaskState.AWAITING_DATA)
            self.tasks[task.id] = task
        self.job_tasks[job.id] = tasks
        self.legs[job.id] = {"storage_to_map": [], "map_to_reduce": [], "reduce_to_storage": []}
        self._final_pending[job.id] = job.num_reducers
        self.started[job.id] = now
        self.start_order.append(job.id)
        self.active_tasks += len(tasks)
        san = self.rm.san
        for task in tasks:
            if task.kind is TaskKind.MAP:
                flow = Flow(san.endpoint, self.vms[task.vm].name, job.id, None, task.id)
                self.send(san.id, 0.0, EventTag.DATA_REQUEST, (flow, task.input_bits, self.id))

    def _on_delivered(self, packet) -> None:
        flow = packet.flow
        now = self.sim.now()
        if flow.src_task is None:
            self.legs[flow.job_id]["storage_to_map"].append(packet.duration)
        elif flow.dst_task is None:
            self.legs[flow.job_id]["reduce_to_storage"].append(packet.duration)
            reducer = self.tasks[flow.src_task]
            reducer.advance(TaskState.DONE)
            self._final_pending[flow.job_id] -= 1
            if self._final_pending[flow.job_id] == 0:
                self._finish_job(flow.job_id)
            return
        else:
            self.legs[flow.job_id]["map_to_reduce"].append(packet.duration)
            self._pending_output[flow.src_task] -= 1
            if self._pending_output[flow.src_task] == 0:
                self.tasks[flow.src_task].advance(TaskState.DONE)
        task = self.tasks[flow.dst_task]
        task.inputs_received += 1
        task.last_input_at = now
        if task.inputs_received == task.inputs_expected:
            task.advance(TaskState.EXECUTING)
            vm = self.vms[task.vm]
            nm = self.rm.node_manager_of(vm)
            self.send(nm.id, 0.0, EventTag.EXEC_TASK, (task, vm.id, self.id))

    def _on_task_done(self, task: BigDataTask) -> None:
        task.advance(TaskState.TRANSMITTING_OUTPUT)
        src = self.vms[task.vm].name
        if task.kind is TaskKind.MAP:
            reducers = [t for t in self.job_tasks[task.job_id] if t.kind is TaskKind.REDUCE]
            self._pending_output[task.id] = len(reducers)
            share = task.output_bits / len(reducers)
            for reducer in reducers:
                flow = Flow(src, self.vms[reducer.vm].name, task.job_id, task.id, reducer.id)
                send_data(self, self.controller, flow, share, self.id)
        else:
            flow = Flow(src, self.rm.san.endpoint, task.job_id, task.id, None)
            send_data(self, self.controller, flow, task.output_bits, self.id)

    def _finish_job(self, job_id: int) -> None:
        job = self.jobs[job_id]
        legs = self.legs[job_id]
        tasks = self.job_tasks[job_id]
        j_tr = job_transmission_time(legs["storage_to_map"], legs["map_to_reduce"],
                                     legs["reduce_to_storage"])
        j_mp, j_rd = job_phase_times(tasks)
        self.metrics[job_id] = JobMetrics(
            job_id, max(legs["storage_to_map"]), max(legs["map_to_reduce"]),
            max(legs["reduce_to_storage"]), j_tr, j_mp, j_rd,
            job_completion_time(j_tr, j_mp, j_rd), job.submit_time, self.started[job_id],
            self.sim.now())
        self.active_tasks -= len(tasks)
        self._start_jobs()
        self._check_finished()

    def _check_finished(self) -> None:
        if (not self.finished and self._arrived == len(self.jobs) and not self.queue
                and len(self.metrics) == len(self.jobs)):
            self.finished = True
            self.send(self.rm.id, 0.0, EventTag.APP_DONE, self)
