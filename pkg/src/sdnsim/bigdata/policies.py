"""Job selection, task placement and VM allocation policies."""

from __future__ import annotations

from abc import ABC, abstractmethod

from .model import BigDataError


class EmptyQueue(BigDataError):
    pass


class NoVms(BigDataError):
    pass


class JobSelectionPolicy(ABC):
    name = "abstract"

    @abstractmethod
    def select(self, queue) -> int:
        """Return the id of the job to start next."""


class FcfsJobSelection(JobSelectionPolicy):
    """Earliest submit time first; ties go to the lower job id."""

    name = "fcfs"

    def select(self, queue):
        if not queue:
            raise EmptyQueue("no jobs waiting")
        return min(queue, key=lambda job: (job.submit_time, job.id)).id


class TaskPlacementPolicy(ABC):
    name = "abstract"

    @abstractmethod
    def place(self, tasks, vms, loads=None) -> dict:
        """Map task id -> VM id."""


class LeastUsedPlacement(TaskPlacementPolicy):
    """Greedy: each task goes to the VM with the least resident MI.

    ``loads`` holds the MI already resident per VM id; tasks placed earlier
    in the same call count toward the load.  Ties go to the lower VM id.
    """

    name = "least_used"

    def place(self, tasks, vms, loads=None):
        if not vms:
            raise NoVms("no VMs to place tasks on")
        load = {vm: (loads or {}).get(vm, 0.0) for vm in vms}
        placement = {}
        for task in tasks:
            vm = min(load, key=lambda v: (load[v], v))
            placement[task.id] = vm
            load[vm] += task.length_mi
        return placement


def first_fit(hosts, free, demand):
    """First host (in the given order) whose free resources cover ``demand``.

    ``free`` maps host name -> [pes, ram_mb]; ``demand`` is (pes, mips_per_pe, ram_mb).
    Returns the host name or None.
    """
    pes, mips, ram = demand
    for host in hosts:
        left_pes, left_ram = free[host.name]
        if left_pes >= pes and left_ram >= ram and host.mips_per_pe >= mips:
            return host.name
    return None


JOB_SELECTION = {FcfsJobSelection.name: FcfsJobSelection}
TASK_PLACEMENT = {LeastUsedPlacement.name: LeastUsedPlacement}
