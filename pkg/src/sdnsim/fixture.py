"""Bundled use-case: three-tier fabric, 15 MapReduce jobs, 16 VMs."""

from __future__ import annotations

import json
import os
import random

from .bigdata.model import Job
from .bigdata.workload import GBIT, dump_workload
from .topology import serialize, usecase_topology

# job type -> (map MI, reduce MI, storage->map Gb, map->reduce Gb, reduce->storage Gb,
#              mappers, reducers)
JOB_TYPES = {
    "small": (100000, 75000, 200, 150, 100, 2, 1),
    "medium": (200000, 175000, 400, 350, 300, 4, 2),
    "big": (300000, 275000, 600, 550, 500, 6, 3),
}
JOBS_PER_TYPE = 5
INTER_ARRIVAL_S = 1.0


def usecase_jobs(seed: int = 42) -> list[Job]:
    """Five jobs of each type; ids 1-5 small, 6-10 medium, 11-15 big.

    Submit times are a seeded shuffle of 0, 1, ..., 14 seconds.
    """
    total = JOBS_PER_TYPE * len(JOB_TYPES)
    slots = [i * INTER_ARRIVAL_S for i in range(total)]
    random.Random(seed).shuffle(slots)
    jobs = []
    job_id = 1
    for job_type, (map_mi, red_mi, s_gb, m_gb, r_gb, nm, nr) in JOB_TYPES.items():
        for _ in range(JOBS_PER_TYPE):
            jobs.append(Job(job_id, 1, job_type, slots[job_id - 1], map_mi, red_mi,
                            s_gb * GBIT, m_gb * GBIT, r_gb * GBIT, nm, nr))
            job_id += 1
    return sorted(jobs, key=lambda j: (j.submit_time, j.id))


def usecase_scenario(seed: int = 42) -> dict:
    return {
        "topology": "topology.json",
        "workload": "workload.csv",
        "mode": "both",
        "seed": seed,
        "output": "out",
        "policies": {"job_selection": "fcfs", "task_placement": "least_used",
                     "vm_scheduler": "time_shared", "traffic": "fair_share",
                     "routing": {"sdn": "min_hop_max_bandwidth",
                                 "legacy": "shortest_path_random"}},
        "vms": {"count": 16, "pes": 4, "mips_per_pe": 1250, "ram_mb": 8192},
        "power": {"host_idle_w": 100.0, "host_max_w": 250.0, "switch_static_w": 50.0,
                  "switch_port_w": 5.0, "switch_idle_w": 50.0, "idle_mode": True},
        "options": {"per_task_mi": False, "legacy_pin": "endpoint",
                    "heartbeat_interval": 1.0, "reduce_factor": None, "task_slots": None},
    }


def generate_usecase_fixture(out_dir, seed: int = 42) -> list[str]:
    """Write topology.json, workload.csv and usecase.json into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "topology.json": serialize(usecase_topology()),
        "workload.csv": dump_workload(usecase_jobs(seed)),
        "usecase.json": json.dumps(usecase_scenario(seed), indent=2) + "\n",
    }
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths
