import sys

import pytest

from sdnsim.bigdata.model import Job
from sdnsim.kernel import Entity, EventTag, Simulation
from sdnsim.runner import ScenarioConfig, simulate
from sdnsim.topology import HostSpec, LinkSpec, PhysicalTopology, StorageSpec, SwitchSpec


def machine(cls, name, pes=4, mips=1250.0, ram=8192):
    return cls(name, pes, mips, ram)


def make_topology(hosts=(), switches=(), storage=(), links=(), host_pes=4):
    return PhysicalTopology(
        hosts=[machine(HostSpec, h, pes=host_pes) for h in hosts],
        switches=[SwitchSpec(s, "edge") for s in switches],
        storage=[machine(StorageSpec, s) for s in storage],
        links=[LinkSpec(a, b, bw) for a, b, bw in links],
    )


def diamond(bw=1e9):
    """A - {S1, S2} - B."""
    return make_topology(
        hosts=["A", "B"], switches=["S1", "S2"],
        links=[("A", "S1", bw), ("A", "S2", bw), ("S1", "B", bw), ("S2", "B", bw)])


def line_with_storage(san_bw=4e9, h1_bw=1e9, h2_bw=2e9):
    """san - sw - {h1, h2}; each host fits exactly one 4-PE VM."""
    return make_topology(
        hosts=["h1", "h2"], switches=["sw"], storage=["san"],
        links=[("san", "sw", san_bw), ("sw", "h1", h1_bw), ("sw", "h2", h2_bw)])


def workflow_diamond(bw=1e9):
    """san, h1, h2 on edge ea; h3, h4 on edge eb; ea and eb joined through m1 and m2."""
    return make_topology(
        hosts=["h1", "h2", "h3", "h4"], switches=["ea", "eb", "m1", "m2"], storage=["san"],
        links=[("san", "ea", bw), ("h1", "ea", bw), ("h2", "ea", bw),
               ("h3", "eb", bw), ("h4", "eb", bw),
               ("ea", "m1", bw), ("ea", "m2", bw), ("m1", "eb", bw), ("m2", "eb", bw)])


class Driver(Entity):
    """Test entity that records deliveries and runs callbacks at scheduled times."""

    def __init__(self, name="driver"):
        super().__init__(name)
        self.log = []

    def handle(self, event):
        if event.tag is EventTag.GENERIC and callable(event.payload):
            event.payload()
        self.log.append((self.sim.now(), event.tag, event.payload))

    def at(self, t, fn):
        self.sim.send(self.id, self.id, t, EventTag.GENERIC, fn)


@pytest.fixture
def sim():
    return Simulation(seed=1)


def run_app(topology, jobs, mode="sdn", seed=0, **config):
    """Run one application through the full stack with a ScenarioConfig built from ``config``."""
    cfg = ScenarioConfig(topology="", workload="", seed=seed, **config)
    return simulate(topology, jobs, mode, seed, config=cfg)


def job(job_id=1, submit=0.0, map_mi=10000, reduce_mi=7500, s=8e9, m=6e9, r=3e9, nm=1, nr=1,
        job_type="t"):
    return Job(job_id, 1, job_type, submit, map_mi, reduce_mi, s, m, r, nm, nr)


def random_jobs(rng, count):
    jobs = []
    for i in range(1, count + 1):
        jobs.append(Job(i, 1, "r", rng.choice([0.0, 0.5, 1.0, 2.0]), rng.randint(1, 20) * 1000,
                        rng.randint(1, 20) * 1000, rng.randint(1, 10) * 1e9,
                        rng.randint(0, 10) * 1e9, rng.randint(0, 10) * 1e9,
                        rng.randint(1, 4), rng.randint(1, 3)))
    return jobs


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS):
            terminalreporter.write_line(line)
