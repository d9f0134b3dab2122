import math
import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings, strategies as st

from conftest import job, line_with_storage, make_topology, random_jobs, run_app, workflow_diamond
from oracles import assert_workflow_invariants
from sdnsim.bigdata.entities import AppConfig, ResourceManager
from sdnsim.bigdata.model import (BigDataError, BigDataTask, ConfigError, IncompleteLegs,
                                  InsufficientCapacity, Job, TaskKind, TaskNotDone,
                                  TaskState, VmSpec, ZeroMappers,
                                  job_completion_time, job_phase_times, job_transmission_time,
                                  mapper_size, reducer_size)
from sdnsim.bigdata.policies import EmptyQueue, FcfsJobSelection, LeastUsedPlacement, NoVms
from sdnsim.bigdata.schedulers import SpaceShared, TimeShared, make_scheduler
from sdnsim.bigdata.workload import dump_workload, parse_workload
from sdnsim.kernel import Simulation
from sdnsim.network import MinHopMaxBandwidth, SdnController


# -- sizing ------------------------------------------------------------------

@pytest.mark.parametrize("jl,nm,expected", [(200e9, 2, 100e9), (600e9, 6, 100e9), (123.0, 1, 123.0)])
def test_mapper_size(jl, nm, expected):
    assert mapper_size(jl, nm) == expected


def test_mapper_size_needs_a_mapper():
    with pytest.raises(ZeroMappers):
        mapper_size(1e9, 0)


@pytest.mark.parametrize("ms,f,expected", [(100e9, 0.75, 75e9), (5e9, 1.0, 5e9), (5e9, 0.0, 0.0)])
def test_reducer_size(ms, f, expected):
    assert reducer_size(ms, f) == expected


def test_reduce_factor_inferred_from_small_job():
    small = Job(1, 1, "small", 0, 100000, 75000, 200e9, 150e9, 100e9, 2, 1)
    assert small.reduce_factor == 150 / 200 == 0.75


def test_job_rejects_bad_definitions():
    with pytest.raises(ConfigError):
        job(nm=0)
    with pytest.raises(ConfigError):
        job(s=-1)


# -- policies ----------------------------------------------------------------

def _queued(*pairs):
    return [SimpleNamespace(id=i, submit_time=t) for i, t in pairs]


def test_fcfs_earliest_submit():
    assert FcfsJobSelection().select(_queued((1, 2), (2, 1), (3, 3))) == 2


def test_fcfs_tie_goes_to_lower_id():
    assert FcfsJobSelection().select(_queued((7, 1), (3, 1))) == 3


def test_fcfs_single_and_empty():
    assert FcfsJobSelection().select(_queued((9, 4))) == 9
    with pytest.raises(EmptyQueue):
        FcfsJobSelection().select([])


def _tasks(n, mi=100):
    return [SimpleNamespace(id=f"t{i}", length_mi=mi) for i in range(n)]


def test_least_used_picks_idle_vm():
    assert LeastUsedPlacement().place(_tasks(1), [1, 2], {1: 0, 2: 1000}) == {"t0": 1}


def test_least_used_spreads_identical_tasks():
    assert LeastUsedPlacement().place(_tasks(2), [1, 2]) == {"t0": 1, "t1": 2}


def test_least_used_three_on_two_puts_pair_on_lower_id():
    placement = LeastUsedPlacement().place(_tasks(3), [1, 2])
    assert sorted(placement.values()) == [1, 1, 2]


def test_least_used_needs_vms():
    with pytest.raises(NoVms):
        LeastUsedPlacement().place(_tasks(1), [])


# -- VM schedulers -----------------------------------------------------------

def drain(scheduler):
    """Advance to each completion in turn; returns {task: finish time}."""
    clock, finished = 0.0, {}
    while len(scheduler):
        dt = scheduler.next_completion()
        clock += dt
        for task in scheduler.step(dt):
            finished[task] = clock
    return finished


def test_time_shared_single_task():
    s = TimeShared(4, 1250)
    s.submit("a", 5000)
    assert drain(s) == {"a": 1.0}


def test_time_shared_two_tasks_share_equally():
    s = TimeShared(4, 1250)
    s.submit("a", 5000)
    s.submit("b", 5000)
    assert s.rates() == {"a": 2500, "b": 2500}
    assert drain(s) == {"a": 2.0, "b": 2.0}


def test_space_shared_fifth_task_waits():
    s = SpaceShared(4, 1250)
    for i in range(5):
        s.submit(f"t{i}", 1250)
    assert drain(s) == {"t0": 1.0, "t1": 1.0, "t2": 1.0, "t3": 1.0, "t4": 2.0}


def test_scheduler_step_zero_and_negative():
    s = make_scheduler("time_shared", 4, 1250)
    s.submit("a", 5000)
    assert s.step(0.0) == [] and s.remaining["a"] == 5000
    with pytest.raises(ValueError):
        s.step(-1)
    with pytest.raises(ValueError):
        make_scheduler("lottery", 1, 1)


@given(st.lists(st.integers(1, 20000), min_size=1, max_size=8))
def test_time_shared_rates_are_equal_and_fill_the_vm(lengths):
    s = TimeShared(4, 1250)
    for i, mi in enumerate(lengths):
        s.submit(f"t{i}", mi)
    while len(s):
        rates = set(s.rates().values())
        assert len(rates) == 1
        assert math.isclose(s.used_mips(), 5000)
        s.step(s.next_completion())


# -- job formulas ------------------------------------------------------------

def test_job_transmission_time_sums_leg_maxima():
    assert job_transmission_time([10, 12], [5], [3, 4]) == 21
    assert job_transmission_time([2], [3], [4]) == 9


def test_job_transmission_time_incomplete():
    with pytest.raises(IncompleteLegs):
        job_transmission_time([1], [], [2])


def _done_task(kind, start, end):
    return BigDataTask("x", 1, 0, kind, 1, 0, 0, exec_start=start, exec_end=end)


def test_job_phase_times():
    tasks = [_done_task(TaskKind.MAP, 0, d) for d in (4, 6, 5)]
    tasks.append(_done_task(TaskKind.REDUCE, 10, 17))
    assert job_phase_times(tasks) == (6, 7)
    same = [_done_task(TaskKind.MAP, 0, 3), _done_task(TaskKind.REDUCE, 1, 4)]
    assert job_phase_times(same) == (3, 3)


def test_job_phase_times_needs_finished_tasks():
    with pytest.raises(TaskNotDone):
        job_phase_times([BigDataTask("m", 1, 0, TaskKind.MAP, 1, 0, 0)])


@pytest.mark.parametrize("parts,expected", [((21, 6, 7), 34), ((0, 6, 7), 13), ((0, 0, 0), 0)])
def test_job_completion_time(parts, expected):
    assert job_completion_time(*parts) == expected


def test_task_state_order_is_enforced():
    task = BigDataTask("m", 1, 0, TaskKind.MAP, 1, 0, 0)
    with pytest.raises(BigDataError):
        task.advance(TaskState.EXECUTING)
    for state in (TaskState.AWAITING_DATA, TaskState.EXECUTING, TaskState.TRANSMITTING_OUTPUT,
                  TaskState.DONE):
        task.advance(state)


# -- resource manager and heartbeats -------------------------------------------

def _cluster(n_hosts, pes=4, heartbeat=1.0):
    hosts = [f"h{i}" for i in range(n_hosts)]
    topo = make_topology(hosts=hosts, switches=["sw"], storage=["san"],
                         links=[("san", "sw", 1e9)] + [(h, "sw", 1e9) for h in hosts],
                         host_pes=pes)
    sim = Simulation(seed=0)
    ctl = SdnController(topo, MinHopMaxBandwidth())
    sim.register(ctl)
    rm = ResourceManager(topo, ctl, None, heartbeat)
    sim.register(rm)
    rm.start()
    return sim, rm


def test_heartbeats_every_interval():
    sim, rm = _cluster(1)
    sim.run(until=10.0)
    assert [t for t, *_ in rm.heartbeats] == [float(i) for i in range(1, 11)]
    assert all(mips == 0 and ram == 0 for _, _, mips, ram in rm.heartbeats)


def test_heartbeat_reports_task_shares():
    sim, rm = _cluster(1)
    am = rm.establish_application(AppConfig(jobs=[], vm_count=1))
    vm = next(iter(rm.vms.values()))
    nm = rm.node_managers["h0"]
    nm.execute(BigDataTask("a", 1, 0, TaskKind.MAP, 5000, 0, 0), vm.id, am.id)
    nm.execute(BigDataTask("b", 1, 0, TaskKind.MAP, 50000, 0, 0), vm.id, am.id)
    now, host, mips, ram = nm.heartbeat()
    assert mips == sum(vm.scheduler.rates().values()) == 5000
    assert ram == VmSpec().ram_mb


def test_sixteen_vms_on_sixteen_hosts():
    sim, rm = _cluster(16)
    am = rm.establish_application(AppConfig(jobs=[], vm_count=16))
    sim.run()
    assert len(am.vms) == 16
    assert len({vm.host for vm in am.vms.values()}) == 16
    assert am.finished


def test_oversized_request_waits_for_release():
    sim, rm = _cluster(2)
    first = rm.establish_application(AppConfig(jobs=[], vm_count=2))
    second = rm.establish_application(AppConfig(jobs=[], vm_count=2))
    assert len(rm.queue) == 1 and rm.queue[0] is second
    sim.run()
    assert first.finished and second.finished
    assert sorted(vm.id for vm in second.vms.values()) == [2, 3]


def test_request_larger_than_empty_cluster_fails():
    sim, rm = _cluster(2)
    with pytest.raises(InsufficientCapacity):
        rm.establish_application(AppConfig(jobs=[], vm_count=3))


def test_zero_jobs_run_finishes():
    result = run_app(line_with_storage(), [], vm_count=2)
    assert result.am.finished and result.am.metrics == {}


def test_app_config_validation():
    with pytest.raises(ConfigError):
        AppConfig(jobs=[], vm_count=0)
    with pytest.raises(ConfigError):
        AppConfig(jobs=[job(1), job(1)])
    with pytest.raises(ConfigError):
        AppConfig(jobs=[], task_placement="random")


# -- workflow ---------------------------------------------------------------

def test_single_job_closed_form():
    # vm00 on h1 (1 Gbps), vm01 on h2 (2 Gbps), SAN behind 4 Gbps; each VM 5000 MIPS.
    # 8e9/1e9 + 10000/5000 + 6e9/1e9 + 7500/5000 + 3e9/2e9 = 8 + 2 + 6 + 1.5 + 1.5
    result = run_app(line_with_storage(), [job()], vm_count=2)
    m = result.am.metrics[1]
    assert (m.s_tr, m.j_mp, m.mp_tr, m.j_rd, m.rd_tr) == (8.0, 2.0, 6.0, 1.5, 1.5)
    assert m.j_tr == 15.5 and m.j_ct == 19.0
    assert m.finish_time == 19.0


def test_zero_bit_job_has_no_transmission_time():
    result = run_app(line_with_storage(), [job(s=0, m=0, r=0)], vm_count=2)
    m = result.am.metrics[1]
    assert m.j_tr == 0 and m.j_ct == m.j_mp + m.j_rd == 3.5


def test_per_task_mi_reading():
    two = job(nm=2, map_mi=10000)
    split = run_app(line_with_storage(), [two], vm_count=2).am
    whole = run_app(line_with_storage(), [two], vm_count=2, per_task_mi=True).am
    assert {t.length_mi for t in split.tasks.values() if t.kind is TaskKind.MAP} == {5000}
    assert {t.length_mi for t in whole.tasks.values() if t.kind is TaskKind.MAP} == {10000}


def test_fcfs_start_order_follows_submit_times():
    jobs = [job(i, submit=s) for i, s in ((1, 3.0), (2, 0.0), (3, 1.0), (4, 1.0))]
    am = run_app(line_with_storage(), jobs, vm_count=2, task_slots=2).am
    assert am.start_order == [2, 3, 4, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["sdn", "legacy"]),
       st.sampled_from(["time_shared", "space_shared"]))
def test_workflow_gating_barrier_and_mass_balance(seed, mode, scheduler):
    rng = random.Random(seed)
    jobs = random_jobs(rng, rng.randint(1, 4))
    result = run_app(workflow_diamond(), jobs, mode, seed, vm_count=4, vm_scheduler=scheduler)
    assert_workflow_invariants(result)


# -- workload files ---------------------------------------------------------

def test_workload_round_trip():
    jobs = random_jobs(random.Random(5), 6)
    again = parse_workload(dump_workload(jobs))
    assert [vars(j) for j in again] == [vars(j) for j in jobs]


def test_workload_errors():
    with pytest.raises(ConfigError):
        parse_workload("")
    with pytest.raises(ConfigError):
        parse_workload("a,b\n1,2\n")
    header = dump_workload([]).strip()
    with pytest.raises(ConfigError):
        parse_workload(header + "\n1,1,small,0,1,1,1,1,1,0,1\n")
    with pytest.raises(ConfigError):
        parse_workload(header + "\n1,1,small,-1,1,1,1,1,1,1,1\n")
