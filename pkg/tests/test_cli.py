import csv
import json
import os
import subprocess
import sys


from conftest import job, line_with_storage
from sdnsim.bigdata.workload import dump_workload
from sdnsim.cli import main
from sdnsim.fixture import generate_usecase_fixture
from sdnsim.reports import FILES
from sdnsim.topology import load_topology, serialize, validate


def test_fixture_contents(tmp_path):
    paths = generate_usecase_fixture(tmp_path, 42)
    assert sorted(os.path.basename(p) for p in paths) == ["topology.json", "usecase.json",
                                                          "workload.csv"]
    with open(tmp_path / "workload.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["job_type"] for r in rows].count("small") == 5
    assert [r["job_type"] for r in rows].count("medium") == 5
    assert [r["job_type"] for r in rows].count("big") == 5
    assert sorted(float(r["submit_time_s"]) for r in rows) == [float(i) for i in range(15)]
    medium = next(r for r in rows if r["job_type"] == "medium")
    assert (medium["storage_to_map_gbits"], medium["map_to_reduce_gbits"],
            medium["reduce_to_storage_gbits"], medium["num_mappers"],
            medium["num_reducers"]) == ("400", "350", "300", "4", "2")
    assert validate(load_topology(tmp_path / "topology.json")) == []


def test_fixture_order_depends_on_seed(tmp_path):
    generate_usecase_fixture(tmp_path / "a", 1)
    generate_usecase_fixture(tmp_path / "b", 2)
    assert (tmp_path / "a" / "workload.csv").read_text() != (tmp_path / "b" / "workload.csv").read_text()


def minimal_scenario(tmp_path, **overrides):
    (tmp_path / "topo.json").write_text(serialize(line_with_storage()))
    (tmp_path / "jobs.csv").write_text(dump_workload([job(1), job(2, submit=1.0)]))
    doc = {"topology": "topo.json", "workload": "jobs.csv", "mode": "sdn", "seed": 3,
           "output": "out", "vms": {"count": 2}}
    doc.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_single_mode_writes_one_directory(tmp_path, capsys):
    scenario = minimal_scenario(tmp_path)
    assert main(["--scenario", str(scenario)]) == 0
    out = tmp_path / "out"
    assert sorted(os.listdir(out)) == ["sdn"]
    assert sorted(os.listdir(out / "sdn")) == sorted((*FILES, "run.meta"))


def test_flags_override_scenario(tmp_path):
    scenario = minimal_scenario(tmp_path)
    assert main(["--scenario", str(scenario), "--mode", "legacy", "--seed", "9",
                 "--out", str(tmp_path / "elsewhere")]) == 0
    meta = json.loads((tmp_path / "elsewhere" / "legacy" / "run.meta").read_text())
    assert (meta["mode"], meta["seed"]) == ("legacy", 9)


def test_missing_topology_exits_1(tmp_path, capsys):
    scenario = minimal_scenario(tmp_path, topology="absent.json")
    assert main(["--scenario", str(scenario)]) == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_policy_exits_1(tmp_path):
    scenario = minimal_scenario(tmp_path, policies={"vm_scheduler": "lottery"})
    assert main(["--scenario", str(scenario)]) == 1


def test_no_arguments_exits_1(capsys):
    assert main([]) == 1


def test_unsatisfiable_vm_request_exits_2(tmp_path, capsys):
    scenario = minimal_scenario(tmp_path, vms={"count": 3})
    assert main(["--scenario", str(scenario)]) == 2
    assert "simulation error" in capsys.readouterr().err


def test_usecase_both_modes_round_trip(tmp_path):
    fixture = tmp_path / "fixture"
    proc = subprocess.run([sys.executable, "-m", "sdnsim", "--emit-fixture", str(fixture)],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.count("\n") == 3
    proc = subprocess.run([sys.executable, "-m", "sdnsim", "--scenario",
                           str(fixture / "usecase.json"), "--mode", "both", "--seed", "42"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    out = fixture / "out"
    assert sorted(os.listdir(out)) == ["comparison.csv", "legacy", "sdn"]
    for mode in ("sdn", "legacy"):
        assert sorted(os.listdir(out / mode)) == sorted((*FILES, "run.meta"))
        with open(out / mode / "jobs.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 15
    summary = json.loads(proc.stdout.strip().splitlines()[-1])
    assert set(summary) == {"transmission_improvement_pct", "completion_improvement_pct",
                            "energy_improvement_pct"}
