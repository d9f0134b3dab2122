import filecmp
import os
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from conftest import job, line_with_storage, run_app
from sdnsim.fixture import usecase_jobs
from sdnsim.reports import (FILES, JobSetMismatch, RunReport, build_report, compare, emit,
                            emit_comparison, fmt, load_report, read_csv, recompute_jobs)
from sdnsim.runner import simulate
from sdnsim.topology import usecase_topology


@pytest.fixture(scope="module")
def usecase_report():
    return build_report(simulate(usecase_topology(), usecase_jobs(42), "sdn", 42))


def test_empty_run_writes_header_only_files(tmp_path):
    report = build_report(run_app(line_with_storage(), [], vm_count=2))
    paths = emit(report, tmp_path)
    assert sorted(os.path.basename(p) for p in paths) == sorted((*FILES, "run.meta"))
    for name in FILES:
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) == 1


def test_usecase_has_fifteen_job_rows(usecase_report):
    assert len(usecase_report.jobs) == 15
    assert sorted(int(r["job_id"]) for r in usecase_report.jobs) == list(range(1, 16))


def test_rows_are_self_consistent(usecase_report):
    for row in usecase_report.jobs:
        assert Decimal(row["j_ct"]) == (Decimal(row["j_tr"]) + Decimal(row["j_mp"])
                                        + Decimal(row["j_rd"]))
    for row in usecase_report.transmissions:
        assert Decimal(row["duration"]) == Decimal(row["finish"]) - Decimal(row["start"])
    for row in usecase_report.forwarding:
        spans = [part.split(":") for part in row["intervals"].split(";")]
        for (_, end, _), (start, _, _) in zip(spans, spans[1:]):
            assert end == start


def test_recompute_from_written_files(tmp_path, usecase_report):
    emit(usecase_report, tmp_path)
    loaded = load_report(tmp_path)
    assert recompute_jobs(loaded) == read_csv(tmp_path / "jobs.csv")


def test_closed_form_job_row():
    report = build_report(run_app(line_with_storage(), [job()], vm_count=2))
    row = report.jobs[0]
    assert (row["j_tr"], row["j_mp"], row["j_rd"], row["j_ct"]) == (
        "15.500000", "2.000000", "1.500000", "19.000000")
    assert [r["leg"] for r in report.transmissions] == [
        "storage_to_map", "map_to_reduce", "reduce_to_storage"]


def test_same_seed_gives_identical_files(tmp_path):
    for name in ("a", "b"):
        emit(build_report(run_app(line_with_storage(), [job(1), job(2, submit=1.0)], "legacy", 7,
                                  vm_count=2)), tmp_path / name)
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b",
                                               [*FILES, "run.meta"], shallow=False)
    assert not mismatch and not errors


def test_fixed_point_format():
    assert fmt(1 / 3) == "0.333333"
    assert fmt(Decimal("0.0000005")) == "0.000000"
    assert fmt(Decimal("0.0000015")) == "0.000002"
    assert fmt(19) == "19.000000"


def _report(mode, values, energy=100):
    jobs = [{"job_id": str(i), "job_type": "t", "j_tr": str(v), "j_ct": str(v), "j_mp": "0",
             "j_rd": "0"} for i, v in values.items()]
    return RunReport(jobs=jobs, meta={"mode": mode},
                     energy_totals={"host": Decimal(energy), "switch": Decimal(0),
                                    "datacenter": Decimal(energy)})


def test_identical_reports_show_no_improvement():
    summary = compare(_report("sdn", {1: 50}), _report("legacy", {1: 50}))
    assert (summary.mean_tr_pct, summary.mean_ct_pct, summary.energy_pct) == (0, 0, 0)
    assert {r["improvement_pct"] for r in summary.rows} == {"0.000000"}


def test_sdn_59_against_legacy_100_is_41_percent():
    summary = compare(_report("sdn", {1: 59}, 78), _report("legacy", {1: 100}, 100))
    assert summary.mean_tr_pct == 41.0
    assert summary.energy_pct == 22.0
    assert summary.baseline == "legacy"


def test_disjoint_jobs_rejected():
    with pytest.raises(JobSetMismatch):
        compare(_report("sdn", {1: 1}), _report("legacy", {2: 1}))


@given(st.dictionaries(st.integers(1, 30), st.integers(1, 10**6), min_size=1),
       st.integers(1, 10**6))
def test_compare_is_antisymmetric(values, scale):
    other = {k: (v * 7 + scale) % 10**6 + 1 for k, v in values.items()}
    a, b = _report("sdn", values, scale), _report("legacy", other, 500)
    forward, backward = compare(a, b), compare(b, a)
    assert forward.mean_tr_pct == -backward.mean_tr_pct
    assert forward.energy_pct == -backward.energy_pct
    for x, y in zip(forward.rows, backward.rows):
        assert Decimal(x["improvement_pct"]) == -Decimal(y["improvement_pct"])


def test_comparison_file_documents_convention(tmp_path):
    summary = compare(_report("sdn", {1: 59}), _report("legacy", {1: 100}))
    path = emit_comparison(summary, tmp_path / "comparison.csv")
    first = open(path).readline()
    assert first.startswith("#") and "/ legacy" in first
    assert read_csv(path)[0]["improvement_pct"] == "41.000000"
