"""Workload CSV files.

One header row, then one job per row.  Transfer sizes are in gigabits
(10**9 bits); processing sizes in million instructions.
"""

from __future__ import annotations

import csv
import io

from .model import ConfigError, Job

COLUMNS = ("user_id", "job_id", "job_type", "submit_time_s", "map_mi_total",
           "reduce_mi_total", "storage_to_map_gbits", "map_to_reduce_gbits",
           "reduce_to_storage_gbits", "num_mappers", "num_reducers")

GBIT = 1e9


def parse_workload(text: str, reduce_factor=None) -> list[Job]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError("workload file is empty") from None
    if tuple(header) != COLUMNS:
        raise ConfigError(f"workload header must be {','.join(COLUMNS)}")
    jobs = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(COLUMNS):
            raise ConfigError(f"workload line {lineno}: expected {len(COLUMNS)} fields")
        rec = dict(zip(COLUMNS, (cell.strip() for cell in row)))
        try:
            jobs.append(Job(
                id=int(rec["job_id"]),
                user_id=int(rec["user_id"]),
                job_type=rec["job_type"],
                submit_time=float(rec["submit_time_s"]),
                map_mi_total=float(rec["map_mi_total"]),
                reduce_mi_total=float(rec["reduce_mi_total"]),
                storage_to_map_bits=float(rec["storage_to_map_gbits"]) * GBIT,
                map_to_reduce_bits=float(rec["map_to_reduce_gbits"]) * GBIT,
                reduce_to_storage_bits=float(rec["reduce_to_storage_gbits"]) * GBIT,
                num_mappers=int(rec["num_mappers"]),
                num_reducers=int(rec["num_reducers"]),
                reduce_factor=reduce_factor,
            ))
        except ValueError as exc:
            raise ConfigError(f"workload line {lineno}: {exc}") from exc
        if jobs[-1].submit_time < 0:
            raise ConfigError(f"workload line {lineno}: negative submit time")
    ids = [j.id for j in jobs]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate job ids in workload")
    return jobs


def load_workload(path, reduce_factor=None) -> list[Job]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_workload(fh.read(), reduce_factor)


def _num(x: float) -> str:
    return f"{x:g}" if x == int(x) else repr(x)


def dump_workload(jobs) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for job in jobs:
        writer.writerow([job.user_id, job.id, job.job_type, _num(job.submit_time),
                         _num(job.map_mi_total), _num(job.reduce_mi_total),
                         _num(job.storage_to_map_bits / GBIT), _num(job.map_to_reduce_bits / GBIT),
                         _num(job.reduce_to_storage_bits / GBIT), job.num_mappers,
                         job.num_reducers])
    return out.getvalue()
