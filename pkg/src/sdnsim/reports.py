"""Run reports (five CSVs plus run.meta) and the SDN-vs-legacy comparison.

Times are written as fixed-point seconds with six decimals.  Job metrics
are recomputed from the *rounded* transfer and execution records, so the
jobs file can be re-derived exactly from the other two files.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

from .energy import total_energy
from .network import Packet

Q = Decimal("0.000001")

JOB_COLUMNS = ("job_id", "job_type", "submit", "queuing_delay", "start", "finish",
               "j_tr", "j_mp", "j_rd", "j_ct")
TRANSMISSION_COLUMNS = ("packet_id", "job_id", "leg", "src", "dst", "src_task", "dst_task",
                        "bits", "start", "finish", "duration")
PROCESSING_COLUMNS = ("task_id", "job_id", "kind", "vm_id", "start", "duration")
ENERGY_COLUMNS = ("node", "kind", "joules", "busy_s", "idle_s")
FORWARDING_COLUMNS = ("packet_id", "path", "intervals")
COMPARISON_COLUMNS = ("metric", "job_id", "job_type", "first", "second", "improvement_pct")

FILES = ("jobs.csv", "transmissions.csv", "processing.csv", "energy.csv", "forwarding.csv")

LEGS = ("storage_to_map", "map_to_reduce", "reduce_to_storage")


class ReportError(Exception):
    pass


class JobSetMismatch(ReportError):
    pass


def fixed(x) -> Decimal:
    return Decimal(x).quantize(Q, rounding=ROUND_HALF_EVEN)


def fmt(x) -> str:
    return str(fixed(x))


def leg_of(flow) -> str:
    if flow.src_task is None:
        return "storage_to_map"
    if flow.dst_task is None:
        return "reduce_to_storage"
    return "map_to_reduce"


@dataclass
class RunReport:
    jobs: list = field(default_factory=list)
    transmissions: list = field(default_factory=list)
    processing: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    forwarding: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    energy_totals: dict = field(default_factory=dict)


def job_rows(transmissions, processing, jobs_info):
    """Job rows from (rounded) transfer and execution rows.

    ``jobs_info`` maps job id -> (job_type, submit, start, finish).
    """
    legs = {jid: {leg: [] for leg in LEGS} for jid in jobs_info}
    for row in transmissions:
        legs[int(row["job_id"])][row["leg"]].append(Decimal(row["duration"]))
    phases = {jid: {"map": [], "reduce": []} for jid in jobs_info}
    for row in processing:
        phases[int(row["job_id"])][row["kind"]].append(Decimal(row["duration"]))
    rows = []
    for jid in sorted(jobs_info):
        job_type, submit, start, finish = jobs_info[jid]
        j_tr = sum(max(legs[jid][leg]) for leg in LEGS)
        j_mp = max(phases[jid]["map"])
        j_rd = max(phases[jid]["reduce"])
        submit, start, finish = fixed(submit), fixed(start), fixed(finish)
        rows.append({"job_id": str(jid), "job_type": job_type, "submit": str(submit),
                     "queuing_delay": str(start - submit), "start": str(start),
                     "finish": str(finish), "j_tr": str(j_tr), "j_mp": str(j_mp),
                     "j_rd": str(j_rd), "j_ct": str(j_tr + j_mp + j_rd)})
    return rows


def _transmission_row(packet: Packet) -> dict:
    start, finish = fixed(packet.start_time), fixed(packet.finish_time)
    flow = packet.flow
    return {"packet_id": str(packet.id), "job_id": str(flow.job_id), "leg": leg_of(flow),
            "src": flow.source, "dst": flow.destination, "src_task": flow.src_task or "",
            "dst_task": flow.dst_task or "", "bits": f"{packet.size_bits:.0f}",
            "start": str(start), "finish": str(finish), "duration": str(finish - start)}


def _forwarding_row(packet: Packet) -> dict:
    intervals = ";".join(f"{fmt(s)}:{fmt(e)}:{bw:.3f}" for s, e, bw in packet.intervals)
    return {"packet_id": str(packet.id), "path": str(packet.route), "intervals": intervals}


def build_report(result) -> RunReport:
    am = result.am
    packets = [p for p in result.controller.packets if p.done]
    transmissions = [_transmission_row(p) for p in packets]
    processing = []
    for task in sorted(am.tasks.values(), key=lambda t: (t.job_id, t.kind.value, t.index)):
        start, end = fixed(task.exec_start), fixed(task.exec_end)
        processing.append({"task_id": task.id, "job_id": str(task.job_id),
                           "kind": task.kind.value, "vm_id": am.vms[task.vm].name,
                           "start": str(start), "duration": str(end - start)})
    info = {jid: (am.jobs[jid].job_type, m.submit_time, m.start_time, m.finish_time)
            for jid, m in am.metrics.items()}
    rows, totals = total_energy(result.ledger, result.end_time)
    energy = [{"node": r.node, "kind": r.kind, "joules": fmt(r.joules),
               "busy_s": fmt(r.busy_s), "idle_s": fmt(r.idle_s)} for r in rows]
    forwarding = [_forwarding_row(p) for p in packets if p.intervals]
    meta = {
        "mode": result.mode,
        "seed": result.seed,
        "config_hash": result.config_hash,
        "end_time": fmt(result.end_time),
        "jobs": len(am.metrics),
        "packets": len(packets),
        "energy_joules": {k: fmt(v) for k, v in sorted(totals.items())},
        "improvement_convention": "(baseline - candidate) / baseline * 100",
    }
    return RunReport(job_rows(transmissions, processing, info), transmissions, processing,
                     energy, forwarding, meta, {k: fixed(v) for k, v in totals.items()})


def _csv_text(columns, rows) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def emit(report: RunReport, directory) -> list[str]:
    """Write the five report CSVs and ``run.meta`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    contents = {
        "jobs.csv": _csv_text(JOB_COLUMNS, report.jobs),
        "transmissions.csv": _csv_text(TRANSMISSION_COLUMNS, report.transmissions),
        "processing.csv": _csv_text(PROCESSING_COLUMNS, report.processing),
        "energy.csv": _csv_text(ENERGY_COLUMNS, report.energy),
        "forwarding.csv": _csv_text(FORWARDING_COLUMNS, report.forwarding),
        "run.meta": json.dumps(report.meta, indent=2, sort_keys=True) + "\n",
    }
    paths = []
    for name, text in contents.items():
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def load_report(directory) -> RunReport:
    with open(os.path.join(directory, "run.meta"), encoding="utf-8") as fh:
        meta = json.load(fh)
    energy = read_csv(os.path.join(directory, "energy.csv"))
    return RunReport(
        jobs=read_csv(os.path.join(directory, "jobs.csv")),
        transmissions=read_csv(os.path.join(directory, "transmissions.csv")),
        processing=read_csv(os.path.join(directory, "processing.csv")),
        energy=energy,
        forwarding=read_csv(os.path.join(directory, "forwarding.csv")),
        meta=meta,
        energy_totals={k: Decimal(v) for k, v in meta.get("energy_joules", {}).items()},
    )


def recompute_jobs(report: RunReport) -> list[dict]:
    """Rebuild the job rows from the transmission and processing rows alone."""
    info = {int(r["job_id"]): (r["job_type"], Decimal(r["submit"]), Decimal(r["start"]),
                               Decimal(r["finish"])) for r in report.jobs}
    return job_rows(report.transmissions, report.processing, info)


# -- comparison --------------------------------------------------------------

@dataclass
class ComparisonSummary:
    first_mode: str
    second_mode: str
    baseline: str
    rows: list
    mean_tr_pct: float
    mean_ct_pct: float
    energy_pct: float

    def to_csv(self) -> str:
        header = (f"# first={self.first_mode} second={self.second_mode} "
                  f"improvement_pct=(second - first) / {self.baseline} * 100\n")
        return header + _csv_text(COMPARISON_COLUMNS, self.rows)


def _pct(first: Decimal, second: Decimal, base: Decimal) -> float:
    if base == 0:
        return 0.0
    return float((second - first) / base * 100)


def compare(first: RunReport, second: RunReport) -> ComparisonSummary:
    """Per-job and mean improvement of ``first`` over ``second``.

    Percentages are ``(second - first) / baseline * 100``.  The baseline is
    whichever report ran in legacy mode (the second one if neither or both
    did), so ``compare(sdn, legacy)`` reports SDN gains over legacy and
    swapping the arguments negates every percentage.
    """
    a_jobs = {r["job_id"]: r for r in first.jobs}
    b_jobs = {r["job_id"]: r for r in second.jobs}
    if a_jobs.keys() != b_jobs.keys():
        raise JobSetMismatch(
            f"job sets differ: {sorted(a_jobs.keys() ^ b_jobs.keys(), key=int)}")
    a_mode = first.meta.get("mode", "first")
    b_mode = second.meta.get("mode", "second")
    base_first = a_mode == "legacy" and b_mode != "legacy"
    baseline = a_mode if base_first else b_mode

    def base(a, b):
        return a if base_first else b

    rows = []
    pcts = {"j_tr": [], "j_ct": []}
    for metric in ("j_tr", "j_ct", "j_mp", "j_rd"):
        for jid in sorted(a_jobs, key=int):
            a, b = Decimal(a_jobs[jid][metric]), Decimal(b_jobs[jid][metric])
            pct = _pct(a, b, base(a, b))
            if metric in pcts:
                pcts[metric].append(pct)
            rows.append({"metric": metric, "job_id": jid, "job_type": a_jobs[jid]["job_type"],
                         "first": str(a), "second": str(b), "improvement_pct": f"{pct:.6f}"})
    mean_tr = sum(pcts["j_tr"]) / len(pcts["j_tr"]) if pcts["j_tr"] else 0.0
    mean_ct = sum(pcts["j_ct"]) / len(pcts["j_ct"]) if pcts["j_ct"] else 0.0
    rows.append({"metric": "j_tr", "job_id": "mean", "job_type": "", "first": "",
                 "second": "", "improvement_pct": f"{mean_tr:.6f}"})
    rows.append({"metric": "j_ct", "job_id": "mean", "job_type": "", "first": "",
                 "second": "", "improvement_pct": f"{mean_ct:.6f}"})
    energy_pct = 0.0
    for kind in ("host", "switch", "datacenter"):
        a = first.energy_totals.get(kind, Decimal(0))
        b = second.energy_totals.get(kind, Decimal(0))
        pct = _pct(a, b, base(a, b))
        if kind == "datacenter":
            energy_pct = pct
        rows.append({"metric": "energy_j", "job_id": kind, "job_type": "", "first": str(a),
                     "second": str(b), "improvement_pct": f"{pct:.6f}"})
    return ComparisonSummary(a_mode, b_mode, baseline, rows, mean_tr, mean_ct, energy_pct)


def emit_comparison(summary: ComparisonSummary, path) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(summary.to_csv())
    return path
