"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 simulation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .bigdata.model import BigDataError, ConfigError
from .fixture import generate_usecase_fixture
from .kernel import SimulationError
from .network import NetworkError
from .reports import build_report, compare, emit, emit_comparison
from .runner import MODES, load_scenario, run_scenario
from .topology import TopologyError

log = logging.getLogger("sdnsim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdnsim",
        description="Simulate MapReduce applications on an SDN-enabled or legacy data-center network.")
    parser.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
    parser.add_argument("--mode", choices=(*MODES, "both"), help="network mode (overrides scenario)")
    parser.add_argument("--seed", type=int, help="run seed (overrides scenario)")
    parser.add_argument("--out", metavar="DIR", help="report directory (overrides scenario)")
    parser.add_argument("--emit-fixture", metavar="DIR",
                        help="write the bundled use-case topology, workload and scenario to DIR")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(args) -> int:
    if args.emit_fixture:
        seed = args.seed if args.seed is not None else 42
        for path in generate_usecase_fixture(args.emit_fixture, seed):
            print(path)
        if not args.scenario:
            return 0
    if not args.scenario:
        print("error: --scenario or --emit-fixture is required", file=sys.stderr)
        return 1

    try:
        config = load_scenario(args.scenario)
        overrides = {k: v for k, v in (("mode", args.mode), ("seed", args.seed),
                                       ("output", args.out)) if v is not None}
        config = replace(config, **overrides)
        for path in (config.topology, config.workload):
            if not os.path.isfile(path):
                raise ConfigError(f"file not found: {path}")
    except (ConfigError, TopologyError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    modes = MODES if config.mode == "both" else (config.mode,)
    reports = {}
    try:
        for mode in modes:
            log.info("running %s mode, seed %d", mode, config.seed)
            reports[mode] = build_report(run_scenario(config, mode))
    except (ConfigError, TopologyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SimulationError, NetworkError, BigDataError, RuntimeError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 2

    for mode, report in reports.items():
        directory = os.path.join(config.output, mode)
        emit(report, directory)
        print(directory)
    if config.mode == "both":
        summary = compare(reports["sdn"], reports["legacy"])
        path = emit_comparison(summary, os.path.join(config.output, "comparison.csv"))
        print(path)
        print(json.dumps({"transmission_improvement_pct": round(summary.mean_tr_pct, 2),
                          "completion_improvement_pct": round(summary.mean_ct_pct, 2),
                          "energy_improvement_pct": round(summary.energy_pct, 2)}))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
