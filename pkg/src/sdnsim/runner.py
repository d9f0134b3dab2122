"""Scenario configuration and one-shot simulation runs."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .bigdata.entities import AppConfig, ResourceManager, StorageAreaNetwork
from .bigdata.model import ConfigError, VmSpec
from .bigdata.policies import JOB_SELECTION, TASK_PLACEMENT
from .bigdata.schedulers import SCHEDULERS
from .bigdata.workload import load_workload
from .energy import EnergyMeter, PowerModel
from .kernel import EventTag, Simulation
from .network import FairShare, MinHopMaxBandwidth, SdnController, ShortestPathRandom
from .topology import PhysicalTopology, load_topology

MODES = ("sdn", "legacy")
DEFAULT_ROUTING = {"sdn": MinHopMaxBandwidth.name, "legacy": ShortestPathRandom.name}
TRAFFIC = {FairShare.name: FairShare}


def make_routing(name: str, rng, pin: str = "endpoint"):
    if name == MinHopMaxBandwidth.name:
        return MinHopMaxBandwidth()
    if name == ShortestPathRandom.name:
        return ShortestPathRandom(rng, pin)
    raise ConfigError(f"unknown routing protocol {name!r}")


_TOP_KEYS = {"topology", "workload", "mode", "seed", "output", "policies", "vms", "power",
             "options"}
_POLICY_KEYS = {"job_selection", "task_placement", "vm_scheduler", "routing", "traffic"}
_VM_KEYS = {"count", "pes", "mips_per_pe", "ram_mb"}
_POWER_KEYS = {"host_idle_w", "host_max_w", "switch_static_w", "switch_port_w",
               "switch_idle_w", "idle_mode"}
_OPTION_KEYS = {"per_task_mi", "legacy_pin", "heartbeat_interval", "reduce_factor",
                "task_slots"}


def _strict(section, value, allowed):
    if not isinstance(value, dict):
        raise ConfigError(f"{section} must be an object")
    extra = value.keys() - allowed
    if extra:
        raise ConfigError(f"{section}: unknown keys {sorted(extra)}")
    return value


@dataclass
class ScenarioConfig:
    topology: str
    workload: str
    mode: str = "both"
    seed: int = 0
    output: str = "out"
    job_selection: str = "fcfs"
    task_placement: str = "least_used"
    vm_scheduler: str = "time_shared"
    routing: dict = field(default_factory=lambda: dict(DEFAULT_ROUTING))
    traffic: str = "fair_share"
    vm_count: int = 16
    vm_pes: int = 4
    vm_mips_per_pe: float = 1250.0
    vm_ram_mb: int = 8192
    power: PowerModel = field(default_factory=PowerModel)
    per_task_mi: bool = False
    legacy_pin: str = "endpoint"
    heartbeat_interval: float = 1.0
    reduce_factor: Optional[float] = None
    task_slots: Optional[int] = None

    def __post_init__(self):
        if self.mode not in (*MODES, "both"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.job_selection not in JOB_SELECTION:
            raise ConfigError(f"unknown job selection policy {self.job_selection!r}")
        if self.task_placement not in TASK_PLACEMENT:
            raise ConfigError(f"unknown task placement policy {self.task_placement!r}")
        if self.vm_scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown VM scheduler {self.vm_scheduler!r}")
        if self.traffic not in TRAFFIC:
            raise ConfigError(f"unknown traffic policy {self.traffic!r}")
        for mode, name in self.routing.items():
            if mode not in MODES or name not in DEFAULT_ROUTING.values():
                raise ConfigError(f"bad routing entry {mode!r}: {name!r}")
        if self.legacy_pin not in ("endpoint", "task"):
            raise ConfigError(f"unknown legacy pin granularity {self.legacy_pin!r}")
        if self.heartbeat_interval < 0:
            raise ConfigError("heartbeat_interval must be non-negative")

    @property
    def vm_spec(self) -> VmSpec:
        return VmSpec(self.vm_pes, self.vm_mips_per_pe, self.vm_ram_mb, self.vm_scheduler)

    def routing_for(self, mode: str) -> str:
        return self.routing.get(mode, DEFAULT_ROUTING[mode])

    def canonical(self) -> dict:
        """Run-relevant settings, independent of file locations and output directory."""
        return {
            "policies": {"job_selection": self.job_selection,
                         "task_placement": self.task_placement,
                         "vm_scheduler": self.vm_scheduler,
                         "routing": {m: self.routing_for(m) for m in MODES},
                         "traffic": self.traffic},
            "vms": {"count": self.vm_count, "pes": self.vm_pes,
                    "mips_per_pe": self.vm_mips_per_pe, "ram_mb": self.vm_ram_mb},
            "power": {k: getattr(self.power, k) for k in sorted(_POWER_KEYS)},
            "options": {"per_task_mi": self.per_task_mi, "legacy_pin": self.legacy_pin,
                        "heartbeat_interval": self.heartbeat_interval,
                        "reduce_factor": self.reduce_factor, "task_slots": self.task_slots},
        }


def scenario_from_dict(doc: dict, base_dir: str = ".") -> ScenarioConfig:
    doc = _strict("scenario", doc, _TOP_KEYS)
    for key in ("topology", "workload"):
        if key not in doc:
            raise ConfigError(f"scenario is missing {key!r}")
    policies = _strict("policies", doc.get("policies", {}), _POLICY_KEYS)
    vms = _strict("vms", doc.get("vms", {}), _VM_KEYS)
    power = _strict("power", doc.get("power", {}), _POWER_KEYS)
    options = _strict("options", doc.get("options", {}), _OPTION_KEYS)
    routing = policies.get("routing", {})
    if isinstance(routing, str):
        raise ConfigError("policies.routing must map mode -> protocol name")

    def path(p):
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

    try:
        return ScenarioConfig(
            topology=path(doc["topology"]),
            workload=path(doc["workload"]),
            mode=doc.get("mode", "both"),
            seed=int(doc.get("seed", 0)),
            output=path(doc.get("output", "out")),
            job_selection=policies.get("job_selection", "fcfs"),
            task_placement=policies.get("task_placement", "least_used"),
            vm_scheduler=policies.get("vm_scheduler", "time_shared"),
            routing={**DEFAULT_ROUTING, **routing},
            traffic=policies.get("traffic", "fair_share"),
            vm_count=int(vms.get("count", 16)),
            vm_pes=int(vms.get("pes", 4)),
            vm_mips_per_pe=float(vms.get("mips_per_pe", 1250.0)),
            vm_ram_mb=int(vms.get("ram_mb", 8192)),
            power=PowerModel(**power),
            per_task_mi=bool(options.get("per_task_mi", False)),
            legacy_pin=options.get("legacy_pin", "endpoint"),
            heartbeat_interval=float(options.get("heartbeat_interval", 1.0)),
            reduce_factor=options.get("reduce_factor"),
            task_slots=options.get("task_slots"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return scenario_from_dict(doc, os.path.dirname(os.path.abspath(path)))


@dataclass
class RunResult:
    mode: str
    seed: int
    sim: Simulation
    topology: PhysicalTopology
    controller: SdnController
    rm: ResourceManager
    am: object
    ledger: object
    end_time: float
    config_hash: str = ""


def config_hash(config: ScenarioConfig, topology_text: str, workload_text: str) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(config.canonical(), sort_keys=True).encode())
    h.update(hashlib.sha256(topology_text.encode()).digest())
    h.update(hashlib.sha256(workload_text.encode()).digest())
    return h.hexdigest()


def simulate(topology: PhysicalTopology, jobs, mode: str, seed: int = 0, *,
             config: Optional[ScenarioConfig] = None, record_trace: bool = False) -> RunResult:
    """Run one application over ``topology`` in ``mode`` ("sdn" or "legacy")."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    config = config or ScenarioConfig(topology="", workload="", seed=seed)
    if len(topology.storage) != 1:
        raise ConfigError(f"exactly one storage node required, found {len(topology.storage)}")
    sim = Simulation(seed=seed, record_trace=record_trace)
    routing = make_routing(config.routing_for(mode), sim.rng, config.legacy_pin)
    controller = SdnController(topology, routing, TRAFFIC[config.traffic]())
    sim.register(controller)
    san_spec = topology.storage[0]
    san = StorageAreaNetwork(san_spec, controller)
    sim.register(san)
    controller.attach(san.endpoint, san_spec.name)
    rm = ResourceManager(topology, controller, san, config.heartbeat_interval)
    sim.register(rm)
    rm.start()
    meter = EnergyMeter(topology, controller, rm.node_managers, config.power)
    sim.add_observer(meter.observe)

    app = AppConfig(jobs=list(jobs), vm_count=config.vm_count, vm_spec=config.vm_spec,
                    job_selection=config.job_selection, task_placement=config.task_placement,
                    task_slots=config.task_slots, per_task_mi=config.per_task_mi)
    sim.send(rm.id, rm.id, 0.0, EventTag.APP_SUBMIT, app)
    end = sim.run()
    am = rm.apps[0] if rm.apps else None
    if am is None or not am.finished:
        raise RuntimeError("simulation ended before the application finished")
    ledger = meter.close(end)
    return RunResult(mode, seed, sim, topology, controller, rm, am, ledger, end)


def run_scenario(config: ScenarioConfig, mode: str, seed: Optional[int] = None) -> RunResult:
    with open(config.topology, encoding="utf-8") as fh:
        topology_text = fh.read()
    with open(config.workload, encoding="utf-8") as fh:
        workload_text = fh.read()
    topology = load_topology(config.topology)
    jobs = load_workload(config.workload, config.reduce_factor)
    seed = config.seed if seed is None else seed
    result = simulate(topology, jobs, mode, seed, config=config)
    result.config_hash = config_hash(config, topology_text, workload_text)
    return result
