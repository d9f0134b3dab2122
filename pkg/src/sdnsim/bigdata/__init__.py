from .entities import (AppConfig, ApplicationMaster, NodeManager, ResourceManager,
                       StorageAreaNetwork, Vm)
from .model import (BigDataTask, ConfigError, Job, JobMetrics, TaskKind, TaskState, VmSpec,
                    job_completion_time, job_phase_times, job_transmission_time, mapper_size,
                    reducer_size)
from .policies import FcfsJobSelection, LeastUsedPlacement
from .schedulers import SpaceShared, TimeShared

__all__ = ["AppConfig", "ApplicationMaster", "NodeManager", "ResourceManager",
           "StorageAreaNetwork", "Vm", "BigDataTask", "ConfigError", "Job", "JobMetrics",
           "TaskKind", "TaskState", "VmSpec", "job_completion_time", "job_phase_times",
           "job_transmission_time", "mapper_size", "reducer_size", "FcfsJobSelection",
           "LeastUsedPlacement", "SpaceShared", "TimeShared"]
