# services/session.py
import logging
import threading
from pathlib import Path
from typing import Dict, List, Optional, Union

from forecasters.methods import method_from_settings
from forecasters.store import RollingForecaster
from models.carbon import CarbonIntensitySeries, RegionId
from models.errors import ConfigError, NoEligibleRegionError
from models.policy import LatencyTable, PolicySpec, RegionCatalog
from models.report import CapacitySetting, ForecastSettings, Mode
from models.vm import ScheduleDecision, ScheduleMode, Unschedulable, VmRequest
from schedulers.allocation import AllocationMatrix
from schedulers.base_scheduler import Outcome, commit_allocation
from schedulers.carbon_aware import CarbonAwareScheduler
from schedulers.carbon_view import CarbonView, ForecastView, HistoricalView
from schedulers.round_robin import RoundRobinScheduler
from services.carbon_data import align, load_dataset
from services.policy import eligible_regions

logger = logging.getLogger(__name__)


class SchedulingSession:
    """Online scheduling over one dataset: VMs arrive one at a time and each decision is committed.

    The allocation matrix and the round-robin cursor live as long as the session.
    """

    def __init__(self, dataset: Dict[RegionId, CarbonIntensitySeries], mode: Mode = Mode.IDEAL,
                 capacity: CapacitySetting = "inf", policy: Optional[PolicySpec] = None,
                 latency: Optional[LatencyTable] = None, catalog: Optional[RegionCatalog] = None,
                 forecast: Optional[ForecastSettings] = None, regions: Optional[List[RegionId]] = None):
        if not dataset:
            raise ConfigError(["dataset holds no region"])
        self.dataset = align(dataset)
        self.regions = list(regions) if regions is not None else sorted(self.dataset)
        unknown = [r for r in self.regions if r not in self.dataset]
        if unknown:
            raise ConfigError([f"region {r} not in dataset" for r in unknown])
        self.mode = mode
        self.policy = policy
        self.latency = latency
        self.catalog = catalog
        self.alloc = AllocationMatrix.from_setting(self.regions, capacity)
        self.scheduler = RoundRobinScheduler() if mode == Mode.ROUND_ROBIN else CarbonAwareScheduler()
        self.view = self._build_view(forecast or ForecastSettings())
        self.decisions: List[ScheduleDecision] = []
        self.unschedulable: List[Unschedulable] = []
        self._lock = threading.Lock()

    @classmethod
    def from_directory(cls, data_dir: Union[str, Path], **kwargs) -> "SchedulingSession":
        return cls(load_dataset(data_dir), **kwargs)

    def _build_view(self, settings: ForecastSettings) -> CarbonView:
        if self.mode != Mode.FORECAST:
            return HistoricalView(self.dataset)
        methods = {r: method_from_settings(settings, actuals=s) for r, s in self.dataset.items()}
        source = RollingForecaster(self.dataset, methods, every=settings.every,
                                   context_length=settings.context_length, horizon=settings.horizon)
        return ForecastView(source, period=settings.period)

    def eligible(self, vm: VmRequest) -> List[RegionId]:
        if self.policy is None:
            return list(self.regions)
        try:
            return eligible_regions(vm, self.regions, self.policy, self.latency, self.catalog)
        except NoEligibleRegionError:
            return []

    def schedule(self, vm: VmRequest) -> Outcome:
        with self._lock:
            return self._schedule(vm)

    def _schedule(self, vm: VmRequest) -> Outcome:
        if any(d.vm_id == vm.id for d in self.decisions):
            raise ConfigError([f"VM {vm.id} is already scheduled in this session"])
        outcome = self.scheduler.schedule_vm(vm, self.eligible(vm), self.view, self.alloc, vm.arrival)
        if isinstance(outcome, ScheduleDecision):
            commit_allocation(outcome, self.alloc)
            self.decisions.append(outcome)
        else:
            logger.debug("VM %s unschedulable: %s", vm.id, outcome.message)
            self.unschedulable.append(outcome)
        return outcome

    def status(self) -> dict:
        return {
            "mode": self.mode.value,
            "scheduler": ScheduleMode.ROUND_ROBIN.value if self.mode == Mode.ROUND_ROBIN
            else ScheduleMode.OPTIMIZED.value,
            "regions": self.regions,
            "slots": min(len(s) for s in self.dataset.values()),
            "start": next(iter(self.dataset.values())).start.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "decisions": [d.as_row() for d in self.decisions],
            "unschedulable": [u.model_dump(mode="json") for u in self.unschedulable],
            "peak_jobs": {r: self.alloc.peak(r) for r in self.regions},
        }
