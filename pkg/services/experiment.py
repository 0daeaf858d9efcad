# services/experiment.py
import logging
import math
from collections import defaultdict
from multiprocessing import Pool
from pathlib import Path
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from forecasters.methods import method_from_settings
from forecasters.store import ForecastStore, RollingForecaster
from models.carbon import CarbonIntensitySeries, RegionId
from models.errors import (CarbonSchedError, ConfigError, DatasetMissingError, NoEligibleRegionError)
from models.policy import LatencyTable, PolicySpec, RegionCatalog
from models.power import HostSpec
from models.report import (ComparisonRow, EmissionReport, ExperimentConfig, ExperimentResult, Mode,
                           capacity_label)
from models.state import EventType, ProgressEvent
from models.vm import VmRequest, split_outcomes
from schedulers.allocation import AllocationMatrix
from schedulers.carbon_aware import CarbonAwareScheduler
from schedulers.carbon_view import CarbonView, ForecastSource, ForecastView, HistoricalView
from schedulers.round_robin import RoundRobinScheduler
from services.carbon_data import INDEX_FILE, align, file_digest, load_dataset
from services.file_parser import FileParser
from services.policy import (eligible_regions, latency_applies, load_latency_table, load_policy,
                             load_region_catalog, policy_regions)
from services.power import DATA_DIR, DEFAULT_POWER_MODEL, load_power_model
from services.simulator import datacenters_for, simulate
from services.synthetic import REGION_PROFILES, VmTemplate, synthetic_dataset, synthetic_workload, \
    templates_from_requests
from services.traces import ingest_traces

logger = logging.getLogger(__name__)

DEFAULT_REGION_META = DATA_DIR / "regions.csv"
DEFAULT_LATENCY_TABLE = DATA_DIR / "latency.csv"

ProgressCallback = Callable[[dict], None]


def reduction_pct(baseline: float, optimized: float) -> float:
    """Percent emission reduction of ``optimized`` against ``baseline``; 0 when the baseline is 0"""
    if baseline == 0:
        return 0.0
    return 100.0 * (baseline - optimized) / baseline


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Parse and validate a config file, listing every problem at once"""
    document = FileParser.parse_path(path)
    try:
        return ExperimentConfig(**document)
    except ValidationError as e:
        raise ConfigError([
            f"{path}: {'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        ]) from e


def _resolve(base_dir: Path, path: Optional[Path]) -> Optional[Path]:
    if path is None:
        return None
    return path if path.is_absolute() else base_dir / path


def _needs_latency(policies: List[PolicySpec]) -> bool:
    return any(latency_applies(p) for p in policies)


def validate_config(config: ExperimentConfig, base_dir: Union[str, Path] = ".") -> List[str]:
    """Every missing file and unresolved policy reference, empty when the config is runnable"""
    base_dir = Path(base_dir)
    problems: List[str] = []

    def _require(label: str, path: Optional[Path], is_dir: bool = False):
        if path is None:
            return
        resolved = _resolve(base_dir, path)
        if not (resolved.is_dir() if is_dir else resolved.is_file()):
            problems.append(f"{label} not found: {resolved}")

    for p in config.policy_file:
        _require("policy file", p)
    _require("regions directory", config.regions_dir, is_dir=True)
    if config.regions_dir is not None and _resolve(base_dir, config.regions_dir).is_dir():
        _require("dataset index", config.regions_dir / INDEX_FILE)
    for label, path in (("region metadata", config.region_meta_file), ("latency table", config.latency_file),
                        ("trace file", config.traces), ("forecast store", config.forecasts),
                        ("power model", config.power_model_file)):
        _require(label, path)
    if problems:
        return problems

    policies = []
    for p in config.policy_file:
        try:
            policies.append(load_policy(_resolve(base_dir, p)))
        except ConfigError as e:
            problems.extend(e.problems)

    try:
        regions = _declared_regions(config, base_dir)
    except CarbonSchedError as e:
        return problems + [str(e)]
    meta = _resolve(base_dir, config.region_meta_file) or DEFAULT_REGION_META
    catalog = load_region_catalog(meta) if meta.is_file() else None
    for policy in policies:
        problems.extend(policy.problems_against(regions, catalog))
    if _needs_latency(policies) and config.latency_file is None and not DEFAULT_LATENCY_TABLE.is_file():
        problems.append("latency policy needs a latency table (latency_file)")
    return problems


def _declared_regions(config: ExperimentConfig, base_dir: Path) -> List[RegionId]:
    if config.synthetic_days is not None:
        return list(config.regions or sorted(REGION_PROFILES))
    index = FileParser.parse_path(_resolve(base_dir, config.regions_dir) / INDEX_FILE)
    known = sorted(index.get("regions", {}))
    if config.regions is None:
        return known
    missing = [r for r in config.regions if r not in known]
    if missing:
        raise DatasetMissingError([f"region {r} not in dataset {config.regions_dir}" for r in missing])
    return list(config.regions)


class ExperimentInputs(NamedTuple):
    dataset: Dict[RegionId, CarbonIntensitySeries]
    regions: List[RegionId]
    policies: List[PolicySpec]
    catalog: Optional[RegionCatalog]
    latency: Optional[LatencyTable]
    host: HostSpec
    workload: Optional[List[VmTemplate]]
    forecasts: Optional[ForecastSource]
    digests: Dict[str, str]


def batch_horizon(config: ExperimentConfig) -> int:
    """Slots a batch may touch past its start: arrival window, longest lifetime, widest margin"""
    return config.arrival_window_hours + math.ceil(config.max_lifetime_hours) + max(config.deadline_margin_hours)


def warm_up(config: ExperimentConfig) -> int:
    return config.forecast.context_length if Mode.FORECAST in config.mode else 0


def load_inputs(config: ExperimentConfig, base_dir: Union[str, Path] = ".") -> ExperimentInputs:
    base_dir = Path(base_dir)
    problems = validate_config(config, base_dir)
    if problems:
        raise DatasetMissingError(problems)

    digests: Dict[str, str] = {}
    regions = _declared_regions(config, base_dir)
    if config.synthetic_days is not None:
        dataset = synthetic_dataset(regions, config.synthetic_days, config.seed)
    else:
        data_dir = _resolve(base_dir, config.regions_dir)
        full = load_dataset(data_dir)
        dataset = align({r: full[r] for r in regions})
        digests.update({f"regions/{r}.csv": file_digest(data_dir / f"{r}.csv") for r in regions})

    length = min(len(s) for s in dataset.values())
    if length - batch_horizon(config) < warm_up(config):
        raise ConfigError([
            f"dataset covers {length} hours; batches need {warm_up(config)} warm-up hours "
            f"plus {batch_horizon(config)} hours of arrivals, lifetimes and deadline margin"
        ])

    policies = []
    for p in config.policy_file:
        path = _resolve(base_dir, p)
        policies.append(load_policy(path))
        digests[f"policy/{path.name}"] = file_digest(path)

    meta = _resolve(base_dir, config.region_meta_file) or DEFAULT_REGION_META
    catalog = load_region_catalog(meta) if meta.is_file() else None
    latency = None
    if _needs_latency(policies):
        latency_path = _resolve(base_dir, config.latency_file) or DEFAULT_LATENCY_TABLE
        latency = load_latency_table(latency_path)
        digests["latency"] = file_digest(latency_path)

    power_path = _resolve(base_dir, config.power_model_file) or DEFAULT_POWER_MODEL
    host = HostSpec(cores=config.host_cores, ram_gb=config.host_ram_gb, power=load_power_model(power_path))
    digests["power_model"] = file_digest(power_path)

    workload = None
    if config.traces is not None:
        trace_path = _resolve(base_dir, config.traces)
        requests = ingest_traces(trace_path, min_lifetime_hours=config.min_lifetime_hours,
                                 max_lifetime_hours=config.max_lifetime_hours)
        if not requests:
            raise ConfigError([f"{trace_path}: no VM within the lifetime filter"])
        workload = templates_from_requests(requests)
        digests["traces"] = file_digest(trace_path)

    forecasts: Optional[ForecastSource] = None
    if Mode.FORECAST in config.mode:
        settings = config.forecast
        if config.forecasts is not None:
            store_path = _resolve(base_dir, config.forecasts)
            forecasts = ForecastStore.from_csv(store_path)
            digests["forecasts"] = file_digest(store_path)
        else:
            methods = {r: method_from_settings(settings, actuals=s) for r, s in dataset.items()}
            forecasts = RollingForecaster(dataset, methods, every=settings.every,
                                          context_length=settings.context_length, horizon=settings.horizon)

    return ExperimentInputs(dataset=dataset, regions=regions, policies=policies, catalog=catalog,
                            latency=latency, host=host, workload=workload, forecasts=forecasts,
                            digests=dict(sorted(digests.items())))


class BatchWorkload(NamedTuple):
    start: int
    templates: List[VmTemplate]
    arrivals: List[int]


def sample_batch(config: ExperimentConfig, inputs: ExperimentInputs, batch: int) -> BatchWorkload:
    """Seeded per batch, so every policy, capacity, margin and mode sees the same VMs"""
    rng = np.random.default_rng([config.seed, batch])
    length = min(len(s) for s in inputs.dataset.values())
    start = int(rng.integers(warm_up(config), length - batch_horizon(config) + 1))

    if inputs.workload is not None:
        picks = rng.choice(len(inputs.workload), size=config.batch_size,
                           replace=len(inputs.workload) < config.batch_size)
        drawn = [inputs.workload[i] for i in picks]
    else:
        drawn = synthetic_workload(rng, config.batch_size, config.min_lifetime_hours, config.max_lifetime_hours)
    arrivals = start + rng.integers(0, config.arrival_window_hours, size=config.batch_size)

    templates, kept_arrivals = [], []
    for k, (template, arrival) in enumerate(zip(drawn, arrivals)):
        if template.cores > inputs.host.cores or template.ram_gb > inputs.host.ram_gb:
            continue
        templates.append(template._replace(id=f"b{batch:04d}-{k:05d}"))
        kept_arrivals.append(int(arrival))
    dropped = len(drawn) - len(templates)
    if dropped:
        logger.info("batch %d: dropped %d VMs larger than one host", batch, dropped)
    return BatchWorkload(start, templates, kept_arrivals)


def draw_origins(config: ExperimentConfig, inputs: ExperimentInputs, policy_index: int,
                 batch: int, count: int) -> List[Optional[RegionId]]:
    policy = inputs.policies[policy_index]
    if not latency_applies(policy):
        return [None] * count
    candidates = policy_regions(policy, inputs.regions, inputs.catalog)
    if not candidates:
        raise ConfigError([f"policy '{policy.name}' admits no region to draw origins from"])
    rng = np.random.default_rng([config.seed, batch, policy_index])
    return [str(candidates[i]) for i in rng.integers(0, len(candidates), size=count)]


def build_requests(workload: BatchWorkload, origins: List[Optional[RegionId]], margin: int) -> List[VmRequest]:
    return [
        VmRequest(id=t.id, min_cpu=t.cores, min_ram=t.ram_gb, duration=t.duration,
                  arrival=a, deadline=a + t.duration + margin, origin=o)
        for t, a, o in zip(workload.templates, workload.arrivals, origins)
    ]


def _eligibility(vms: List[VmRequest], inputs: ExperimentInputs, policy: PolicySpec) -> Dict[str, List[RegionId]]:
    eligible = {}
    for vm in vms:
        try:
            eligible[vm.id] = eligible_regions(vm, inputs.regions, policy, inputs.latency, inputs.catalog)
        except NoEligibleRegionError:
            eligible[vm.id] = []
    return eligible


def _view_for(mode: Mode, config: ExperimentConfig, inputs: ExperimentInputs) -> CarbonView:
    if mode == Mode.FORECAST:
        return ForecastView(inputs.forecasts, period=config.forecast.period)
    return HistoricalView(inputs.dataset)


class BatchResult(BaseModel):
    batch: int
    reports: List[EmissionReport]
    decisions: List[dict]


def run_batch(config: ExperimentConfig, inputs: ExperimentInputs, batch: int) -> BatchResult:
    workload = sample_batch(config, inputs, batch)
    span = (workload.start, workload.start + batch_horizon(config))
    reports: List[EmissionReport] = []
    rows: List[dict] = []

    for pi, policy in enumerate(inputs.policies):
        origins = draw_origins(config, inputs, pi, batch, len(workload.templates))
        eligible = None
        for margin in config.deadline_margin_hours:
            vms = build_requests(workload, origins, margin)
            catalog = {vm.id: vm for vm in vms}
            if eligible is None:
                eligible = _eligibility(vms, inputs, policy)
            for setting in config.m_per_region:
                for mode in dict.fromkeys(config.mode):
                    alloc = AllocationMatrix.from_setting(inputs.regions, setting)
                    scheduler = RoundRobinScheduler() if mode == Mode.ROUND_ROBIN else CarbonAwareScheduler()
                    outcomes = scheduler.schedule_batch(vms, eligible, _view_for(mode, config, inputs), alloc)
                    decisions, rejected = split_outcomes(outcomes)
                    labels = dict(policy=policy.name, mode=mode, capacity=capacity_label(setting),
                                  deadline_margin_hours=margin, batch=batch)
                    dcs = datacenters_for(inputs.regions, inputs.host, config.hosts_per_region)
                    reports.append(simulate(dcs, decisions, catalog, inputs.dataset, count_idle=config.count_idle,
                                            span=span, unschedulable=len(rejected), labels=labels))
                    for d in decisions:
                        rows.append({**labels, "mode": mode.value, "scheduler": d.mode.value,
                                     **{k: v for k, v in d.as_row().items() if k != "mode"}})
    return BatchResult(batch=batch, reports=reports, decisions=rows)


_worker_config: Optional[ExperimentConfig] = None
_worker_inputs: Optional[ExperimentInputs] = None


def init_batch_worker(config: ExperimentConfig, inputs: ExperimentInputs):
    global _worker_config, _worker_inputs
    _worker_config = config
    _worker_inputs = inputs


def task_run_batch(batch: int) -> BatchResult:
    return run_batch(_worker_config, _worker_inputs, batch)


def compare_reports(reports: List[EmissionReport]) -> List[ComparisonRow]:
    """One row per (policy, capacity, margin, mode), with the reduction against round robin when present"""
    groups: Dict[Tuple[str, str, int, Mode], List[EmissionReport]] = defaultdict(list)
    for r in sorted(reports, key=lambda x: x.sort_key):
        groups[(r.policy, r.capacity, r.deadline_margin_hours, r.mode)].append(r)

    def _total(key) -> float:
        return math.fsum(r.total_gco2 for r in groups[key])

    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3].value)):
        policy, capacity, margin, mode = key
        batch_reports = groups[key]
        total = _total(key)
        delayed = sum(k * v for r in batch_reports for k, v in r.delay_histogram.items())
        placed = sum(r.scheduled for r in batch_reports)
        baseline_key = (policy, capacity, margin, Mode.ROUND_ROBIN)
        baseline = _total(baseline_key) if mode != Mode.ROUND_ROBIN and baseline_key in groups else None
        rows.append(ComparisonRow(
            policy=policy, capacity=capacity, deadline_margin_hours=margin, mode=mode,
            batches=len(batch_reports), total_gco2=total, baseline_gco2=baseline,
            reduction_pct=None if baseline is None else reduction_pct(baseline, total),
            scheduled=placed, unschedulable=sum(r.unschedulable for r in batch_reports),
            mean_delay=delayed / placed if placed else 0.0,
        ))
    return rows


class ExperimentRunner:
    """Runs every batch of an experiment grid and aggregates the reports.

    Batches are independent and run in a process pool when ``jobs`` > 1;
    results are merged in batch order so the output does not depend on it.
    """

    def __init__(self, config: ExperimentConfig, base_dir: Union[str, Path] = ".", jobs: int = 1,
                 progress_callback: Optional[ProgressCallback] = None):
        self.config = config
        self.base_dir = Path(base_dir)
        self.jobs = max(1, jobs)
        self.progress_callback = progress_callback
        self.events: List[dict] = []

    def emit_event(self, event_type: EventType, step_name: str, progress: float,
                   message: str = "", details: Optional[dict] = None, batch: Optional[int] = None):
        event = ProgressEvent(event_type=event_type, step_name=step_name, progress=round(progress, 2),
                              message=message, batch=batch, details=details).model_dump(mode="json")
        self.events.append(event)
        logger.info("[%5.1f%%] %s %s", progress, step_name, message)
        if self.progress_callback:
            self.progress_callback(event)

    def _batches(self, inputs: ExperimentInputs) -> Iterator[BatchResult]:
        batches = range(self.config.batches)
        if self.jobs == 1:
            for b in batches:
                yield run_batch(self.config, inputs, b)
            return
        with Pool(self.jobs, initializer=init_batch_worker, initargs=(self.config, inputs)) as pool:
            yield from pool.imap(task_run_batch, batches)

    def run(self) -> ExperimentResult:
        self.events = []
        config = self.config
        try:
            self.emit_event(EventType.STEP_START, "Loading inputs", 0.0,
                            f"experiment '{config.name}', seed {config.seed}")
            inputs = load_inputs(config, self.base_dir)
            self.emit_event(EventType.STEP_COMPLETE, "Inputs loaded", 5.0,
                            f"{len(inputs.regions)} regions, {len(inputs.policies)} policies")

            reports: List[EmissionReport] = []
            decisions: List[dict] = []
            for done, result in enumerate(self._batches(inputs), start=1):
                reports.extend(result.reports)
                decisions.extend(result.decisions)
                self.emit_event(EventType.BATCH_COMPLETE, f"Batch {result.batch}",
                                5.0 + 90.0 * done / config.batches,
                                f"{done}/{config.batches} batches", batch=result.batch)

            reports.sort(key=lambda r: r.sort_key)
            comparison = compare_reports(reports)
            self.emit_event(EventType.STEP_COMPLETE, "Experiment complete", 100.0,
                            f"{len(reports)} reports", details={"rows": len(comparison)})
            return ExperimentResult(name=config.name, reports=reports, comparison=comparison,
                                    decisions=decisions, input_digests=inputs.digests)
        except CarbonSchedError as e:
            self.emit_event(EventType.ERROR, "Experiment error", 0.0, str(e))
            raise


def run_experiment(config: ExperimentConfig, base_dir: Union[str, Path] = ".", jobs: int = 1,
                   progress_callback: Optional[ProgressCallback] = None) -> ExperimentResult:
    return ExperimentRunner(config, base_dir, jobs, progress_callback).run()
