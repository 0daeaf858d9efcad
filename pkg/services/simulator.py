# services/simulator.py
import logging
import math
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from models.carbon import CarbonIntensitySeries, RegionId, SlotIndex
from models.errors import PlacementError, SlotRangeError
from models.power import Datacenter, Placements
from models.report import EmissionReport
from models.vm import ScheduleDecision, VmRequest
from services.power import power_at, power_curve

logger = logging.getLogger(__name__)

WATTS_PER_KW = 1000.0


def place_vms(dc: Datacenter, decisions: Sequence[ScheduleDecision],
              vms: Mapping[str, VmRequest]) -> Placements:
    """First-fit decreasing onto identical hosts, respecting each VM's whole lifetime.

    VMs starting in the same slot are packed largest first (cores, then RAM).
    A VM stays on its host for its lifetime.
    """
    host = dc.host
    for d in decisions:
        if d.region != dc.region:
            raise PlacementError(f"decision for VM {d.vm_id} targets {d.region}, not {dc.region}")
        vm = vms[d.vm_id]
        if vm.min_cpu > host.cores or vm.min_ram > host.ram_gb:
            raise PlacementError(
                f"VM {vm.id} ({vm.min_cpu} cores, {vm.min_ram} GB) is larger than a host "
                f"({host.cores} cores, {host.ram_gb} GB)"
            )

    placements = Placements(region=dc.region)
    if not decisions:
        dc.placements = {}
        return placements

    origin = min(d.start_slot for d in decisions)
    span = max(d.end_slot for d in decisions) - origin
    free_cores = np.full((dc.hosts, span), host.cores, dtype=np.int64)
    free_ram = np.full((dc.hosts, span), host.ram_gb, dtype=float)

    order = sorted(decisions, key=lambda d: (d.start_slot, -vms[d.vm_id].min_cpu,
                                             -vms[d.vm_id].min_ram, d.vm_id))
    for d in order:
        vm = vms[d.vm_id]
        a, b = d.start_slot - origin, d.end_slot - origin
        fits = (free_cores[:, a:b].min(axis=1) >= vm.min_cpu) & (free_ram[:, a:b].min(axis=1) >= vm.min_ram)
        if not fits.any():
            placements.rejected.append(vm.id)
            continue
        h = int(np.argmax(fits))
        free_cores[h, a:b] -= vm.min_cpu
        free_ram[h, a:b] -= vm.min_ram
        placements.assignments[vm.id] = h

    if placements.rejected:
        logger.info("%s: %d VMs found no free host", dc.region, len(placements.rejected))
    dc.placements = dict(placements.assignments)
    return placements


def _ci_window(ci: Mapping[RegionId, CarbonIntensitySeries], region: RegionId,
               start: SlotIndex, length: int) -> np.ndarray:
    series = ci.get(region)
    if series is None:
        raise SlotRangeError(f"no historical carbon intensity for {region}")
    try:
        return np.asarray(series.slice(start, length), dtype=float)
    except SlotRangeError as e:
        raise SlotRangeError(f"CI coverage gap: {e}") from e


def simulate(dcs: Sequence[Datacenter], decisions: Sequence[ScheduleDecision],
             vms: Mapping[str, VmRequest], ci: Mapping[RegionId, CarbonIntensitySeries],
             count_idle: bool = False, span: Optional[Tuple[SlotIndex, SlotIndex]] = None,
             unschedulable: int = 0, labels: Optional[dict] = None) -> EmissionReport:
    """Replay decisions on the datacenters and account emissions against historical CI.

    Each hour contributes power (kW) x 1 h x CI(t). In attribution mode a VM
    draws power_at(cores / host cores) - power_at(0) for its lifetime; with
    ``count_idle`` every host is charged power_at(host utilization) over the
    whole span, empty hosts included.
    """
    by_region: Dict[RegionId, List[ScheduleDecision]] = {dc.region: [] for dc in dcs}
    for d in decisions:
        if d.region not in by_region:
            raise PlacementError(f"no datacenter for region {d.region}")
        by_region[d.region].append(d)

    if span is None:
        if decisions:
            span = (min(d.start_slot for d in decisions), max(d.end_slot for d in decisions))
        else:
            span = (0, 0)
    origin, stop = span
    length = stop - origin

    region_gco2: Dict[RegionId, float] = {}
    region_jobs: Dict[RegionId, int] = {}
    vm_gco2: Dict[str, float] = {}
    rejected = 0
    placed: List[ScheduleDecision] = []

    for dc in sorted(dcs, key=lambda x: x.region):
        region_decisions = by_region[dc.region]
        placements = place_vms(dc, region_decisions, vms)
        rejected += len(placements.rejected)
        kept = [d for d in region_decisions if d.vm_id in placements.assignments]
        placed.extend(kept)
        region_jobs[dc.region] = len(kept)

        if length <= 0:
            region_gco2[dc.region] = 0.0
            continue
        for d in kept:
            if d.start_slot < origin or d.end_slot > stop:
                raise SlotRangeError(f"VM {d.vm_id} runs outside the simulated span [{origin}, {stop})")
        carbon = _ci_window(ci, dc.region, origin, length)

        host = dc.host
        idle = power_at(host.power, 0.0)
        attributed_kw = np.zeros(length, dtype=float)
        used_cores = np.zeros((dc.hosts, length), dtype=np.int64)
        for d in sorted(kept, key=lambda x: x.vm_id):
            vm = vms[d.vm_id]
            kw = (power_at(host.power, vm.min_cpu / host.cores) - idle) / WATTS_PER_KW
            a, b = d.start_slot - origin, d.end_slot - origin
            attributed_kw[a:b] += kw
            used_cores[placements.assignments[vm.id], a:b] += vm.min_cpu
            vm_gco2[vm.id] = kw * math.fsum(carbon[a:b])

        if count_idle:
            host_kw = power_curve(host.power, used_cores / host.cores).sum(axis=0) / WATTS_PER_KW
            per_slot = host_kw * carbon
        else:
            per_slot = attributed_kw * carbon
        region_gco2[dc.region] = math.fsum(per_slot)

    delays = [d.delay_slots for d in placed]
    histogram = Counter(delays)
    return EmissionReport(
        **(labels or {}),
        count_idle=count_idle,
        total_gco2=math.fsum(region_gco2[r] for r in sorted(region_gco2)),
        region_gco2=region_gco2,
        region_jobs=region_jobs,
        vm_gco2=dict(sorted(vm_gco2.items())),
        delay_histogram=dict(sorted(histogram.items())),
        scheduled=len(placed),
        unschedulable=unschedulable,
        placement_rejected=rejected,
        mean_delay=(sum(delays) / len(delays)) if delays else 0.0,
    )


def datacenters_for(regions: Iterable[RegionId], host, hosts: int) -> List[Datacenter]:
    return [Datacenter(region=r, host=host, hosts=hosts) for r in regions]
