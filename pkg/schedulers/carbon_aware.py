# schedulers/carbon_aware.py
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from models.carbon import RegionId, SlotIndex
from models.errors import CostError
from models.vm import ScheduleDecision, ScheduleMode, Unschedulable, VmRequest
from schedulers.allocation import AllocationMatrix
from schedulers.base_scheduler import BaseScheduler, EligibleRegions, Outcome
from schedulers.carbon_view import CarbonView


def compute_cost(ci: Sequence[float], t: SlotIndex, duration: int) -> float:
    """Summed CI over the D slots t .. t+D-1.

    The VM's constant average power is a common factor of every candidate
    and is left out.
    """
    if t < 0 or duration < 0 or t + duration > len(ci):
        raise CostError(f"window [{t}, {t + duration}) not covered by {len(ci)} CI values")
    return math.fsum(ci[t:t + duration])


def feasible_windows(vm: VmRequest, region: RegionId, alloc: AllocationMatrix,
                     now: SlotIndex) -> List[SlotIndex]:
    """Start slots in [max(now, arrival), DL - D] with headroom in every occupied slot"""
    lo = max(now, vm.arrival)
    hi = vm.latest_start
    if hi < lo:
        return []
    blocked = (~alloc.headroom(region, lo, vm.deadline)).astype(np.int64)
    prefix = np.concatenate(([0], np.cumsum(blocked)))
    offsets = np.arange(hi - lo + 1)
    free = prefix[offsets + vm.duration] - prefix[offsets] == 0
    return [lo + int(o) for o in offsets[free]]


class CarbonAwareScheduler(BaseScheduler):
    """Exact per-VM enumeration of every (region, start) pair.

    Ties go to the lower cost, then the earlier start, then the region
    listed first in ``eligible``.
    """

    def __init__(self):
        super().__init__(ScheduleMode.OPTIMIZED)

    def schedule_vm(self, vm: VmRequest, eligible: Sequence[RegionId], view: CarbonView,
                    alloc: AllocationMatrix, now: SlotIndex) -> Outcome:
        lo = max(now, vm.arrival)
        if not eligible:
            return Unschedulable(vm_id=vm.id, mode=self.mode, message="no eligible region")
        if vm.latest_start < lo:
            return Unschedulable(
                vm_id=vm.id, mode=self.mode, message="deadline",
                reasons={r: f"deadline: latest start {vm.latest_start} < {lo}" for r in eligible},
            )

        reasons: Dict[RegionId, str] = {}
        best: Optional[tuple] = None
        for region in eligible:
            starts = feasible_windows(vm, region, alloc, lo)
            if not starts:
                reasons[region] = f"capacity: no {vm.duration}-slot window with headroom in [{lo}, {vm.deadline})"
                continue
            try:
                window = view.window(region, lo, vm.deadline, now=now)
            except CostError as e:
                reasons[region] = f"carbon data: {e}"
                continue
            for t in starts:
                cost = compute_cost(window.values, t - lo, vm.duration)
                if best is None or cost < best[0] or (cost == best[0] and t < best[1]):
                    best = (cost, t, region, window.extended_from)

        if best is None:
            return Unschedulable(vm_id=vm.id, mode=self.mode, reasons=reasons,
                                 message="no feasible window in any eligible region")

        cost, t, region, extended_from = best
        extended = 0 if extended_from is None else max(0, t + vm.duration - max(t, extended_from))
        return ScheduleDecision(
            vm_id=vm.id, region=region, start_slot=t, duration=vm.duration,
            deadline=vm.deadline, arrival=vm.arrival, cost=cost,
            mode=self.mode, extended_slots=extended,
        )


def schedule_vm(vm: VmRequest, eligible: Sequence[RegionId], view: CarbonView,
                alloc: AllocationMatrix, now: SlotIndex) -> Outcome:
    return CarbonAwareScheduler().schedule_vm(vm, eligible, view, alloc, now)


def schedule_batch(vms: Sequence[VmRequest], eligible: EligibleRegions, view: CarbonView,
                   alloc: AllocationMatrix, now: Optional[SlotIndex] = None) -> List[Outcome]:
    return CarbonAwareScheduler().schedule_batch(vms, eligible, view, alloc, now)
