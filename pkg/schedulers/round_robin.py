# schedulers/round_robin.py
from typing import Dict, List, Optional, Sequence

from models.carbon import RegionId, SlotIndex
from models.errors import CostError
from models.vm import ScheduleDecision, ScheduleMode, Unschedulable, VmRequest
from schedulers.allocation import AllocationMatrix
from schedulers.base_scheduler import BaseScheduler, EligibleRegions, Outcome
from schedulers.carbon_aware import compute_cost
from schedulers.carbon_view import CarbonView


class RoundRobinScheduler(BaseScheduler):
    """Carbon-agnostic baseline.

    Starts every VM at its arrival slot in the next region of a global
    cursor taken modulo the VM's eligible list, skipping regions without
    headroom. The cursor advances exactly once per VM.
    """

    def __init__(self):
        super().__init__(ScheduleMode.ROUND_ROBIN)
        self.cursor = 0

    def schedule_vm(self, vm: VmRequest, eligible: Sequence[RegionId], view: CarbonView,
                    alloc: AllocationMatrix, now: SlotIndex) -> Outcome:
        first = self.cursor
        self.cursor += 1
        if not eligible:
            return Unschedulable(vm_id=vm.id, mode=self.mode, message="no eligible region")

        t = vm.arrival
        if vm.latest_start < t:
            return Unschedulable(vm_id=vm.id, mode=self.mode, message="deadline",
                                 reasons={r: f"deadline: latest start {vm.latest_start} < {t}" for r in eligible})

        reasons: Dict[RegionId, str] = {}
        for i in range(len(eligible)):
            region = eligible[(first + i) % len(eligible)]
            if not alloc.headroom(region, t, t + vm.duration).all():
                reasons[region] = f"capacity: full during [{t}, {t + vm.duration})"
                continue
            try:
                window = view.window(region, t, t + vm.duration, now=now)
            except CostError as e:
                reasons[region] = f"carbon data: {e}"
                continue
            return ScheduleDecision(
                vm_id=vm.id, region=region, start_slot=t, duration=vm.duration,
                deadline=vm.deadline, arrival=vm.arrival,
                cost=compute_cost(window.values, 0, vm.duration), mode=self.mode,
            )
        return Unschedulable(vm_id=vm.id, mode=self.mode, reasons=reasons,
                             message="every eligible region is full at arrival")


def round_robin_schedule(vms: Sequence[VmRequest], eligible: EligibleRegions, view: CarbonView,
                         alloc: AllocationMatrix, now: Optional[SlotIndex] = None) -> List[Outcome]:
    return RoundRobinScheduler().schedule_batch(vms, eligible, view, alloc, now)
