# schedulers/base_scheduler.py
import logging
from abc import ABC, abstractmethod
from typing import List, Mapping, Optional, Sequence, Union

from models.carbon import RegionId, SlotIndex
from models.vm import ScheduleDecision, ScheduleMode, Unschedulable, VmRequest
from schedulers.allocation import AllocationMatrix
from schedulers.carbon_view import CarbonView

logger = logging.getLogger(__name__)

Outcome = Union[ScheduleDecision, Unschedulable]
EligibleRegions = Union[Sequence[RegionId], Mapping[str, Sequence[RegionId]]]


def commit_allocation(decision: ScheduleDecision, alloc: AllocationMatrix) -> AllocationMatrix:
    """alloc[j*][t] += 1 for t in [t*, t* + D)"""
    alloc.commit(decision.region, decision.start_slot, decision.duration)
    return alloc


class BaseScheduler(ABC):
    def __init__(self, mode: ScheduleMode):
        self.mode = mode

    @abstractmethod
    def schedule_vm(self, vm: VmRequest, eligible: Sequence[RegionId], view: CarbonView,
                    alloc: AllocationMatrix, now: SlotIndex) -> Outcome:
        """Decide one VM against a frozen allocation matrix"""
        pass

    def schedule_batch(self, vms: Sequence[VmRequest], eligible: EligibleRegions, view: CarbonView,
                       alloc: AllocationMatrix, now: Optional[SlotIndex] = None) -> List[Outcome]:
        """Schedule VMs in arrival order, committing each decision before the next VM.

        ``eligible`` is either one region list shared by every VM or a mapping
        from VM id to its own list. Without ``now`` each VM is decided at its
        own arrival slot.
        """
        outcomes: List[Outcome] = []
        for vm in sorted(vms, key=lambda v: v.arrival):
            regions = eligible.get(vm.id, []) if isinstance(eligible, Mapping) else eligible
            at = vm.arrival if now is None else max(now, vm.arrival)
            outcome = self.schedule_vm(vm, list(regions), view, alloc, at)
            if isinstance(outcome, ScheduleDecision):
                commit_allocation(outcome, alloc)
            else:
                logger.debug("VM %s unschedulable: %s %s", vm.id, outcome.message, outcome.reasons)
            outcomes.append(outcome)
        return outcomes
