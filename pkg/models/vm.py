# models/vm.py
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from models.carbon import RegionId, SlotIndex


class VmRequest(BaseModel):
    """A VM allocation request: (MinCPU, MinRAM, D, DL, ML) plus arrival and origin"""

    model_config = ConfigDict(frozen=True)

    id: str
    min_cpu: int = Field(ge=1)
    min_ram: float = Field(gt=0)
    duration: int = Field(ge=1, description="D, whole hourly slots")
    deadline: SlotIndex = Field(ge=0, description="DL, exclusive end slot")
    max_latency_ms: Optional[float] = Field(default=None, gt=0)
    arrival: SlotIndex = Field(default=0, ge=0)
    origin: Optional[RegionId] = None

    @property
    def latest_start(self) -> SlotIndex:
        """DL - D; a VM with latest_start < arrival is unschedulable by definition"""
        return self.deadline - self.duration


class ScheduleMode(str, Enum):
    OPTIMIZED = "optimized"
    ROUND_ROBIN = "round_robin"


class ScheduleDecision(BaseModel):
    """The chosen (region j*, start t*) for one VM"""

    model_config = ConfigDict(frozen=True)

    vm_id: str
    region: RegionId
    start_slot: SlotIndex
    duration: int
    deadline: SlotIndex
    arrival: SlotIndex
    cost: float
    mode: ScheduleMode
    # Slots whose CI came from seasonal extension past forecast coverage
    extended_slots: int = 0

    @property
    def end_slot(self) -> SlotIndex:
        return self.start_slot + self.duration

    @property
    def delay_slots(self) -> int:
        return self.start_slot - self.arrival

    def as_row(self) -> Dict[str, object]:
        return {
            "vm_id": self.vm_id,
            "region": self.region,
            "start_slot": self.start_slot,
            "duration": self.duration,
            "deadline": self.deadline,
            "cost": self.cost,
            "mode": self.mode.value,
            "delay_slots": self.delay_slots,
        }


class Unschedulable(BaseModel):
    """Verdict for a VM with no feasible (region, slot); reasons are keyed by region"""

    model_config = ConfigDict(frozen=True)

    vm_id: str
    mode: ScheduleMode
    reasons: Dict[RegionId, str] = {}
    message: str = ""


def split_outcomes(outcomes: List[object]):
    decisions = [o for o in outcomes if isinstance(o, ScheduleDecision)]
    rejected = [o for o in outcomes if isinstance(o, Unschedulable)]
    return decisions, rejected
