# models/power.py
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.carbon import RegionId


class PowerModel(BaseModel):
    """Utilization -> watts curve in SPECpower format (0%..100% load points)"""

    model_config = ConfigDict(frozen=True)

    name: str
    points: Tuple[Tuple[float, float], ...]

    @field_validator("points")
    @classmethod
    def _well_formed(cls, v: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        if len(v) < 2:
            raise ValueError("power model needs at least the idle and full-load points")
        utils = [u for u, _ in v]
        watts = [w for _, w in v]
        if utils[0] != 0.0 or utils[-1] != 1.0:
            raise ValueError("power model must start at utilization 0 and end at 1")
        if any(b <= a for a, b in zip(utils, utils[1:])):
            raise ValueError("utilization points must be strictly increasing")
        if any(w < 0 for w in watts):
            raise ValueError("power must be >= 0")
        if any(b < a for a, b in zip(watts, watts[1:])):
            raise ValueError("power must be non-decreasing in utilization")
        return v

    @property
    def idle_watts(self) -> float:
        return self.points[0][1]

    @property
    def max_watts(self) -> float:
        return self.points[-1][1]


class HostSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    cores: int = Field(default=32, ge=1)
    ram_gb: float = Field(default=256.0, gt=0)
    power: PowerModel


class Datacenter(BaseModel):
    region: RegionId
    host: HostSpec
    hosts: int = Field(default=200, ge=1)
    # vm_id -> host index, filled by place_vms
    placements: Dict[str, int] = {}


class Placements(BaseModel):
    region: RegionId
    assignments: Dict[str, int] = {}
    # VMs that fit a host in principle but found no free host over their lifetime
    rejected: List[str] = []
