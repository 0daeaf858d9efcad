# models/carbon.py
import math
from datetime import datetime, timedelta, timezone
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from models.errors import SlotRangeError

# Zone codes such as "US-TEX-ERCO" or "IT-NO"
RegionId = str
SlotIndex = int

SLOT = timedelta(hours=1)


class CarbonIntensitySeries(BaseModel):
    """Hourly average carbon intensity (gCO2eq/kWh) for one region"""

    model_config = ConfigDict(frozen=True)

    region: RegionId
    start: datetime
    values: Tuple[float, ...]

    @field_validator("region")
    @classmethod
    def _region_not_empty(cls, v: str) -> str:
        if not v or not v.strip():
            raise ValueError("region code must not be empty")
        return v

    @field_validator("start")
    @classmethod
    def _start_on_the_hour(cls, v: datetime) -> datetime:
        if v.tzinfo is None:
            raise ValueError("series start must carry a UTC offset")
        v = v.astimezone(timezone.utc)
        if v.minute or v.second or v.microsecond:
            raise ValueError(f"series start {v.isoformat()} is not aligned to the hour")
        return v

    @field_validator("values")
    @classmethod
    def _values_physical(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        for i, x in enumerate(v):
            if not math.isfinite(x):
                raise ValueError(f"non-finite carbon intensity at slot {i}")
            if x < 0:
                raise ValueError(f"negative carbon intensity at slot {i}")
        return v

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> datetime:
        """Exclusive end timestamp"""
        return self.start + SLOT * len(self.values)

    def timestamp_of(self, slot: SlotIndex) -> datetime:
        return self.start + SLOT * slot

    def slice(self, start: SlotIndex, length: int) -> List[float]:
        if start < 0 or length < 0 or start + length > len(self.values):
            raise SlotRangeError(
                f"{self.region}: slots [{start}, {start + length}) outside series of length {len(self.values)}"
            )
        return list(self.values[start:start + length])
