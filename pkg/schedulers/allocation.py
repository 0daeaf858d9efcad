# schedulers/allocation.py
import math
from typing import Dict, Mapping, Optional

import numpy as np

from models.carbon import RegionId, SlotIndex
from models.errors import CommitError
from models.report import CapacitySetting


class AllocationMatrix:
    """alloc[j][t]: running-job count per region and slot, capped at M_j.

    A capacity of None means the region is unlimited. Counts only change
    through ``commit``.
    """

    def __init__(self, capacities: Mapping[RegionId, Optional[int]], slots: int = 0):
        for region, m in capacities.items():
            if m is not None and m < 0:
                raise ValueError(f"capacity of {region} must be >= 0")
        self.capacities: Dict[RegionId, Optional[int]] = dict(capacities)
        self._counts: Dict[RegionId, np.ndarray] = {
            r: np.zeros(slots, dtype=np.int64) for r in self.capacities
        }

    @classmethod
    def from_setting(cls, regions, setting: CapacitySetting, slots: int = 0) -> "AllocationMatrix":
        def _cap(value):
            return None if value == "inf" else int(value)

        if isinstance(setting, dict):
            return cls({r: _cap(setting.get(r, "inf")) for r in regions}, slots)
        return cls({r: _cap(setting) for r in regions}, slots)

    @property
    def regions(self):
        return list(self.capacities)

    def capacity(self, region: RegionId) -> float:
        m = self.capacities[region]
        return math.inf if m is None else m

    def counts(self, region: RegionId, start: SlotIndex, stop: SlotIndex) -> np.ndarray:
        row = self._counts[region]
        out = np.zeros(max(stop - start, 0), dtype=np.int64)
        hi = min(stop, len(row))
        if hi > start:
            out[:hi - start] = row[start:hi]
        return out

    def headroom(self, region: RegionId, start: SlotIndex, stop: SlotIndex) -> np.ndarray:
        """True for every slot in [start, stop) that can take one more job"""
        return self.counts(region, start, stop) < self.capacity(region)

    def commit(self, region: RegionId, start: SlotIndex, duration: int) -> None:
        if region not in self.capacities:
            raise CommitError(f"unknown region {region}")
        stop = start + duration
        if not self.headroom(region, start, stop).all():
            raise CommitError(
                f"{region}: committing slots [{start}, {stop}) would exceed capacity {self.capacities[region]}"
            )
        row = self._counts[region]
        if stop > len(row):
            row = np.concatenate([row, np.zeros(stop - len(row), dtype=np.int64)])
            self._counts[region] = row
        row[start:stop] += 1

    def peak(self, region: RegionId) -> int:
        row = self._counts[region]
        return int(row.max()) if row.size else 0
