# models/policy.py
import math
from typing import Dict, List, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.carbon import RegionId


class LatencyTable(BaseModel):
    """Max expected latency (ms) for each (origin, target) region pair"""

    model_config = ConfigDict(frozen=True)

    entries: Dict[Tuple[RegionId, RegionId], float]

    @field_validator("entries")
    @classmethod
    def _non_negative(cls, v: Dict[Tuple[str, str], float]) -> Dict[Tuple[str, str], float]:
        for (origin, target), ms in v.items():
            if not math.isfinite(ms) or ms < 0:
                raise ValueError(f"latency {origin}->{target} must be a finite value >= 0, got {ms}")
        return v

    @model_validator(mode="after")
    def _diagonal_is_minimal(self) -> "LatencyTable":
        for origin in self.origins():
            own = self.entries.get((origin, origin))
            if own is None:
                continue
            for (o, target), ms in self.entries.items():
                if o == origin and ms < own:
                    raise ValueError(
                        f"latency {origin}->{origin} ({own} ms) exceeds {origin}->{target} ({ms} ms)"
                    )
        return self

    def origins(self) -> Set[RegionId]:
        return {o for o, _ in self.entries}

    def get(self, origin: RegionId, target: RegionId) -> Optional[float]:
        if origin == target and (origin, target) not in self.entries:
            return 0.0
        return self.entries.get((origin, target))


class RegionCatalog(BaseModel):
    """Region metadata: tags such as "eu" or "subset" per region code"""

    model_config = ConfigDict(frozen=True)

    tags: Dict[RegionId, Tuple[str, ...]] = {}

    def regions_tagged(self, tag: str) -> Set[RegionId]:
        return {r for r, t in self.tags.items() if tag in t}

    def known_tags(self) -> Set[str]:
        return {t for ts in self.tags.values() for t in ts}


class PolicySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    allowed_regions: Optional[List[RegionId]] = None
    max_latency_ms: Optional[float] = Field(default=None, gt=0)
    require_tag: Optional[str] = None

    @model_validator(mode="after")
    def _has_constraint(self) -> "PolicySpec":
        if self.allowed_regions is None and self.max_latency_ms is None and self.require_tag is None:
            raise ValueError(f"policy '{self.name}' sets no constraint")
        if self.allowed_regions is not None and not self.allowed_regions:
            raise ValueError(f"policy '{self.name}' has an empty allowed_regions list")
        return self

    def problems_against(self, regions: List[RegionId], catalog: Optional[RegionCatalog]) -> List[str]:
        """Unknown regions or tags referenced by this policy"""
        problems = []
        known = set(regions)
        for r in self.allowed_regions or []:
            if r not in known:
                problems.append(f"policy '{self.name}': region {r} not in dataset")
        if self.require_tag is not None:
            if catalog is None:
                problems.append(f"policy '{self.name}': tag filter needs region metadata")
            elif self.require_tag not in catalog.known_tags():
                problems.append(f"policy '{self.name}': unknown tag '{self.require_tag}'")
        return problems
