# services/policy.py
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from models.carbon import RegionId
from models.errors import ConfigError, NoEligibleRegionError, PolicyDataError
from models.policy import LatencyTable, PolicySpec, RegionCatalog
from models.vm import VmRequest
from services.file_parser import FileParser

logger = logging.getLogger(__name__)


def load_policy(path: Union[str, Path]) -> PolicySpec:
    document = FileParser.parse_path(path)
    try:
        return PolicySpec(**document)
    except (ValidationError, TypeError) as e:
        raise ConfigError([f"{path}: {e}"]) from e


def load_latency_table(path: Union[str, Path]) -> LatencyTable:
    """Latency CSV with columns origin, target, latency_ms"""
    path = Path(path)
    if not path.is_file():
        raise PolicyDataError(f"latency table not found: {path}")
    frame = pd.read_csv(path, dtype={"origin": str, "target": str}, comment="#")
    missing = [c for c in ("origin", "target", "latency_ms") if c not in frame.columns]
    if missing:
        raise PolicyDataError(f"{path}: missing column(s) {', '.join(missing)}")
    try:
        entries = {
            (str(o), str(t)): float(ms)
            for o, t, ms in frame[["origin", "target", "latency_ms"]].itertuples(index=False)
        }
        return LatencyTable(entries=entries)
    except (ValueError, ValidationError) as e:
        raise PolicyDataError(f"{path}: {e}") from e


def load_region_catalog(path: Union[str, Path]) -> RegionCatalog:
    """Region metadata CSV with columns region, tags (semicolon-separated)"""
    path = Path(path)
    if not path.is_file():
        raise PolicyDataError(f"region metadata not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if "region" not in frame.columns or "tags" not in frame.columns:
        raise PolicyDataError(f"{path}: expected columns region, tags")
    return RegionCatalog(tags={
        row.region: tuple(t.strip() for t in row.tags.split(";") if t.strip())
        for row in frame.itertuples(index=False)
    })


def effective_latency_ceiling(vm: VmRequest, policy: PolicySpec) -> Optional[float]:
    ceilings = [c for c in (vm.max_latency_ms, policy.max_latency_ms) if c is not None]
    return min(ceilings) if ceilings else None


def eligible_regions(vm: VmRequest, all_regions: Sequence[RegionId], policy: PolicySpec,
                     lat: Optional[LatencyTable] = None,
                     catalog: Optional[RegionCatalog] = None) -> List[RegionId]:
    """Regions passing every constraint of the policy, in the order of all_regions"""
    mask = np.ones(len(all_regions), dtype=bool)

    if policy.allowed_regions is not None:
        allowed = set(policy.allowed_regions)
        mask &= np.array([r in allowed for r in all_regions], dtype=bool)

    if policy.require_tag is not None:
        if catalog is None:
            raise PolicyDataError(f"policy '{policy.name}' filters on tag '{policy.require_tag}' "
                                  "without region metadata")
        tagged = catalog.regions_tagged(policy.require_tag)
        mask &= np.array([r in tagged for r in all_regions], dtype=bool)

    ceiling = effective_latency_ceiling(vm, policy)
    if ceiling is not None:
        if vm.origin is None:
            raise PolicyDataError(f"VM {vm.id} has a latency ceiling but no origin region")
        if lat is None:
            raise PolicyDataError(f"VM {vm.id} has a latency ceiling but no latency table is loaded")
        latencies = np.full(len(all_regions), np.inf)
        for i, r in enumerate(all_regions):
            if not mask[i]:
                continue
            ms = lat.get(vm.origin, r)
            if ms is None:
                raise PolicyDataError(f"latency table has no entry {vm.origin}->{r}")
            latencies[i] = ms
        mask &= latencies <= ceiling

    result = [r for r, keep in zip(all_regions, mask) if keep]
    if not result:
        raise NoEligibleRegionError(f"no eligible region for VM {vm.id} under policy '{policy.name}'")
    logger.debug("VM %s eligible in %s", vm.id, result)
    return result


def policy_regions(policy: PolicySpec, all_regions: Sequence[RegionId],
                   catalog: Optional[RegionCatalog] = None) -> List[RegionId]:
    """Regions a policy can ever admit, ignoring latency; random origins are drawn from these"""
    regions = list(all_regions)
    if policy.allowed_regions is not None:
        allowed = set(policy.allowed_regions)
        regions = [r for r in regions if r in allowed]
    if policy.require_tag is not None:
        if catalog is None:
            raise PolicyDataError(f"policy '{policy.name}' filters on tag '{policy.require_tag}' "
                                  "without region metadata")
        tagged = catalog.regions_tagged(policy.require_tag)
        regions = [r for r in regions if r in tagged]
    return regions


def latency_applies(policy: PolicySpec) -> bool:
    return policy.max_latency_ms is not None
