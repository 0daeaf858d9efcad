# services/synthetic.py
from datetime import datetime, timezone
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from models.carbon import CarbonIntensitySeries, RegionId

# Start of the evaluation month used by the bundled presets
SYNTHETIC_EPOCH = datetime(2022, 5, 15, tzinfo=timezone.utc)


class RegionProfile(NamedTuple):
    mean: float
    # Depth of the midday dip (solar) in gCO2eq/kWh
    amplitude: float
    noise: float
    utc_offset: int


# Synthetic stand-ins with the spread of means and variability of the Subset
# and GDPR regions. They are not measurements.
REGION_PROFILES: Dict[RegionId, RegionProfile] = {
    "IT-NO": RegionProfile(290.0, 70.0, 12.0, 2),
    "GB": RegionProfile(210.0, 45.0, 15.0, 1),
    "DE": RegionProfile(370.0, 90.0, 18.0, 2),
    "FR": RegionProfile(65.0, 15.0, 4.0, 2),
    "US-TEX-ERCO": RegionProfile(390.0, 80.0, 20.0, -5),
    "US-CAL-CISO": RegionProfile(230.0, 110.0, 14.0, -7),
    "US-MIDA-PJM": RegionProfile(380.0, 35.0, 10.0, -4),
    "AU-NSW": RegionProfile(640.0, 120.0, 20.0, 10),
    "KR": RegionProfile(440.0, 25.0, 8.0, 9),
    "JP-KN": RegionProfile(340.0, 50.0, 10.0, 9),
    "IE": RegionProfile(320.0, 40.0, 25.0, 1),
    "SE-SE3": RegionProfile(25.0, 6.0, 3.0, 2),
    "NL": RegionProfile(350.0, 85.0, 15.0, 2),
    "PL": RegionProfile(690.0, 60.0, 15.0, 2),
    "ES": RegionProfile(160.0, 70.0, 12.0, 2),
}


def diurnal_series(region: RegionId, profile: RegionProfile, hours: int,
                   rng: np.random.Generator, start: datetime = SYNTHETIC_EPOCH) -> CarbonIntensitySeries:
    """Mean level with a cosine dip at local noon and AR(1) noise, clamped at 0"""
    t = np.arange(hours)
    local_hour = (t + profile.utc_offset) % 24
    dip = profile.amplitude * np.cos(2.0 * np.pi * (local_hour - 12) / 24.0)
    noise = np.zeros(hours)
    shocks = rng.normal(0.0, profile.noise, size=hours)
    for i in range(1, hours):
        noise[i] = 0.8 * noise[i - 1] + shocks[i]
    values = np.maximum(profile.mean - dip + noise, 0.0)
    return CarbonIntensitySeries(region=region, start=start, values=tuple(float(v) for v in values))


def synthetic_dataset(regions: Sequence[RegionId], days: int, seed: int,
                      start: datetime = SYNTHETIC_EPOCH) -> Dict[RegionId, CarbonIntensitySeries]:
    dataset = {}
    for i, region in enumerate(sorted(regions)):
        profile = REGION_PROFILES.get(region) or _fallback_profile(region)
        rng = np.random.default_rng([seed, i])
        dataset[region] = diurnal_series(region, profile, days * 24, rng, start)
    return dataset


def _fallback_profile(region: RegionId) -> RegionProfile:
    # stable per region code, independent of hash randomization
    code = sum(ord(c) for c in region)
    return RegionProfile(100.0 + code % 500, 20.0 + code % 60, 10.0, 0)


def constant_series(region: RegionId, value: float, hours: int,
                    start: datetime = SYNTHETIC_EPOCH) -> CarbonIntensitySeries:
    return CarbonIntensitySeries(region=region, start=start, values=(float(value),) * hours)


def sinusoid_series(region: RegionId, mean: float, amplitude: float, hours: int,
                    period: int = 24, start: datetime = SYNTHETIC_EPOCH) -> CarbonIntensitySeries:
    """Noiseless periodic series; the values repeat exactly every ``period`` slots"""
    cycle = mean + amplitude * np.sin(2.0 * np.pi * np.arange(period) / period)
    values = np.tile(np.maximum(cycle, 0.0), hours // period + 1)[:hours]
    return CarbonIntensitySeries(region=region, start=start, values=tuple(float(v) for v in values))


class VmTemplate(NamedTuple):
    id: str
    cores: int
    ram_gb: float
    duration: int


# Azure-like VM size mix: (cores, GB per core) with sampling weights
_SIZE_MIX = [((1, 2.0), 0.22), ((2, 4.0), 0.30), ((4, 4.0), 0.24), ((8, 4.0), 0.14),
             ((16, 4.0), 0.07), ((32, 4.0), 0.03)]


def synthetic_workload(rng: np.random.Generator, count: int, min_hours: float = 6.0,
                       max_hours: float = 24.0, prefix: str = "vm") -> List[VmTemplate]:
    """VM templates with lifetimes drawn uniformly in [min_hours, max_hours], ceiled to slots"""
    sizes = [s for s, _ in _SIZE_MIX]
    weights = np.array([w for _, w in _SIZE_MIX])
    picks = rng.choice(len(sizes), size=count, p=weights / weights.sum())
    lifetimes = rng.uniform(min_hours, max_hours, size=count)
    templates = []
    for k in range(count):
        cores, gb_per_core = sizes[picks[k]]
        duration = max(1, int(np.ceil(lifetimes[k])))
        templates.append(VmTemplate(f"{prefix}-{k:05d}", cores, cores * gb_per_core, duration))
    return templates


def templates_from_requests(requests, prefix: Optional[str] = None) -> List[VmTemplate]:
    return [VmTemplate(r.id if prefix is None else f"{prefix}-{r.id}", r.min_cpu, r.min_ram, r.duration)
            for r in requests]
