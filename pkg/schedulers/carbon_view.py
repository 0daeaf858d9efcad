# schedulers/carbon_view.py
from abc import ABC, abstractmethod
from typing import Dict, List, NamedTuple, Optional, Protocol

from models.carbon import CarbonIntensitySeries, RegionId, SlotIndex
from models.errors import CostError, SlotRangeError
from models.forecast import Forecast


class CarbonWindow(NamedTuple):
    values: List[float]
    # First absolute slot filled by seasonal extension, None when fully covered
    extended_from: Optional[SlotIndex] = None


class CarbonView(ABC):
    """CI lookup over [start, stop) per region, as seen by the scheduler at slot ``now``"""

    @abstractmethod
    def window(self, region: RegionId, start: SlotIndex, stop: SlotIndex,
               now: Optional[SlotIndex] = None) -> CarbonWindow:
        pass


class HistoricalView(CarbonView):
    """Ideal mode: the historical series, i.e. perfect knowledge of the future"""

    def __init__(self, dataset: Dict[RegionId, CarbonIntensitySeries]):
        self.dataset = dataset

    def window(self, region, start, stop, now=None) -> CarbonWindow:
        series = self.dataset.get(region)
        if series is None:
            raise CostError(f"no carbon data for region {region}")
        try:
            return CarbonWindow(series.slice(start, stop - start))
        except SlotRangeError as e:
            raise CostError(str(e)) from e


class ForecastSource(Protocol):
    def latest(self, region: RegionId, slot: SlotIndex) -> Optional[Forecast]:
        ...


class ForecastView(CarbonView):
    """Realistic mode: the freshest forecast issued at or before ``now``.

    Slots past the forecast's coverage repeat its trailing ``period`` values
    and are reported through ``extended_from``.
    """

    def __init__(self, source: ForecastSource, period: int = 24):
        self.source = source
        self.period = period

    def window(self, region, start, stop, now=None) -> CarbonWindow:
        query = start if now is None else now
        forecast = self.source.latest(region, query)
        if forecast is None:
            raise CostError(f"no forecast for {region} issued at or before slot {query}")
        if start < forecast.issue_slot:
            raise CostError(f"{region}: window starts at {start}, before forecast issue slot {forecast.issue_slot}")

        values = forecast.values
        covered_until = forecast.issue_slot + len(values)
        out = list(values[start - forecast.issue_slot:max(stop, start) - forecast.issue_slot])
        if stop <= covered_until:
            return CarbonWindow(out)

        cycle = values[-min(self.period, len(values)):]
        first_missing = max(start, covered_until)
        for slot in range(first_missing, stop):
            out.append(cycle[(slot - covered_until) % len(cycle)])
        return CarbonWindow(out, extended_from=first_missing)
