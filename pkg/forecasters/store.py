# forecasters/store.py
import bisect
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import pandas as pd

from forecasters.methods import build_forecaster
from models.carbon import CarbonIntensitySeries, RegionId, SlotIndex
from models.errors import ForecastError
from models.forecast import (DEFAULT_CONTEXT_LENGTH, DEFAULT_HORIZON, Forecast, ForecastMethod,
                             ForecastRequest, Perfect)

logger = logging.getLogger(__name__)

STORE_COLUMNS = ["region", "issue_slot", "target_slot", "value", "method"]


class ForecastStore:
    """Forecasts per region, looked up by the staleness rule: latest issue slot <= query slot"""

    def __init__(self, forecasts: Iterable[Forecast] = ()):
        self._issues: Dict[RegionId, List[SlotIndex]] = {}
        self._forecasts: Dict[RegionId, List[Forecast]] = {}
        for f in forecasts:
            self.add(f)

    def add(self, forecast: Forecast) -> None:
        issues = self._issues.setdefault(forecast.region, [])
        stored = self._forecasts.setdefault(forecast.region, [])
        i = bisect.bisect_left(issues, forecast.issue_slot)
        if i < len(issues) and issues[i] == forecast.issue_slot:
            stored[i] = forecast
        else:
            issues.insert(i, forecast.issue_slot)
            stored.insert(i, forecast)

    def latest(self, region: RegionId, slot: SlotIndex) -> Optional[Forecast]:
        issues = self._issues.get(region, [])
        i = bisect.bisect_right(issues, slot)
        return self._forecasts[region][i - 1] if i else None

    def regions(self) -> List[RegionId]:
        return sorted(self._forecasts)

    def forecasts(self, region: RegionId) -> List[Forecast]:
        return list(self._forecasts.get(region, []))

    def __len__(self) -> int:
        return sum(len(v) for v in self._forecasts.values())

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = [
            (f.region, f.issue_slot, f.issue_slot + k, repr(v), f.method)
            for region in self.regions()
            for f in self._forecasts[region]
            for k, v in enumerate(f.values)
        ]
        pd.DataFrame(rows, columns=STORE_COLUMNS).to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "ForecastStore":
        path = Path(path)
        if not path.is_file():
            raise ForecastError(f"forecast file not found: {path}")
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = [c for c in STORE_COLUMNS if c not in frame.columns]
        if missing:
            raise ForecastError(f"{path}: missing column(s) {', '.join(missing)}")
        try:
            frame["issue_slot"] = frame["issue_slot"].astype(int)
            frame["target_slot"] = frame["target_slot"].astype(int)
            frame["value"] = frame["value"].map(float)
        except ValueError as e:
            raise ForecastError(f"{path}: {e}") from e

        store = cls()
        frame = frame.sort_values(["region", "issue_slot", "target_slot"], kind="mergesort")
        for (region, issue), group in frame.groupby(["region", "issue_slot"], sort=True):
            targets = group["target_slot"].tolist()
            if targets != list(range(issue, issue + len(targets))):
                raise ForecastError(f"{path}: forecast {region}@{issue} does not cover "
                                    "contiguous slots from its issue slot")
            store.add(Forecast(
                region=region,
                issue_slot=int(issue),
                values=tuple(max(v, 0.0) for v in group["value"]),
                method=str(group["method"].iloc[0]),
            ))
        return store


def issue_slots(length: int, every: int, context_length: int) -> range:
    return range(context_length, length, every)


def _request_at(series: CarbonIntensitySeries, method: ForecastMethod, issue: SlotIndex,
                context_length: int, horizon: int) -> ForecastRequest:
    if isinstance(method, Perfect):
        horizon = min(horizon, len(series) - issue)
    return ForecastRequest(
        region=series.region,
        context=tuple(series.values[issue - context_length:issue]),
        issue_slot=issue,
        horizon=horizon,
        context_length=context_length,
    )


def rolling_forecast_store(series: CarbonIntensitySeries, method: ForecastMethod, every: int = 1,
                           context_length: int = DEFAULT_CONTEXT_LENGTH,
                           horizon: int = DEFAULT_HORIZON,
                           store: Optional[ForecastStore] = None) -> ForecastStore:
    """Issue a forecast every ``every`` slots once a full context window is available"""
    if every < 1:
        raise ForecastError("forecast cadence must be >= 1 hour")
    if len(series) < context_length + 1:
        raise ForecastError(
            f"{series.region}: series of {len(series)} slots is shorter than context length {context_length} + 1"
        )
    forecaster = build_forecaster(method)
    store = store if store is not None else ForecastStore()
    slots = issue_slots(len(series), every, context_length)
    for issue in slots:
        store.add(forecaster.forecast(_request_at(series, method, issue, context_length, horizon)))
    logger.info("%s: stored %d %s forecasts", series.region, len(slots), forecaster.tag)
    return store


class RollingForecaster:
    """Same cadence and staleness rule as a rolling store, computed on first lookup"""

    def __init__(self, dataset: Dict[RegionId, CarbonIntensitySeries],
                 methods: Dict[RegionId, ForecastMethod], every: int = 1,
                 context_length: int = DEFAULT_CONTEXT_LENGTH, horizon: int = DEFAULT_HORIZON):
        self.dataset = dataset
        self.methods = methods
        self.forecasters = {r: build_forecaster(m) for r, m in methods.items()}
        self.every = every
        self.context_length = context_length
        self.horizon = horizon
        self._cache: Dict[tuple, Forecast] = {}

    def latest(self, region: RegionId, slot: SlotIndex) -> Optional[Forecast]:
        series = self.dataset.get(region)
        if series is None or slot < self.context_length or len(series) <= self.context_length:
            return None
        last_issue = len(series) - 1
        slot = min(slot, last_issue)
        issue = self.context_length + (slot - self.context_length) // self.every * self.every
        key = (region, issue)
        if key not in self._cache:
            req = _request_at(series, self.methods[region], issue, self.context_length, self.horizon)
            self._cache[key] = self.forecasters[region].forecast(req)
        return self._cache[key]
