# forecasters/metrics.py
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from forecasters.store import ForecastStore
from models.carbon import CarbonIntensitySeries, RegionId
from models.errors import ForecastError
from models.forecast import Forecast, ForecastMetrics

METRICS_COLUMNS = ["region", "method", "forecasts", "mae", "rmse", "mape"]
VS_ACTUAL_COLUMNS = ["region", "issue_slot", "target_slot", "lead", "forecast", "actual"]


def evaluate_forecast(pred: Forecast, actual: Sequence[float]) -> ForecastMetrics:
    """MAE, RMSE and MAPE (percent) of a forecast against what happened.

    Slots where the actual value is 0 are left out of MAPE and counted in
    ``mape_excluded``.
    """
    p = np.asarray(pred.values, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise ForecastError(f"forecast has {p.size} values, actuals have {a.size}")
    if p.size == 0:
        raise ForecastError("cannot evaluate an empty forecast")

    err = p - a
    nonzero = a != 0
    excluded = int(p.size - nonzero.sum())
    mape = float(np.mean(np.abs(err[nonzero]) / np.abs(a[nonzero])) * 100.0) if nonzero.any() else None
    return ForecastMetrics(
        mae=float(np.mean(np.abs(err))),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        mape=mape,
        mape_excluded=excluded,
    )


def evaluate_store(store: ForecastStore,
                   dataset: Mapping[RegionId, CarbonIntensitySeries]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Score every stored forecast against the historical series.

    Returns per-region metrics (means over forecasts) and a long
    forecast-vs-actual table for plotting. Forecast slots past the end of
    the history are not scored.
    """
    metric_rows = []
    point_rows: Dict[str, list] = {c: [] for c in VS_ACTUAL_COLUMNS}
    for region in store.regions():
        series = dataset.get(region)
        if series is None:
            raise ForecastError(f"no historical carbon intensity for {region}")
        scored = []
        for f in store.forecasts(region):
            n = min(f.horizon, len(series) - f.issue_slot)
            if n <= 0:
                continue
            actual = series.values[f.issue_slot:f.issue_slot + n]
            scored.append(evaluate_forecast(f.model_copy(update={"values": f.values[:n]}), actual))
            point_rows["region"].extend([region] * n)
            point_rows["issue_slot"].extend([f.issue_slot] * n)
            point_rows["target_slot"].extend(range(f.issue_slot, f.issue_slot + n))
            point_rows["lead"].extend(range(n))
            point_rows["forecast"].extend(f.values[:n])
            point_rows["actual"].extend(actual)
        if not scored:
            continue
        mapes = [m.mape for m in scored if m.mape is not None]
        metric_rows.append({
            "region": region,
            "method": store.forecasts(region)[0].method,
            "forecasts": len(scored),
            "mae": float(np.mean([m.mae for m in scored])),
            "rmse": float(np.mean([m.rmse for m in scored])),
            "mape": float(np.mean(mapes)) if mapes else None,
        })
    return pd.DataFrame(metric_rows, columns=METRICS_COLUMNS), pd.DataFrame(point_rows, columns=VS_ACTUAL_COLUMNS)
