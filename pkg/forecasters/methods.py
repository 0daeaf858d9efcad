# forecasters/methods.py
from typing import Optional

from forecasters.base_forecaster import BaseForecaster
from forecasters.moving_average import MovingAverageForecaster
from forecasters.perfect import PerfectForecaster
from forecasters.persistence import PersistenceForecaster
from forecasters.seasonal_naive import SeasonalNaiveForecaster
from models.carbon import CarbonIntensitySeries
from models.errors import ForecastError
from models.forecast import (Forecast, ForecastMethod, ForecastRequest, MovingAverage, Perfect,
                             Persistence, SeasonalNaive)
from models.report import ForecastSettings


def build_forecaster(method: ForecastMethod) -> BaseForecaster:
    if isinstance(method, Persistence):
        return PersistenceForecaster()
    if isinstance(method, SeasonalNaive):
        return SeasonalNaiveForecaster(method.period)
    if isinstance(method, MovingAverage):
        return MovingAverageForecaster(method.window)
    if isinstance(method, Perfect):
        return PerfectForecaster(method.actuals)
    raise ForecastError(f"unknown forecast method {method!r}")


def forecast(req: ForecastRequest, method: ForecastMethod) -> Forecast:
    return build_forecaster(method).forecast(req)


def method_from_settings(settings: ForecastSettings,
                         actuals: Optional[CarbonIntensitySeries] = None) -> ForecastMethod:
    if settings.method == "persistence":
        return Persistence()
    if settings.method == "seasonal_naive":
        return SeasonalNaive(period=settings.period)
    if settings.method == "moving_average":
        return MovingAverage(window=settings.window)
    if actuals is None:
        raise ForecastError("perfect foresight needs the historical series")
    return Perfect(actuals=actuals)
