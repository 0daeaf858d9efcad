# forecasters/seasonal_naive.py
import numpy as np

from forecasters.base_forecaster import BaseForecaster
from models.forecast import ForecastRequest


def tile_period(cycle: np.ndarray, length: int) -> np.ndarray:
    repeats = length // len(cycle) + 1
    return np.tile(cycle, repeats)[:length]


class SeasonalNaiveForecaster(BaseForecaster):
    """Tiles the trailing ``period`` values of the context.

    With hourly data and period=24, tomorrow's 15:00 is predicted as today's
    15:00.
    """

    def __init__(self, period: int = 24):
        super().__init__(f"seasonal_naive({period})")
        self.period = period

    def _required_context(self) -> int:
        return self.period

    def _predict(self, req: ForecastRequest) -> np.ndarray:
        cycle = np.asarray(req.context[-self.period:], dtype=float)
        return tile_period(cycle, req.horizon)
