# forecasters/moving_average.py
import numpy as np

from forecasters.base_forecaster import BaseForecaster
from models.forecast import ForecastRequest


class MovingAverageForecaster(BaseForecaster):
    def __init__(self, window: int = 24):
        super().__init__(f"moving_average({window})")
        self.window = window

    def _required_context(self) -> int:
        return self.window

    def _predict(self, req: ForecastRequest) -> np.ndarray:
        level = float(np.mean(req.context[-self.window:]))
        return np.full(req.horizon, level, dtype=float)
