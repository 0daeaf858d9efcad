# forecasters/perfect.py
import numpy as np

from forecasters.base_forecaster import BaseForecaster
from models.carbon import CarbonIntensitySeries
from models.errors import ForecastError
from models.forecast import ForecastRequest


class PerfectForecaster(BaseForecaster):
    """Perfect-foresight oracle: returns the historical values that followed the issue slot"""

    def __init__(self, actuals: CarbonIntensitySeries):
        super().__init__("perfect")
        self.actuals = actuals

    def _required_context(self) -> int:
        return 0

    def _predict(self, req: ForecastRequest) -> np.ndarray:
        end = req.issue_slot + req.horizon
        if end > len(self.actuals):
            raise ForecastError(
                f"perfect foresight for {req.region} needs slots [{req.issue_slot}, {end}), "
                f"actuals end at {len(self.actuals)}"
            )
        return np.asarray(self.actuals.values[req.issue_slot:end], dtype=float)
