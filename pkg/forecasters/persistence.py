# forecasters/persistence.py
import numpy as np

from forecasters.base_forecaster import BaseForecaster
from models.forecast import ForecastRequest


class PersistenceForecaster(BaseForecaster):
    """Repeats the last observed value over the whole horizon"""

    def __init__(self):
        super().__init__("persistence")

    def _required_context(self) -> int:
        return 1

    def _predict(self, req: ForecastRequest) -> np.ndarray:
        return np.full(req.horizon, req.context[-1], dtype=float)
