# forecasters/base_forecaster.py
from abc import ABC, abstractmethod

import numpy as np

from models.errors import ForecastError
from models.forecast import Forecast, ForecastRequest


class BaseForecaster(ABC):
    def __init__(self, tag: str):
        self.tag = tag

    @abstractmethod
    def _required_context(self) -> int:
        """Trailing context values this method reads"""
        pass

    @abstractmethod
    def _predict(self, req: ForecastRequest) -> np.ndarray:
        """Raw predictions for req.horizon slots"""
        pass

    def forecast(self, req: ForecastRequest) -> Forecast:
        """Standard method all forecasters use to answer a request"""
        needed = self._required_context()
        if len(req.context) < needed:
            raise ForecastError(
                f"{self.tag} needs {needed} context values, request for {req.region} has {len(req.context)}"
            )
        raw = np.asarray(self._predict(req), dtype=float)
        if raw.shape != (req.horizon,):
            raise ForecastError(f"{self.tag} produced {raw.shape[0]} values for horizon {req.horizon}")
        # moving averages over repaired data can undershoot
        values = np.maximum(raw, 0.0)
        return Forecast(
            region=req.region,
            issue_slot=req.issue_slot,
            values=tuple(float(v) for v in values),
            method=self.tag,
        )
