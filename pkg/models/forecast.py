# models/forecast.py
from typing import Annotated, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.carbon import CarbonIntensitySeries, RegionId, SlotIndex

DEFAULT_CONTEXT_LENGTH = 1024
DEFAULT_HORIZON = 96


class ForecastRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: RegionId
    context: Tuple[float, ...]
    issue_slot: SlotIndex = Field(ge=0)
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1)
    context_length: int = Field(default=DEFAULT_CONTEXT_LENGTH, ge=1)

    @model_validator(mode="after")
    def _context_matches_p(self) -> "ForecastRequest":
        if len(self.context) != self.context_length:
            raise ValueError(
                f"context holds {len(self.context)} values, expected {self.context_length}"
            )
        return self


class Forecast(BaseModel):
    """Predicted CI for slots [issue_slot, issue_slot + len(values))"""

    model_config = ConfigDict(frozen=True)

    region: RegionId
    issue_slot: SlotIndex
    values: Tuple[float, ...]
    method: str

    @model_validator(mode="after")
    def _non_negative(self) -> "Forecast":
        if any(v < 0 for v in self.values):
            raise ValueError("forecast values must be clamped at 0")
        return self

    @property
    def horizon(self) -> int:
        return len(self.values)


class Persistence(BaseModel):
    kind: Literal["persistence"] = "persistence"

    @property
    def tag(self) -> str:
        return "persistence"


class SeasonalNaive(BaseModel):
    kind: Literal["seasonal_naive"] = "seasonal_naive"
    period: int = Field(default=24, ge=1)

    @property
    def tag(self) -> str:
        return f"seasonal_naive({self.period})"


class MovingAverage(BaseModel):
    kind: Literal["moving_average"] = "moving_average"
    window: int = Field(default=24, ge=1)

    @property
    def tag(self) -> str:
        return f"moving_average({self.window})"


class Perfect(BaseModel):
    kind: Literal["perfect"] = "perfect"
    actuals: CarbonIntensitySeries

    @property
    def tag(self) -> str:
        return "perfect"


ForecastMethod = Annotated[
    Union[Persistence, SeasonalNaive, MovingAverage, Perfect],
    Field(discriminator="kind"),
]


class ForecastMetrics(BaseModel):
    mae: float
    rmse: float
    # Percent; None when every actual value is zero
    mape: Optional[float]
    mape_excluded: int = 0
