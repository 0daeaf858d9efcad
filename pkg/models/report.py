# models/report.py
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.carbon import RegionId

SCHEMA_VERSION = 1

Capacity = Union[int, Literal["inf"]]
CapacitySetting = Union[Capacity, Dict[RegionId, Capacity]]


class Mode(str, Enum):
    IDEAL = "ideal"
    FORECAST = "forecast"
    ROUND_ROBIN = "round_robin"


def capacity_label(setting: CapacitySetting) -> str:
    if isinstance(setting, dict):
        return ";".join(f"{r}={setting[r]}" for r in sorted(setting))
    return str(setting)


class EmissionReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    policy: str = "adhoc"
    mode: Mode = Mode.IDEAL
    capacity: str = "inf"
    deadline_margin_hours: int = 0
    batch: int = 0
    count_idle: bool = False
    total_gco2: float = 0.0
    region_gco2: Dict[RegionId, float] = {}
    region_jobs: Dict[RegionId, int] = {}
    vm_gco2: Dict[str, float] = {}
    delay_histogram: Dict[int, int] = {}
    scheduled: int = 0
    unschedulable: int = 0
    placement_rejected: int = 0
    mean_delay: float = 0.0

    @property
    def sort_key(self):
        return (self.policy, self.capacity, self.deadline_margin_hours, self.mode.value, self.batch)


class ComparisonRow(BaseModel):
    policy: str
    capacity: str
    deadline_margin_hours: int
    mode: Mode
    batches: int
    total_gco2: float
    baseline_gco2: Optional[float] = None
    reduction_pct: Optional[float] = None
    scheduled: int
    unschedulable: int
    mean_delay: float


class ForecastSettings(BaseModel):
    method: Literal["persistence", "seasonal_naive", "moving_average", "perfect"] = "seasonal_naive"
    period: int = Field(default=24, ge=1)
    window: int = Field(default=24, ge=1)
    context_length: int = Field(default=1024, ge=1)
    horizon: int = Field(default=96, ge=1)
    every: int = Field(default=1, ge=1)


class ExperimentConfig(BaseModel):
    """One experiment grid: every policy x capacity x deadline margin x mode, per batch"""

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    policy_file: List[Path]
    regions_dir: Optional[Path] = None
    # Generate seeded synthetic carbon data instead of reading regions_dir
    synthetic_days: Optional[int] = Field(default=None, ge=1)
    # Restricts the dataset (or names the synthetic regions); all regions when unset
    regions: Optional[List[RegionId]] = None
    region_meta_file: Optional[Path] = None
    latency_file: Optional[Path] = None
    traces: Optional[Path] = None
    forecasts: Optional[Path] = None
    forecast: ForecastSettings = ForecastSettings()
    power_model_file: Optional[Path] = None
    m_per_region: List[CapacitySetting] = ["inf"]
    deadline_margin_hours: List[int] = [6]
    mode: List[Mode] = [Mode.IDEAL]
    seed: int = 0
    batches: int = Field(default=20, ge=1)
    batch_size: int = Field(default=100, ge=1)
    arrival_window_hours: int = Field(default=24, ge=1)
    min_lifetime_hours: float = Field(default=6.0, ge=0)
    max_lifetime_hours: float = Field(default=24.0, gt=0)
    count_idle: bool = False
    hosts_per_region: int = Field(default=200, ge=1)
    host_cores: int = Field(default=32, ge=1)
    host_ram_gb: float = Field(default=256.0, gt=0)

    @field_validator("policy_file", "m_per_region", "deadline_margin_hours", "mode", mode="before")
    @classmethod
    def _as_list(cls, v):
        return v if isinstance(v, list) else [v]

    @field_validator("deadline_margin_hours")
    @classmethod
    def _margins_non_negative(cls, v: List[int]) -> List[int]:
        if any(m < 0 for m in v):
            raise ValueError("deadline margins must be >= 0")
        return v

    @field_validator("m_per_region")
    @classmethod
    def _capacities_non_negative(cls, v: List[CapacitySetting]) -> List[CapacitySetting]:
        for setting in v:
            values = setting.values() if isinstance(setting, dict) else [setting]
            if any(isinstance(m, int) and m < 0 for m in values):
                raise ValueError("region capacities must be >= 0")
        return v

    @model_validator(mode="after")
    def _one_data_source(self) -> "ExperimentConfig":
        if self.regions_dir is None and self.synthetic_days is None:
            raise ValueError("set either regions_dir or synthetic_days")
        if self.regions_dir is not None and self.synthetic_days is not None:
            raise ValueError("regions_dir and synthetic_days are mutually exclusive")
        if self.min_lifetime_hours > self.max_lifetime_hours:
            raise ValueError("min_lifetime_hours exceeds max_lifetime_hours")
        return self


class RunManifest(BaseModel):
    config_hash: str
    input_digests: Dict[str, str] = {}
    seed: int
    version: str
    outputs: List[str] = []
    output_digests: Dict[str, str] = {}


class ExperimentResult(BaseModel):
    name: str
    reports: List[EmissionReport] = []
    comparison: List[ComparisonRow] = []
    # One row per decision: ScheduleDecision.as_row() plus the configuration labels
    decisions: List[Dict[str, Any]] = []
    input_digests: Dict[str, str] = {}
