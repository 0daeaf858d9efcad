import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Sequence

import pytest

from models.carbon import CarbonIntensitySeries
from services.carbon_data import store_in_dataset
from services.power import load_power_model
from services.synthetic import constant_series

EPOCH = datetime(2022, 5, 15, tzinfo=timezone.utc)


def make_series(region: str, values: Sequence[float], start: datetime = EPOCH) -> CarbonIntensitySeries:
    return CarbonIntensitySeries(region=region, start=start, values=tuple(float(v) for v in values))


@pytest.fixture
def power_model():
    return load_power_model()


@pytest.fixture
def write_csv(tmp_path):
    """Write raw CSV text and return its path"""

    def _write(text: str, name: str = "input.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def constant_dataset(tmp_path):
    """Dataset directory with one constant series per region"""

    def _build(levels: Dict[str, float], hours: int = 200, name: str = "dataset") -> Path:
        out = tmp_path / name
        for region, value in levels.items():
            store_in_dataset(constant_series(region, value, hours, start=EPOCH), out)
        return out

    return _build


@pytest.fixture
def policy_file(tmp_path):
    def _write(name: str, **fields) -> Path:
        lines = [f'name = "{name}"']
        for key, value in fields.items():
            # JSON strings and lists of strings are valid TOML
            lines.append(f"{key} = {json.dumps(value)}")
        path = tmp_path / f"{name}.toml"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
