# services/power.py
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from models.errors import PowerModelError
from models.power import PowerModel

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
# Representative SPECpower-format table for a 32-core Xeon Gold 6433N host
DEFAULT_POWER_MODEL = DATA_DIR / "specpower_xeon_gold_6433n.csv"


def power_at(model: PowerModel, utilization: float) -> float:
    """Watts at a CPU utilization in [0, 1], linear between the table's load points"""
    if not 0.0 <= utilization <= 1.0:
        raise PowerModelError(f"utilization {utilization} outside [0, 1]")
    utils, watts = zip(*model.points)
    return float(np.interp(utilization, utils, watts))


def power_curve(model: PowerModel, utilization: np.ndarray) -> np.ndarray:
    """Vectorized power_at for a whole utilization matrix"""
    if utilization.size and (utilization.min() < 0.0 or utilization.max() > 1.0):
        raise PowerModelError("utilization outside [0, 1]")
    utils, watts = zip(*model.points)
    return np.interp(utilization, utils, watts)


def load_power_model(path: Union[str, Path] = DEFAULT_POWER_MODEL, name: Optional[str] = None) -> PowerModel:
    """Power CSV with columns utilization_pct, watts (SPECpower load levels)"""
    path = Path(path)
    if not path.is_file():
        raise PowerModelError(f"power model not found: {path}")
    frame = pd.read_csv(path, comment="#")
    if "utilization_pct" not in frame.columns or "watts" not in frame.columns:
        raise PowerModelError(f"{path}: expected columns utilization_pct, watts")
    frame = frame.sort_values("utilization_pct")
    try:
        return PowerModel(
            name=name or path.stem,
            points=tuple((float(u) / 100.0, float(w)) for u, w in zip(frame["utilization_pct"], frame["watts"])),
        )
    except (ValueError, ValidationError) as e:
        raise PowerModelError(f"{path}: {e}") from e
