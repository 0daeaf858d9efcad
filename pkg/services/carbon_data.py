# services/carbon_data.py
import hashlib
import io
import json
import logging
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from models.carbon import SLOT, CarbonIntensitySeries, RegionId, SlotIndex
from models.errors import IngestionError, SlotRangeError

logger = logging.getLogger(__name__)

DEFAULT_TS_COL = "datetime"
DEFAULT_CI_COL = "carbon_intensity_avg"
DEFAULT_REPAIR_LIMIT = 6
INDEX_FILE = "index.json"
DATA_ENV = "CARBON_SCHED_DATA"
# time of day followed by Z or a numeric UTC offset
OFFSET_PATTERN = r"\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?\s*(?:Z|[+-]\d{2}(?::?\d{2})?)$"


def _parse_float(raw: str) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        return math.nan


def ingest_carbon_csv(path: Union[str, Path], region: RegionId,
                      ts_col: str = DEFAULT_TS_COL, ci_col: str = DEFAULT_CI_COL,
                      repair_limit: int = DEFAULT_REPAIR_LIMIT) -> CarbonIntensitySeries:
    """Read an hourly carbon-intensity CSV into a gap-free series.

    Sub-hourly rows are floored to the hour and averaged with any other rows
    in that hour (this also collapses duplicated timestamps). Runs of up to
    ``repair_limit`` missing hours are filled by linear interpolation; longer
    runs are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError("carbon intensity file not found", path=str(path))
    return _ingest(path, str(path), region, ts_col, ci_col, repair_limit)


def ingest_carbon_bytes(content: bytes, region: RegionId, source: str = "upload",
                        ts_col: str = DEFAULT_TS_COL, ci_col: str = DEFAULT_CI_COL,
                        repair_limit: int = DEFAULT_REPAIR_LIMIT) -> CarbonIntensitySeries:
    """Same rules as ingest_carbon_csv for CSV content already in memory"""
    return _ingest(io.BytesIO(content), source, region, ts_col, ci_col, repair_limit)


def _ingest(handle, source: str, region: RegionId, ts_col: str, ci_col: str,
            repair_limit: int) -> CarbonIntensitySeries:
    try:
        frame = pd.read_csv(handle, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise IngestionError(f"cannot read CSV: {e}", path=source) from e

    missing = [c for c in (ts_col, ci_col) if c not in frame.columns]
    if missing:
        raise IngestionError(f"missing column(s) {', '.join(missing)}", path=source)
    if frame.empty:
        raise IngestionError("no data rows", path=source)

    return frame_to_series(frame[ts_col], frame[ci_col], region,
                           repair_limit=repair_limit, source=source)


def frame_to_series(raw_ts: pd.Series, raw_ci: pd.Series, region: RegionId,
                    repair_limit: int = DEFAULT_REPAIR_LIMIT,
                    source: Optional[str] = None) -> CarbonIntensitySeries:
    stripped = raw_ts.str.strip()
    timestamps = pd.to_datetime(stripped, utc=True, errors="coerce", format="ISO8601")
    naive = timestamps.notna() & ~stripped.str.contains(OFFSET_PATTERN, regex=True, case=False)
    if naive.any():
        first = int(np.flatnonzero(naive.to_numpy())[0]) + 2
        logger.warning("%s: %d timestamps without a UTC offset (first at row %d), assumed UTC",
                       source or region, int(naive.sum()), first)
    values = raw_ci.map(_parse_float).astype(float)

    # header is line 1, first data row is line 2
    for pos in range(len(raw_ts)):
        row = pos + 2
        if pd.isna(timestamps.iloc[pos]):
            raise IngestionError(f"unparsable timestamp '{raw_ts.iloc[pos]}'", path=source, row=row)
        v = values.iloc[pos]
        if not math.isfinite(v):
            raise IngestionError(f"unparsable carbon intensity '{raw_ci.iloc[pos]}'", path=source, row=row)
        if v < 0:
            raise IngestionError("negative carbon intensity", path=source, row=row,
                                 timestamp=timestamps.iloc[pos].isoformat())

    frame = pd.DataFrame({"hour": timestamps.dt.floor("h"), "ci": values})
    # sorting by value too fixes the summation order inside each hour
    frame = frame.sort_values(["hour", "ci"], kind="mergesort")
    hourly = frame.groupby("hour", sort=True)["ci"].mean()
    collapsed = len(frame) - len(hourly)
    if collapsed:
        logger.info("%s: averaged %d duplicate or sub-hourly rows", region, collapsed)

    full_index = pd.date_range(hourly.index[0], hourly.index[-1], freq="h")
    gap_mask = ~full_index.isin(hourly.index)
    if gap_mask.any():
        _check_gaps(full_index, gap_mask, repair_limit, source)
        hourly = hourly.reindex(full_index).interpolate(method="linear")
        logger.info("%s: repaired %d missing hours by interpolation", region, int(gap_mask.sum()))

    start = hourly.index[0].to_pydatetime()
    return CarbonIntensitySeries(region=region, start=start,
                                 values=tuple(float(v) for v in hourly.to_numpy()))


def _check_gaps(full_index: pd.DatetimeIndex, gap_mask: np.ndarray, repair_limit: int,
                source: Optional[str]) -> None:
    run_start = None
    for i, missing in enumerate(gap_mask):
        if missing and run_start is None:
            run_start = i
        if run_start is not None and (not missing or i == len(gap_mask) - 1):
            run_end = i if not missing else i + 1
            if run_end - run_start > repair_limit:
                raise IngestionError(
                    f"gap of {run_end - run_start} hours exceeds repair limit of {repair_limit}",
                    path=source, timestamp=full_index[run_start].isoformat(),
                )
            run_start = None


def slice_series(series: CarbonIntensitySeries, start: SlotIndex, length: int) -> List[float]:
    return series.slice(start, length)


def to_slot(series_epoch: datetime, t: datetime) -> SlotIndex:
    """Whole hours elapsed from the epoch to t, floored"""
    series_epoch = _as_utc(series_epoch)
    t = _as_utc(t)
    if t < series_epoch:
        raise SlotRangeError(f"{t.isoformat()} is before epoch {series_epoch.isoformat()}")
    return int((t - series_epoch) // SLOT)


def _as_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def write_carbon_csv(series: CarbonIntensitySeries, path: Union[str, Path]) -> Path:
    """Write a series in the default ingestion format; re-ingesting it is bit-exact"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        DEFAULT_TS_COL: [series.timestamp_of(i).strftime("%Y-%m-%dT%H:%M:%SZ") for i in range(len(series))],
        DEFAULT_CI_COL: [repr(v) for v in series.values],
    })
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def file_digest(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def store_in_dataset(series: CarbonIntensitySeries, out_dir: Union[str, Path]) -> Path:
    """Write <region>.csv into a dataset directory and update its index"""
    out_dir = Path(out_dir)
    target = write_carbon_csv(series, out_dir / f"{series.region}.csv")
    index_path = out_dir / INDEX_FILE
    index = json.loads(index_path.read_text(encoding="utf-8")) if index_path.exists() else {"regions": {}}
    index["regions"][series.region] = {
        "file": target.name,
        "start": series.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "length": len(series),
        "sha256": file_digest(target),
    }
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target


def load_dataset(data_dir: Union[str, Path]) -> Dict[RegionId, CarbonIntensitySeries]:
    data_dir = Path(data_dir)
    index_path = data_dir / INDEX_FILE
    if not index_path.is_file():
        raise IngestionError("dataset index not found", path=str(index_path))
    index = json.loads(index_path.read_text(encoding="utf-8"))
    return {
        region: ingest_carbon_csv(data_dir / entry["file"], region)
        for region, entry in sorted(index["regions"].items())
    }


def align(dataset: Dict[RegionId, CarbonIntensitySeries]) -> Dict[RegionId, CarbonIntensitySeries]:
    """Trim every series to the common hourly span so one slot index means one instant"""
    if not dataset:
        return {}
    start = max(s.start for s in dataset.values())
    end = min(s.end for s in dataset.values())
    if end <= start:
        raise IngestionError("regions share no common time span")
    length = to_slot(start, end)
    aligned = {}
    for region, series in dataset.items():
        offset = to_slot(series.start, start)
        aligned[region] = CarbonIntensitySeries(region=region, start=start,
                                                values=tuple(series.slice(offset, length)))
    return aligned


def default_data_root() -> Path:
    """Dataset directory named by CARBON_SCHED_DATA, ./dataset when unset"""
    return Path(os.getenv(DATA_ENV, "dataset"))
