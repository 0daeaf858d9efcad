# services/traces.py
import logging
import math
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from models.carbon import SLOT
from models.errors import TraceError
from models.vm import VmRequest
from services.carbon_data import to_slot

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["vm_id", "created", "deleted", "cores", "ram_gb"]


def ingest_traces(path: Union[str, Path], epoch: Optional[datetime] = None,
                  deadline_margin_hours: int = 0,
                  min_lifetime_hours: Optional[float] = None,
                  max_lifetime_hours: Optional[float] = None) -> List[VmRequest]:
    """Read Azure-style VM traces (vm_id, created, deleted, cores, ram_gb).

    D is the lifetime ceiled to whole hours, arrival is the creation slot
    relative to ``epoch`` (default: the hour of the earliest kept creation)
    and the deadline is arrival + D + deadline_margin_hours. Rows whose
    lifetime falls outside [min_lifetime_hours, max_lifetime_hours] are
    dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise TraceError(f"trace file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
    if missing:
        raise TraceError(f"{path}: missing column(s) {', '.join(missing)}")

    created = pd.to_datetime(frame["created"], utc=True, errors="coerce", format="ISO8601")
    deleted = pd.to_datetime(frame["deleted"], utc=True, errors="coerce", format="ISO8601")

    rows = []
    dropped_lifetime = 0
    for pos, rec in enumerate(frame.itertuples(index=False)):
        row = pos + 2
        if pd.isna(created.iloc[pos]) or pd.isna(deleted.iloc[pos]):
            raise TraceError(f"unparsable timestamp for VM '{rec.vm_id}'", row=row)
        try:
            cores = float(rec.cores)
            ram = float(rec.ram_gb)
        except ValueError as e:
            raise TraceError(f"non-numeric resources for VM '{rec.vm_id}'", row=row) from e
        if not cores.is_integer() or cores < 1 or not math.isfinite(ram) or ram <= 0:
            raise TraceError(f"invalid resources for VM '{rec.vm_id}': {rec.cores} cores, {rec.ram_gb} GB", row=row)

        start, end = created.iloc[pos].to_pydatetime(), deleted.iloc[pos].to_pydatetime()
        if end <= start:
            logger.warning("%s row %d: VM %s deleted at or before creation, skipped", path.name, row, rec.vm_id)
            continue
        hours = (end - start) / SLOT
        if (min_lifetime_hours is not None and hours < min_lifetime_hours) or \
                (max_lifetime_hours is not None and hours > max_lifetime_hours):
            dropped_lifetime += 1
            continue
        rows.append((rec.vm_id, start, int(cores), ram, math.ceil(hours)))

    if dropped_lifetime:
        logger.info("%s: dropped %d VMs outside the lifetime filter", path.name, dropped_lifetime)
    if not rows:
        return []

    if epoch is None:
        earliest = min(r[1] for r in rows)
        epoch = earliest.replace(minute=0, second=0, microsecond=0)

    vms = []
    for vm_id, start, cores, ram, duration in rows:
        arrival = to_slot(epoch, start)
        vms.append(VmRequest(
            id=str(vm_id), min_cpu=cores, min_ram=ram, duration=duration,
            arrival=arrival, deadline=arrival + duration + deadline_margin_hours,
        ))
    return vms
