# routes/sessions.py
import asyncio
import uuid
from datetime import datetime, timezone
from typing import Dict, List, Optional

from fastapi import APIRouter, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from models.errors import CarbonSchedError, IngestionError
from models.policy import PolicySpec
from models.report import CapacitySetting, ForecastSettings, Mode
from models.vm import ScheduleDecision, VmRequest
from services.carbon_data import default_data_root
from services.policy import load_latency_table, load_region_catalog
from services.session import SchedulingSession

router = APIRouter()

# In-memory storage, lost on restart
scheduling_sessions: Dict[str, dict] = {}


class SessionRequest(BaseModel):
    """Request body for opening a scheduling session"""
    data_dir: Optional[str] = None
    regions: Optional[List[str]] = None
    mode: Mode = Mode.IDEAL
    capacity: CapacitySetting = "inf"
    policy: Optional[PolicySpec] = None
    latency_file: Optional[str] = None
    region_meta_file: Optional[str] = None
    forecast: ForecastSettings = ForecastSettings()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _get_session(session_id: str) -> dict:
    if session_id not in scheduling_sessions:
        raise HTTPException(status_code=404, detail="Session not found")
    return scheduling_sessions[session_id]


@router.post("/sessions")
async def create_session(request: SessionRequest):
    data_dir = request.data_dir or default_data_root()
    try:
        session = SchedulingSession.from_directory(
            data_dir,
            mode=request.mode,
            capacity=request.capacity,
            policy=request.policy,
            latency=load_latency_table(request.latency_file) if request.latency_file else None,
            catalog=load_region_catalog(request.region_meta_file) if request.region_meta_file else None,
            forecast=request.forecast,
            regions=request.regions,
        )
    except IngestionError as e:
        raise HTTPException(status_code=404, detail=f"Dataset not usable: {e}")
    except CarbonSchedError as e:
        raise HTTPException(status_code=400, detail=str(e))

    session_id = str(uuid.uuid4())
    scheduling_sessions[session_id] = {
        "session_id": session_id,
        "session": session,
        "created_at": _now(),
        "updated_at": _now(),
    }
    return JSONResponse({
        "success": True,
        "session_id": session_id,
        "mode": session.mode.value,
        "regions": session.regions,
    })


@router.post("/sessions/{session_id}/schedule")
async def schedule_vm(session_id: str, vm: VmRequest):
    """Schedule one VM request and commit it when a feasible (region, slot) exists"""
    entry = _get_session(session_id)
    try:
        outcome = await asyncio.to_thread(entry["session"].schedule, vm)
    except CarbonSchedError as e:
        raise HTTPException(status_code=400, detail=str(e))
    entry["updated_at"] = _now()

    if isinstance(outcome, ScheduleDecision):
        return JSONResponse({
            "success": True,
            "status": "scheduled",
            "decision": {**outcome.as_row(), "extended_slots": outcome.extended_slots},
        })
    return JSONResponse({
        "success": True,
        "status": "unschedulable",
        "vm_id": outcome.vm_id,
        "message": outcome.message,
        "reasons": outcome.reasons,
    })


@router.get("/sessions/{session_id}")
async def get_session(session_id: str):
    entry = _get_session(session_id)
    return JSONResponse({
        "session_id": session_id,
        "created_at": entry["created_at"],
        "updated_at": entry["updated_at"],
        **entry["session"].status(),
    })
