# models/state.py
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel


class EventType(str, Enum):
    STEP_START = "step_start"
    STEP_COMPLETE = "step_complete"
    BATCH_COMPLETE = "batch_complete"
    ERROR = "error"


class ProgressEvent(BaseModel):
    """One experiment progress update, as sent to callbacks and SSE clients"""
    event_type: EventType
    step_name: str
    progress: float  # 0..100
    message: str = ""
    batch: Optional[int] = None  # set on batch_complete only
    details: Optional[Dict[str, Any]] = None
