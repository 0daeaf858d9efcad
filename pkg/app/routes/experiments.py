# routes/experiments.py - experiment runs with SSE progress
import asyncio
import json
from typing import Optional

from fastapi import APIRouter, HTTPException
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from models.errors import CarbonSchedError
from models.report import ExperimentConfig
from services.experiment import ExperimentRunner

router = APIRouter()


class ExperimentRequest(BaseModel):
    """Request body for an experiment run; relative paths resolve against base_dir"""
    config: ExperimentConfig
    base_dir: Optional[str] = "."


def _summary(result) -> dict:
    return {
        "success": True,
        "name": result.name,
        "reports": len(result.reports),
        "comparison": [row.model_dump(mode="json") for row in result.comparison],
    }


@router.post("/experiments/run")
async def run_experiment(request: ExperimentRequest):
    """Non-streaming run: returns the comparison table once every batch is done"""
    runner = ExperimentRunner(request.config, request.base_dir or ".")
    try:
        result = await asyncio.to_thread(runner.run)
    except CarbonSchedError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return JSONResponse({**_summary(result), "progress_events": runner.events})


@router.post("/experiments/run-stream")
async def run_experiment_stream(request: ExperimentRequest):
    """
    Streams progress events as they are emitted, then the comparison table
    in a final 'complete' event (or an 'error' event)
    """

    async def event_generator():
        all_events = []

        def progress_callback(event_dict):
            """Called by ExperimentRunner when an event occurs"""
            all_events.append(event_dict)

        runner = ExperimentRunner(request.config, request.base_dir or ".", progress_callback=progress_callback)
        run_task = asyncio.create_task(asyncio.to_thread(runner.run))

        last_event_count = 0
        while not run_task.done():
            if len(all_events) > last_event_count:
                for event in all_events[last_event_count:]:
                    yield f"data: {json.dumps({'type': 'progress', 'event': event})}\n\n"
                last_event_count = len(all_events)
            await asyncio.sleep(0.1)

        for event in all_events[last_event_count:]:
            yield f"data: {json.dumps({'type': 'progress', 'event': event})}\n\n"

        try:
            result = run_task.result()
        except Exception as e:
            yield f"data: {json.dumps({'type': 'error', 'error': str(e)})}\n\n"
            return

        yield f"data: {json.dumps({'type': 'complete', 'data': _summary(result)})}\n\n"

    return StreamingResponse(
        event_generator(),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "Connection": "keep-alive",
            "X-Accel-Buffering": "no",  # Disable nginx buffering
        },
    )
