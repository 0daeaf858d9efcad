# routes/upload.py
from typing import Optional

from fastapi import APIRouter, File, HTTPException, Query, UploadFile
from fastapi.responses import JSONResponse

from models.errors import CarbonSchedError
from services.carbon_data import (DEFAULT_CI_COL, DEFAULT_REPAIR_LIMIT, DEFAULT_TS_COL, default_data_root,
                                  ingest_carbon_bytes, store_in_dataset)

router = APIRouter()


@router.post("/upload-carbon")
async def upload_carbon(
    region: str = Query(..., min_length=1),
    file: UploadFile = File(...),
    ts_col: str = Query(DEFAULT_TS_COL),
    ci_col: str = Query(DEFAULT_CI_COL),
    repair_limit: int = Query(DEFAULT_REPAIR_LIMIT, ge=0),
    data_dir: Optional[str] = Query(None),
):
    """Ingest one region's carbon-intensity CSV into the dataset directory"""

    if not file.filename:
        raise HTTPException(status_code=400, detail="No file uploaded")

    file_ext = file.filename.split('.')[-1].lower()
    if file_ext != 'csv':
        raise HTTPException(status_code=400, detail=f"File type '{file_ext}' not supported. Use: csv")

    content = await file.read()
    try:
        series = ingest_carbon_bytes(content, region, source=file.filename, ts_col=ts_col,
                                     ci_col=ci_col, repair_limit=repair_limit)
    except CarbonSchedError as e:
        raise HTTPException(status_code=400, detail=str(e))

    target = store_in_dataset(series, data_dir or default_data_root())
    return JSONResponse({
        "success": True,
        "region": series.region,
        "start": series.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "length": len(series),
        "file": str(target),
    })
