import os

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

load_dotenv()

from app import __version__
from services.carbon_data import DATA_ENV, default_data_root

from .routes import experiments, sessions, upload

app = FastAPI(title="Carbon-Aware Scheduler API", version=__version__)

# CORS setup for frontend
app.add_middleware(
    CORSMiddleware,
    allow_origins=os.getenv("CARBON_SCHED_CORS_ORIGINS", "http://localhost:5173").split(","),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(upload.router, prefix="/api", tags=["carbon data"])
app.include_router(sessions.router, prefix="/api", tags=["scheduling"])
app.include_router(experiments.router, prefix="/api", tags=["experiments"])


@app.get("/")
async def root():
    return {"message": "Carbon-aware scheduler API is running", "version": __version__}


@app.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "dataset_configured": bool(os.getenv(DATA_ENV)),
        "dataset_root": str(default_data_root()),
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("app.main:app", host="0.0.0.0", port=8000, reload=True)
