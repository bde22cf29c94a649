"""
gadgetgrade HTTP service
FastAPI application exposing gadget dump analysis and comparison.
"""

import os

import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.logging_config import setup_logging
from app.report.router import analysis_router

# Load environment variables
load_dotenv()

setup_logging(os.getenv("GADGETGRADE_LOG_LEVEL", "INFO"), os.getenv("GADGETGRADE_LOG_FILE"))

# Create FastAPI app
app = FastAPI(
    title="gadgetgrade API",
    description="Gadget-quality metrics for ROP gadget dumps",
    version="1.0.0"
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=os.getenv("CORS_ORIGINS", "*").split(","),
    allow_credentials=False,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

app.include_router(analysis_router, prefix="/api/analysis", tags=["Analysis"])


# Health check endpoint
@app.get("/api/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "service": "gadgetgrade API"}


if __name__ == "__main__":
    port = int(os.getenv("PORT", 8000))
    uvicorn.run(app, host=os.getenv("HOST", "127.0.0.1"), port=port)
