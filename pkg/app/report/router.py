"""
Analysis router: upload gadget dumps, get metric reports back.
"""

import os
from typing import Optional

from fastapi import APIRouter, Depends, File, HTTPException, Query, UploadFile, status
from fastapi.responses import Response
from loguru import logger

from ..config import AnalysisConfig, load_config
from ..errors import ConfigError, ConfigMismatchError, EmptyCorpusError
from ..isa.categories import FAMILY_RULES
from ..models import PreservationMode
from .analysis import analyze_text, compare
from .render import OutputFormat, render
from .schemas import AnalysisReport, ComparisonReport

analysis_router = APIRouter()

MAX_UPLOAD_BYTES = int(os.getenv("GADGETGRADE_MAX_UPLOAD_MB", "256")) * 1024 * 1024

MEDIA_TYPES = {
    OutputFormat.TEXT: "text/plain; charset=utf-8",
    OutputFormat.CSV: "text/csv; charset=utf-8",
}


def get_config(
    unique_only: Optional[bool] = Query(None, description="Count each distinct instruction sequence once"),
    strict_preservation: Optional[bool] = Query(None, description="Use Strict r_d preservation for Metric 3"),
    q_threshold: Optional[float] = Query(None, ge=0),
    sps_limit: Optional[int] = Query(None, gt=0),
    max_gadget_len: Optional[int] = Query(None, gt=0),
) -> AnalysisConfig:
    """Server-side configuration with per-request overrides"""
    preservation = None
    if strict_preservation is not None:
        preservation = PreservationMode.STRICT if strict_preservation else PreservationMode.RELAXED
    try:
        return load_config(
            unique_only=unique_only,
            preservation=preservation,
            q_threshold=q_threshold,
            sps_limit=sps_limit,
            max_gadget_len=max_gadget_len,
        )
    except ConfigError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


async def _read_dump(upload: UploadFile) -> str:
    content = await upload.read()
    if len(content) > MAX_UPLOAD_BYTES:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Dump exceeds {MAX_UPLOAD_BYTES // (1024 * 1024)}MB limit"
        )
    try:
        return content.decode("utf-8")
    except UnicodeDecodeError:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"{upload.filename or 'dump'} is not UTF-8 text"
        )


def _analyze(text: str, config: AnalysisConfig, label: str) -> AnalysisReport:
    try:
        return analyze_text(text, config, label)
    except EmptyCorpusError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))


def _respond(report, fmt: OutputFormat):
    if fmt is OutputFormat.JSON:
        return report
    return Response(content=render(report, fmt), media_type=MEDIA_TYPES[fmt])


@analysis_router.post("/analyze", response_model=AnalysisReport)
async def analyze_dump(
    dump: UploadFile = File(...),
    label: Optional[str] = Query(None, description="Name shown in reports; defaults to the file name"),
    fmt: OutputFormat = Query(OutputFormat.JSON, alias="format"),
    config: AnalysisConfig = Depends(get_config),
):
    """Compute all four metrics for one gadget dump"""
    text = await _read_dump(dump)
    report = _analyze(text, config, label or dump.filename or "")
    logger.info(f"Analyzed upload {report.source_label!r}: {report.corpus.total} gadgets")
    return _respond(report, fmt)


@analysis_router.post("/compare", response_model=ComparisonReport)
async def compare_dumps(
    before: UploadFile = File(...),
    after: UploadFile = File(...),
    fmt: OutputFormat = Query(OutputFormat.JSON, alias="format"),
    config: AnalysisConfig = Depends(get_config),
):
    """Analyze two dumps under one configuration and report the differences"""
    before_report = _analyze(await _read_dump(before), config, before.filename or "before")
    after_report = _analyze(await _read_dump(after), config, after.filename or "after")
    try:
        comparison = compare(before_report, after_report)
    except ConfigMismatchError as e:
        raise HTTPException(status_code=status.HTTP_409_CONFLICT, detail=str(e))
    return _respond(comparison, fmt)


@analysis_router.get("/categories")
async def list_categories(config: AnalysisConfig = Depends(get_config)):
    """The category table in effect, with the family rules applied after it"""
    table = config.category_table
    return {
        "categories": {category.value: list(mnemonics) for category, mnemonics in table.grouped().items()},
        "family_rules": [
            {"pattern": pattern.pattern, "category": category.value} for pattern, category in FAMILY_RULES
        ],
        "digest": table.digest(),
    }
