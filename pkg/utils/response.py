"""
Report envelopes shared by every command.

Every JSON document the CLI writes or prints has the same shape:
{"success": ..., "data": ..., "error": ..., "meta": ...}.
"""
from datetime import datetime, timezone
from typing import Any, Dict, Generic, Optional, TypeVar

from pydantic import BaseModel, Field

from core.exceptions import DeautoconvError, ExitCode

T = TypeVar("T")


class ReportEnvelope(BaseModel, Generic[T]):
    """
    Base model for all reports.

    Attributes:
        success: Whether the command completed
        data: The report payload (optional)
        error: Error details if success is False (optional)
        meta: Additional metadata (optional)
    """

    success: bool = Field(..., description="Indicates if the command completed")
    data: Optional[T] = Field(None, description="Report payload")
    error: Optional[Dict[str, Any]] = Field(None, description="Error details if success is False")
    meta: Optional[Dict[str, Any]] = Field(None, description="Additional metadata")

    model_config = {"ser_json_inf_nan": "constants"}


def _meta(meta: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    from config.settings import get_settings

    base = {
        "app": get_settings().APP_NAME,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if meta:
        base.update(meta)
    return base


def success_response(data: Any = None, meta: Optional[Dict[str, Any]] = None) -> ReportEnvelope:
    """
    Create a successful report.

    Args:
        data: The payload to include
        meta: Additional metadata to include

    Returns:
        ReportEnvelope: the envelope with success=True
    """
    return ReportEnvelope(success=True, data=data, meta=_meta(meta))


def error_response(
    message: str,
    error_code: Optional[str] = None,
    exit_code: int = ExitCode.RUN_FAILURE,
    details: Optional[Dict[str, Any]] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> ReportEnvelope:
    """
    Create an error report.

    Args:
        message: Human-readable error message
        error_code: Machine-readable error code (default: EXIT_{exit_code})
        exit_code: Process exit code reported for this error
        details: Additional error details

    Returns:
        ReportEnvelope: the envelope with success=False
    """
    error: Dict[str, Any] = {
        "message": message,
        "code": error_code or f"EXIT_{int(exit_code)}",
        "exit_code": int(exit_code),
    }
    if details:
        error["details"] = details
    return ReportEnvelope(success=False, error=error, meta=_meta(meta))


def exception_response(exc: DeautoconvError, meta: Optional[Dict[str, Any]] = None) -> ReportEnvelope:
    details = dict(exc.details)
    if exc.iteration is not None:
        details["iteration"] = exc.iteration
    return error_response(
        message=str(exc),
        error_code=exc.error_code,
        exit_code=exc.exit_code,
        details=details,
        meta=meta,
    )
