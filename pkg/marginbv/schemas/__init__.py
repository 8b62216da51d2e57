"""Schema definitions for diagnose state and serialized reports."""

from .reports import (
    SCHEMA_VERSION,
    CheckResult,
    DecompositionReport,
    LossEcho,
    Notice,
    Report,
    report_json_schema,
)
from .state import DiagnoseState

__all__ = [
    "SCHEMA_VERSION",
    "CheckResult",
    "DecompositionReport",
    "DiagnoseState",
    "LossEcho",
    "Notice",
    "Report",
    "report_json_schema",
]
