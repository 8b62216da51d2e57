"""Serialized report models shared by the decompositions, the CLI and the workflow."""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_VERSION = "1.0"


class DecompositionReport(BaseModel):
    """
    One decomposition evaluated over a set of points.

    ``expected_risk``, every entry of ``components`` and ``residual`` are
    averages over the points; ``per_point`` holds the same series before
    averaging when requested.
    """

    model_config = ConfigDict(extra="forbid")

    theorem_id: str
    title: str
    identity: str
    expected_risk: float
    components: Dict[str, float]
    residual: float
    relative_residual: float
    tolerance: float
    point_count: int = Field(ge=1)
    model_count: int = Field(ge=1)
    per_point: Optional[Dict[str, List[float]]] = None
    extras: Dict[str, float] = Field(default_factory=dict)
    clamp_flags: Dict[str, int] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def exact(self) -> bool:
        """True when the identity closes within ``tolerance`` (relative)."""
        return self.relative_residual <= self.tolerance


class CheckResult(BaseModel):
    """A single property check run by ``verify`` or by the diagnose workflow."""

    model_config = ConfigDict(extra="forbid")

    suite: str
    name: str
    anchor: str
    passed: bool
    skipped: bool = False
    measured: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class Notice(BaseModel):
    """A decomposition that was not run, and why."""

    decomposition: str
    reason: str


class LossEcho(BaseModel):
    spec: str
    name: str
    params: Dict[str, float] = Field(default_factory=dict)
    gradient_symmetric_c: Optional[float] = None
    odd_slope: Optional[float] = None
    tabulated: bool = False


class Report(BaseModel):
    """Top-level document written by every CLI command."""

    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    tool_version: str
    command: List[str]
    loss: Optional[LossEcho] = None
    decompositions: Dict[str, DecompositionReport] = Field(default_factory=dict)
    notices: List[Notice] = Field(default_factory=list)
    checks: List[CheckResult] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    timing: Optional[Dict[str, float]] = None

    @property
    def failed_checks(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and not c.skipped]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, exclude_none=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.model_validate_json(text)

    def write(self, path: str | Path) -> Path:
        """Write atomically: temp file in the target directory, then rename."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(self.to_json())
                handle.write("\n")
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return path


def report_json_schema() -> str:
    return json.dumps(Report.model_json_schema(), indent=2, sort_keys=True)
