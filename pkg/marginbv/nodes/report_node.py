"""Final node: condenses the decomposition reports into a summary."""

from typing import Any, Dict

from ..schemas.state import DiagnoseState
from ..utils.logging_config import get_logger

logger = get_logger("nodes.report")


def assemble_report_node(state: DiagnoseState) -> Dict[str, Any]:
    """
    Build the summary block of the diagnose report.

    The summary lists every decomposition with its expected risk, its
    components and whether the identity closed within tolerance.
    """
    reports = state.get("reports", {})
    rows = {
        name: {
            "expected_risk": report.expected_risk,
            **report.components,
            "relative_residual": report.relative_residual,
            "exact": report.exact,
        }
        for name, report in reports.items()
    }
    samples = state.get("samples")
    summary = {
        "decompositions": rows,
        "all_exact": all(report.exact for report in reports.values()),
        "gradient_symmetric_c": state.get("gradient_symmetric_c"),
        "odd_slope": state.get("odd_slope"),
        "posterior_known": state.get("eval_posteriors") is not None,
    }
    if samples is not None:
        summary["model_count"] = samples.model_count
        summary["point_count"] = samples.point_count

    if state.get("errors"):
        logger.warning(f"diagnose finished with {len(state['errors'])} error(s)")
    return {
        "summary": summary,
        "current_step": "assemble_report",
        "completed_steps": state.get("completed_steps", []) + ["assemble_report"],
    }
