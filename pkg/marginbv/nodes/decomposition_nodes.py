"""Decomposition nodes: one per identity, each skipping itself when it does not apply."""

import time
from typing import Any, Callable, Dict, Optional

from ..decomp import (
    buja_decomposition,
    bv_decomposition_gradient_symmetric,
    lol_decomposition,
    margin_variance_decomposition,
    noise_bias_report,
)
from ..errors import DecompositionInapplicableError, MarginBVError
from ..schemas.reports import DecompositionReport, Notice
from ..schemas.state import DiagnoseState
from ..utils.logging_config import get_logger, log_error, log_step_end, log_step_skipped, log_step_start

logger = get_logger("nodes.decomposition")


def _run_step(
    state: DiagnoseState,
    step: str,
    run: Callable[[], DecompositionReport],
    flag: Optional[str] = None,
    skip_reason: str = "",
) -> Dict[str, Any]:
    completed = state.get("completed_steps", [])
    notices = state.get("notices", [])

    if flag is not None and not state.get(flag, False):
        log_step_skipped(logger, step, skip_reason)
        return {
            "notices": notices + [Notice(decomposition=step, reason=skip_reason)],
            "current_step": step,
            "completed_steps": completed + [f"{step}_skipped"],
        }

    started = time.perf_counter()
    log_step_start(logger, step)
    try:
        report = run()
    except DecompositionInapplicableError as e:
        log_step_skipped(logger, step, str(e))
        return {
            "notices": notices + [Notice(decomposition=step, reason=str(e))],
            "current_step": step,
            "completed_steps": completed + [f"{step}_skipped"],
        }
    except MarginBVError as e:
        log_error(logger, step, e)
        return {
            "errors": state.get("errors", []) + [f"{step} error: {e}"],
            "current_step": step,
            "completed_steps": completed + [step],
        }

    elapsed = time.perf_counter() - started
    log_step_end(logger, step, elapsed)
    return {
        "reports": {**state.get("reports", {}), step: report},
        "warnings": state.get("warnings", []) + report.warnings,
        "timing": {**state.get("timing", {}), step: elapsed},
        "current_step": step,
        "completed_steps": completed + [step],
    }


def _label_kwargs(state: DiagnoseState) -> Dict[str, Any]:
    """Exact expectation over Y when the posterior is known, observed labels otherwise."""
    posteriors = state.get("eval_posteriors")
    if posteriors is not None:
        return {"posteriors": posteriors}
    return {"labels": state["eval_labels"]}


def margin_variance_node(state: DiagnoseState) -> Dict[str, Any]:
    return _run_step(
        state,
        "margin_variance",
        lambda: margin_variance_decomposition(
            state["loss"], state["samples"], per_point=state.get("per_point", False), **_label_kwargs(state)
        ),
    )


def gradient_symmetric_node(state: DiagnoseState) -> Dict[str, Any]:
    return _run_step(
        state,
        "gradient_symmetric",
        lambda: bv_decomposition_gradient_symmetric(
            state["loss"],
            state["samples"],
            per_point=state.get("per_point", False),
            c=state.get("gradient_symmetric_c"),
            **_label_kwargs(state),
        ),
        flag="requires_gradient_symmetric",
        skip_reason=(
            "loss is not gradient-symmetric, so no target-independent variance exists; "
            "see the margin variance decomposition instead"
        ),
    )


def buja_node(state: DiagnoseState) -> Dict[str, Any]:
    return _run_step(
        state,
        "buja",
        lambda: buja_decomposition(
            state["loss"],
            state["bundle"],
            state["samples"],
            state["eval_posteriors"],
            per_point=state.get("per_point", False),
        ),
        flag="requires_buja",
        skip_reason="needs known posteriors and an invertible link",
    )


def noise_split_node(state: DiagnoseState) -> Dict[str, Any]:
    return _run_step(
        state,
        "noise_split",
        lambda: noise_bias_report(
            state["loss"],
            state["bundle"],
            state["samples"],
            state["eval_posteriors"],
            per_point=state.get("per_point", False),
        ),
        flag="requires_buja",
        skip_reason="noise is only separable from bias when posteriors are known",
    )


def lol_node(state: DiagnoseState) -> Dict[str, Any]:
    return _run_step(
        state,
        "lol",
        lambda: lol_decomposition(
            state["loss"],
            state["samples"],
            per_point=state.get("per_point", False),
            c=state.get("gradient_symmetric_c"),
            **_label_kwargs(state),
        ),
        flag="requires_lol",
        skip_reason="odd part of the loss is not linear",
    )
