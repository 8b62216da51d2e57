"""Loss classification node: decides which decompositions apply."""

import time
from typing import Any, Dict

from ..errors import CatalogueError, ConfigError, LinkDomainError, ParameterError
from ..loss_zoo import classify_gradient_symmetry, even_odd_split, load_loss
from ..risk_link import build_link_bundle
from ..schemas.state import DiagnoseState
from ..utils.logging_config import get_logger, log_error, log_step_end, log_step_start

logger = get_logger("nodes.classify_loss")


def classify_loss_node(state: DiagnoseState) -> Dict[str, Any]:
    """
    Resolve the loss spec and set the workflow flags.

    This node:
    1. Loads the loss (catalogue or tabulated)
    2. Classifies gradient symmetry and the odd part
    3. Builds the link bundle when the link can be inverted
    4. Sets requires_* flags for the decomposition nodes
    """
    step = "classify_loss"
    started = time.perf_counter()
    log_step_start(logger, step, state.get("loss_spec", ""))
    completed = state.get("completed_steps", []) + [step]

    try:
        loss = load_loss(state["loss_spec"])
        c = classify_gradient_symmetry(loss)
        parts = even_odd_split(loss)
    except (CatalogueError, ConfigError, ParameterError) as e:
        log_error(logger, step, e)
        return {
            "errors": state.get("errors", []) + [f"Loss error: {e}"],
            "config_error": True,
            "current_step": step,
            "completed_steps": completed,
        }

    warnings = list(state.get("warnings", []))
    try:
        bundle = build_link_bundle(loss)
    except LinkDomainError as e:
        bundle = None
        warnings.append(f"link of {loss.spec} could not be built: {e}")

    log_step_end(logger, step, time.perf_counter() - started)
    return {
        "loss": loss,
        "bundle": bundle,
        "gradient_symmetric_c": c,
        "odd_slope": parts.odd_slope,
        "requires_gradient_symmetric": c is not None,
        "requires_buja": bundle is not None,
        "requires_lol": parts.is_linear_odd,
        "warnings": warnings,
        "timing": {**state.get("timing", {}), step: time.perf_counter() - started},
        "current_step": step,
        "completed_steps": completed,
    }
