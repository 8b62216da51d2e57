"""Dataset loading node."""

import time
from typing import Any, Dict

from ..errors import ConfigError
from ..learner import load_dataset_csv, make_synthetic, parse_synthetic_spec
from ..schemas.state import DiagnoseState
from ..utils.logging_config import get_logger, log_error, log_step_end, log_step_start

logger = get_logger("nodes.data")


def load_data_node(state: DiagnoseState) -> Dict[str, Any]:
    """
    Read the CSV dataset or generate the synthetic one.

    Posteriors are only known for synthetic data or a CSV with a ``p``
    column; without them the probability-side decompositions are switched
    off, or the run fails when ``require_noise`` is set.
    """
    step = "load_data"
    started = time.perf_counter()
    completed = state.get("completed_steps", []) + [step]
    errors = state.get("errors", [])

    data_path = state.get("data_path")
    synthetic = state.get("synthetic_spec")
    if bool(data_path) == bool(synthetic):
        return {
            "errors": errors + ["Exactly one of a data file or a synthetic spec is required"],
            "config_error": True,
            "current_step": step,
            "completed_steps": completed,
        }

    log_step_start(logger, step, data_path or synthetic)
    try:
        if data_path:
            dataset = load_dataset_csv(data_path)
        else:
            kwargs = parse_synthetic_spec(synthetic)
            dataset = make_synthetic(seed=state.get("seed", 0), **kwargs)
    except ConfigError as e:
        log_error(logger, step, e)
        return {
            "errors": errors + [f"Data error: {e}"],
            "config_error": True,
            "current_step": step,
            "completed_steps": completed,
        }

    if state.get("require_noise") and not dataset.has_posterior:
        return {
            "errors": errors + ["Noise was required but the dataset has no posterior column"],
            "config_error": True,
            "current_step": step,
            "completed_steps": completed,
        }

    evaluation = dataset.eval_split()
    logger.info(f"{dataset.size} points, {dataset.dimension} features, {evaluation.size} for evaluation")
    log_step_end(logger, step, time.perf_counter() - started)
    return {
        "dataset": dataset,
        "eval_labels": evaluation.labels,
        "eval_posteriors": evaluation.posterior,
        "requires_buja": state.get("requires_buja", False) and dataset.has_posterior,
        "timing": {**state.get("timing", {}), step: time.perf_counter() - started},
        "current_step": step,
        "completed_steps": completed,
    }
