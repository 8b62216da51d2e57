"""Bootstrap training node."""

import time
from typing import Any, Dict

from ..errors import ConfigError, DivergenceError, ResampleError
from ..learner import TrainConfig, bootstrap_margins
from ..schemas.state import DiagnoseState
from ..utils.logging_config import get_logger, log_error, log_step_end, log_step_start

logger = get_logger("nodes.bootstrap")


def bootstrap_node(state: DiagnoseState) -> Dict[str, Any]:
    """Train the model distribution and store its margins on the evaluation split."""
    step = "bootstrap"
    started = time.perf_counter()
    completed = state.get("completed_steps", []) + [step]
    log_step_start(logger, step, f"{state.get('models', 1)} models")

    try:
        config = TrainConfig.create(
            loss=state["loss_spec"],
            bootstrap_count=state.get("models", 1),
            seed=state.get("seed", 0),
            n_jobs=state.get("n_jobs", 1),
            **state.get("train_options", {}),
        )
        samples = bootstrap_margins(state["dataset"], config, loss=state["loss"])
    except ConfigError as e:
        log_error(logger, step, e)
        return {
            "errors": state.get("errors", []) + [f"Training configuration error: {e}"],
            "config_error": True,
            "current_step": step,
            "completed_steps": completed,
        }
    except (DivergenceError, ResampleError) as e:
        log_error(logger, step, e)
        return {
            "errors": state.get("errors", []) + [f"Training error: {e}"],
            "current_step": step,
            "completed_steps": completed,
        }

    log_step_end(logger, step, time.perf_counter() - started)
    return {
        "samples": samples,
        "timing": {**state.get("timing", {}), step: time.perf_counter() - started},
        "current_step": step,
        "completed_steps": completed,
    }
