"""State schema for the LangGraph diagnose workflow."""

from typing import Any, Dict, List, Optional, TypedDict

from .reports import DecompositionReport, Notice


class DiagnoseState(TypedDict, total=False):
    """
    State passed between the diagnose nodes.

    Each node reads what earlier nodes produced and returns a partial
    update; decomposition nodes add to ``reports`` or ``notices``.
    """
    # Inputs
    loss_spec: str
    data_path: Optional[str]
    synthetic_spec: Optional[str]
    models: int
    seed: int
    n_jobs: int
    per_point: bool
    require_noise: bool
    train_options: Dict[str, Any]

    # Loss classification
    loss: Any
    bundle: Any
    gradient_symmetric_c: Optional[float]
    odd_slope: Optional[float]
    requires_gradient_symmetric: bool
    requires_buja: bool
    requires_lol: bool

    # Data and models
    dataset: Any
    samples: Any
    eval_labels: Any
    eval_posteriors: Any

    # Results
    reports: Dict[str, DecompositionReport]
    notices: List[Notice]
    warnings: List[str]
    summary: Dict[str, Any]
    timing: Dict[str, float]

    # Workflow control
    current_step: str
    completed_steps: List[str]
    errors: List[str]
    config_error: bool
