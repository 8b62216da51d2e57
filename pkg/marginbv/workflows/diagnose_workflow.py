"""LangGraph workflow for the diagnose command."""

from typing import Any, Dict, Literal, Optional

from langgraph.graph import END, StateGraph

from ..nodes import (
    assemble_report_node,
    bootstrap_node,
    buja_node,
    classify_loss_node,
    gradient_symmetric_node,
    load_data_node,
    lol_node,
    margin_variance_node,
    noise_split_node,
)
from ..schemas.state import DiagnoseState


def route_on_config(state: DiagnoseState) -> Literal["continue", "report"]:
    """Stop early on a configuration error; the report then carries the errors."""
    return "report" if state.get("config_error") else "continue"


def route_after_bootstrap(state: DiagnoseState) -> Literal["decompose", "report"]:
    """Decompose only when training produced a margin matrix."""
    if state.get("config_error") or state.get("samples") is None:
        return "report"
    return "decompose"


def create_diagnose_workflow():
    """
    Create the diagnose workflow.

    Workflow structure:
    1. classify_loss: load the loss, set the requires_* flags
    2. load_data: dataset or synthetic data, posterior availability
    3. bootstrap: train the model distribution
    4. margin_variance → gradient_symmetric → buja → noise_split → lol:
       each node checks its flag and records a notice when it is off
    5. assemble_report: summary of all decompositions
    """
    workflow = StateGraph(DiagnoseState)

    workflow.add_node("classify_loss", classify_loss_node)
    workflow.add_node("load_data", load_data_node)
    workflow.add_node("bootstrap", bootstrap_node)
    workflow.add_node("margin_variance", margin_variance_node)
    workflow.add_node("gradient_symmetric", gradient_symmetric_node)
    workflow.add_node("buja", buja_node)
    workflow.add_node("noise_split", noise_split_node)
    workflow.add_node("lol", lol_node)
    workflow.add_node("assemble_report", assemble_report_node)

    workflow.set_entry_point("classify_loss")

    workflow.add_conditional_edges(
        "classify_loss",
        route_on_config,
        {"continue": "load_data", "report": "assemble_report"},
    )
    workflow.add_conditional_edges(
        "load_data",
        route_on_config,
        {"continue": "bootstrap", "report": "assemble_report"},
    )
    workflow.add_conditional_edges(
        "bootstrap",
        route_after_bootstrap,
        {"decompose": "margin_variance", "report": "assemble_report"},
    )

    # Decompositions run in a fixed order so reports are deterministic
    workflow.add_edge("margin_variance", "gradient_symmetric")
    workflow.add_edge("gradient_symmetric", "buja")
    workflow.add_edge("buja", "noise_split")
    workflow.add_edge("noise_split", "lol")
    workflow.add_edge("lol", "assemble_report")

    workflow.add_edge("assemble_report", END)

    return workflow.compile()


def run_diagnose(
    loss_spec: str,
    data_path: Optional[str] = None,
    synthetic_spec: Optional[str] = None,
    models: int = 50,
    seed: int = 0,
    n_jobs: int = 1,
    per_point: bool = False,
    require_noise: bool = False,
    train_options: Optional[Dict[str, Any]] = None,
) -> DiagnoseState:
    """Run the diagnose workflow to completion and return its final state."""
    initial_state: DiagnoseState = {
        "loss_spec": loss_spec,
        "data_path": data_path,
        "synthetic_spec": synthetic_spec,
        "models": models,
        "seed": seed,
        "n_jobs": n_jobs,
        "per_point": per_point,
        "require_noise": require_noise,
        "train_options": dict(train_options or {}),
        "reports": {},
        "notices": [],
        "warnings": [],
        "timing": {},
        "completed_steps": [],
        "errors": [],
        "config_error": False,
    }
    return create_diagnose_workflow().invoke(initial_state)
