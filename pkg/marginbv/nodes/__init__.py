"""Node functions for the diagnose workflow."""

from .bootstrap_node import bootstrap_node
from .classify_loss import classify_loss_node
from .data_node import load_data_node
from .decomposition_nodes import (
    buja_node,
    gradient_symmetric_node,
    lol_node,
    margin_variance_node,
    noise_split_node,
)
from .report_node import assemble_report_node

__all__ = [
    "classify_loss_node",
    "load_data_node",
    "bootstrap_node",
    "margin_variance_node",
    "gradient_symmetric_node",
    "buja_node",
    "noise_split_node",
    "lol_node",
    "assemble_report_node",
]
