"""Workflow definitions for marginbv."""

from .diagnose_workflow import create_diagnose_workflow, run_diagnose

__all__ = ["create_diagnose_workflow", "run_diagnose"]
