"""
marginbv: bias-variance and ambiguity decompositions for margin losses.

The library side exposes the loss catalogue, Bregman divergences, links
and minimum risks, the decompositions and the ensemble combiners; the
``marginbv`` command wraps them in verify/diagnose/ensemble commands.
"""

__version__ = "1.0.0"

from .decomp import (
    MarginSampleMatrix,
    buja_decomposition,
    bv_decomposition_gradient_symmetric,
    lol_decomposition,
    margin_variance_decomposition,
    noise_bias_split,
)
from .ensemble import (
    EnsembleSpec,
    additive_ambiguity,
    centroid_ambiguity,
    centroid_combine,
    gradient_symmetric_ambiguity,
    margin_ambiguity,
)
from .errors import MarginBVError
from .loss_zoo import CATALOGUE, LossDescriptor, builtin_loss, classify_gradient_symmetry, load_loss
from .risk_link import LinkBundle, build_link_bundle
from .schemas.reports import DecompositionReport, Report

__all__ = [
    "__version__",
    "CATALOGUE",
    "LossDescriptor",
    "builtin_loss",
    "load_loss",
    "classify_gradient_symmetry",
    "LinkBundle",
    "build_link_bundle",
    "MarginSampleMatrix",
    "margin_variance_decomposition",
    "bv_decomposition_gradient_symmetric",
    "buja_decomposition",
    "lol_decomposition",
    "noise_bias_split",
    "EnsembleSpec",
    "margin_ambiguity",
    "gradient_symmetric_ambiguity",
    "additive_ambiguity",
    "centroid_combine",
    "centroid_ambiguity",
    "DecompositionReport",
    "Report",
    "MarginBVError",
]
