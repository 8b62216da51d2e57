"""
Ambiguity decompositions for finite ensembles and their combiners.

Members are stored as an M×N matrix of margins f_i(x_j). The arithmetic
(and weighted) combiner is f̄ = Σ α_i f_i; the additive combiner sums the
members and is analysed through the inflated margins M·α_i·f_i; the
centroid combiner is the quasi-arithmetic mean in −L̲'∘ψ⁻¹ space.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np

from .bregman import BregmanGenerator, divergence
from .decomp import MarginSampleMatrix, require_gradient_symmetric, residual_tolerance, summarize
from .errors import ConfigError, LinkDomainError, ParameterError
from .loss_zoo import LossDescriptor
from .risk_link import LinkBundle, bregman_at_margin, bregman_between_margins
from .schemas.reports import DecompositionReport
from .utils.logging_config import get_logger

logger = get_logger("ensemble")

Combiner = Literal["arithmetic", "additive", "weighted", "centroid"]

CENTROID_CLAMP_BUDGET = 0.01
CENTROID_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Member margins with their combination rule.

    ``weights`` default to 1/M for the averaging combiners and to 1 for the
    additive combiner (a plain sum of members).
    """

    member_margins: np.ndarray
    weights: Optional[np.ndarray] = None
    combiner: Combiner = "arithmetic"

    def __post_init__(self):
        margins = np.asarray(self.member_margins, dtype=float)
        if margins.ndim == 1:
            margins = margins[:, None]
        if margins.ndim != 2 or margins.size == 0:
            raise ParameterError(f"member margins must be an M×N matrix, got shape {margins.shape}")
        if self.combiner not in ("arithmetic", "additive", "weighted", "centroid"):
            raise ParameterError(f"unknown combiner '{self.combiner}'")
        object.__setattr__(self, "member_margins", margins)

        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (margins.shape[0],) or np.any(weights < 0):
                raise ParameterError("member weights must be M non-negative values")
            if self.combiner != "additive" and abs(float(np.sum(weights)) - 1.0) > 1e-12:
                raise ParameterError(f"{self.combiner} combiner weights must sum to 1")
            object.__setattr__(self, "weights", weights)

    @property
    def member_count(self) -> int:
        return self.member_margins.shape[0]

    @property
    def point_count(self) -> int:
        return self.member_margins.shape[1]

    @property
    def is_uniform(self) -> bool:
        if self.weights is None:
            return True
        return bool(np.all(self.weights == self.weights[0]))

    def alpha(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        fill = 1.0 if self.combiner == "additive" else 1.0 / self.member_count
        return np.full(self.member_count, fill)

    def as_samples(self) -> MarginSampleMatrix:
        """The members as an equally (or α-) weighted model distribution."""
        if self.combiner == "additive":
            return MarginSampleMatrix(self.inflated_margins())
        return MarginSampleMatrix(self.member_margins, None if self.weights is None else self.weights)

    def inflated_margins(self) -> np.ndarray:
        """M·α_i·f_i, whose plain mean is the additive output Σ α_i f_i."""
        return self.member_count * self.alpha()[:, None] * self.member_margins

    def arithmetic_mean(self) -> np.ndarray:
        if self.combiner == "additive":
            return np.mean(self.inflated_margins(), axis=0)
        return np.sum(self.alpha()[:, None] * self.member_margins, axis=0)


def _labels(spec: EnsembleSpec, labels) -> np.ndarray:
    y = np.asarray(labels, dtype=float)
    if y.shape != (spec.point_count,) or not np.all(np.isin(y, (-1.0, 1.0))):
        raise ParameterError(f"labels must be {spec.point_count} values in {{-1, +1}}")
    return y


def _ambiguity_report(
    theorem_id: str,
    title: str,
    identity: str,
    loss: LossDescriptor,
    members: np.ndarray,
    weights: np.ndarray,
    combined: np.ndarray,
    y: np.ndarray,
    label_free: bool,
    per_point: bool,
    extras: Optional[dict] = None,
    notes: Optional[list] = None,
) -> DecompositionReport:
    gen = BregmanGenerator.from_loss(loss)
    w = weights[:, None]
    ensemble_loss = loss.eval(y * combined)
    average_error = np.sum(w * loss.eval(y[None, :] * members), axis=0)
    if label_free:
        ambiguity = np.sum(w * divergence(gen, members, combined[None, :]), axis=0)
    else:
        ambiguity = np.sum(w * divergence(gen, y[None, :] * members, (y * combined)[None, :]), axis=0)
    return summarize(
        theorem_id,
        title,
        identity,
        ensemble_loss,
        {"average_error": average_error, "ambiguity": ambiguity},
        ensemble_loss - average_error + ambiguity,
        residual_tolerance(loss),
        members.shape[0],
        per_point=per_point,
        extras={**(extras or {}), "min_ambiguity": float(np.min(ambiguity))},
        notes=notes,
    )


def margin_ambiguity(
    loss: LossDescriptor,
    spec: EnsembleSpec,
    labels,
    per_point: bool = False,
) -> DecompositionReport:
    """ℓ(y·f̄) = Σ α_i ℓ(y·f_i) − Σ α_i B_ℓ(y·f_i, y·f̄) for any strictly convex ℓ."""
    if spec.combiner not in ("arithmetic", "weighted"):
        raise ParameterError(f"margin ambiguity needs an averaging combiner, not '{spec.combiner}'")
    y = _labels(spec, labels)
    return _ambiguity_report(
        "margin_ambiguity",
        "Margin ambiguity decomposition",
        "l(y fbar) = mean l(y f_i) - mean B_l(y f_i, y fbar)",
        loss,
        spec.member_margins,
        spec.alpha(),
        spec.arithmetic_mean(),
        y,
        label_free=False,
        per_point=per_point,
    )


def label_free_ambiguity_gap(loss: LossDescriptor, spec: EnsembleSpec, labels) -> float:
    """
    max_j |Σ α_i B_ℓ(f_i, f̄) − Σ α_i B_ℓ(y·f_i, y·f̄)|.

    Zero for gradient-symmetric losses; any loss may be probed, which makes
    this the witness that the label-free form fails otherwise.
    """
    y = _labels(spec, labels)
    gen = BregmanGenerator.from_loss(loss)
    f, f_bar, w = spec.member_margins, spec.arithmetic_mean(), spec.alpha()[:, None]
    free = np.sum(w * divergence(gen, f, f_bar[None, :]), axis=0)
    margin = np.sum(w * divergence(gen, y[None, :] * f, (y * f_bar)[None, :]), axis=0)
    return float(np.max(np.abs(free - margin)))


def gradient_symmetric_ambiguity(
    loss: LossDescriptor,
    spec: EnsembleSpec,
    labels,
    per_point: bool = False,
    c: Optional[float] = None,
) -> DecompositionReport:
    """
    ℓ(y·f̄) = Σ α_i ℓ(y·f_i) − Σ α_i B_ℓ(f_i, f̄) with a target-independent ambiguity.

    Raises:
        DecompositionInapplicableError: ℓ is not gradient-symmetric
    """
    c = require_gradient_symmetric(loss, c, "the label-free ambiguity decomposition")
    if spec.combiner not in ("arithmetic", "weighted"):
        raise ParameterError(f"ambiguity needs an averaging combiner, not '{spec.combiner}'")
    y = _labels(spec, labels)
    return _ambiguity_report(
        "gradient_symmetric_ambiguity",
        "Ambiguity decomposition for gradient-symmetric losses",
        "l(y fbar) = mean l(y f_i) - mean B_l(f_i, fbar)",
        loss,
        spec.member_margins,
        spec.alpha(),
        spec.arithmetic_mean(),
        y,
        label_free=True,
        per_point=per_point,
        extras={"gradient_symmetry_c": float(c), "margin_ambiguity_gap": label_free_ambiguity_gap(loss, spec, y)},
    )


def additive_ambiguity(
    loss: LossDescriptor,
    spec: EnsembleSpec,
    labels,
    per_point: bool = False,
    c: Optional[float] = None,
) -> DecompositionReport:
    """
    ℓ(y·f_add) = (1/M)Σ ℓ(y·Mα_i f_i) − (1/M)Σ B_ℓ(Mα_i f_i, f_add).

    Raises:
        DecompositionInapplicableError: ℓ is not gradient-symmetric
    """
    c = require_gradient_symmetric(loss, c, "the additive-ensemble ambiguity decomposition")
    if spec.combiner != "additive":
        raise ParameterError(f"additive ambiguity needs the additive combiner, not '{spec.combiner}'")
    y = _labels(spec, labels)
    inflated = spec.inflated_margins()
    m = spec.member_count
    notes = [] if spec.weights is None else ["weighted additive ensemble: members inflated to M·alpha_i·f_i"]
    return _ambiguity_report(
        "additive_ambiguity",
        "Ambiguity decomposition for additive ensembles",
        "l(y f_add) = mean l(y M f_i) - mean B_l(M f_i, f_add)",
        loss,
        inflated,
        np.full(m, 1.0 / m),
        np.mean(inflated, axis=0),
        y,
        label_free=True,
        per_point=per_point,
        extras={"gradient_symmetry_c": float(c)},
        notes=notes,
    )


def centroid_combine(
    loss: LossDescriptor,
    bundle: LinkBundle,
    member_margins,
    weights=None,
):
    """
    Quasi-arithmetic combination ψ([−L̲']⁻¹(Σ α_i −L̲'(ψ⁻¹(f_i)))).

    Accepts one row of member margins (returns a float) or an M×N matrix
    (returns N values).

    Raises:
        LinkDomainError: more than 1% of a point's members needed clamping
            into the link range
    """
    f = np.asarray(member_margins, dtype=float)
    single = f.ndim == 1
    if single:
        f = f[:, None]
    m = f.shape[0]
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)

    clamped_f, clamped = bundle.clamp_margins(f)
    over_budget = np.sum(clamped, axis=0) > CENTROID_CLAMP_BUDGET * m
    if np.any(over_budget):
        j = int(np.argmax(over_budget))
        raise LinkDomainError(
            f"centroid combiner: {int(np.sum(clamped[:, j]))} of {m} members at point {j} lie outside "
            f"the link range {bundle.link_range} of {loss.spec}"
        )
    dual = np.sum(w[:, None] * bundle.margin_to_dual(clamped_f), axis=0)
    combined = bundle.dual_to_margin(dual)
    return float(combined[0]) if single else combined


def centroid_ambiguity(
    loss: LossDescriptor,
    bundle: LinkBundle,
    spec: EnsembleSpec,
    targets=None,
    labels=None,
    per_point: bool = False,
) -> DecompositionReport:
    """
    B_{−L̲}(p, q̄) = Σ α_i B_{−L̲}(p, q_i) − Σ α_i B_{−L̲}(q̄, q_i) with q̄ the centroid.

    ``targets`` are probabilities p; observed labels become Y_{0/1}. The
    report also records how far the centroid output moves from the
    arithmetic mean, which is zero exactly for gradient-symmetric losses.
    """
    if targets is None:
        if labels is None:
            raise ParameterError("centroid ambiguity needs targets or labels")
        p = (_labels(spec, labels) > 0).astype(float)
    else:
        p = np.asarray(targets, dtype=float)
        if p.shape != (spec.point_count,) or np.any((p < 0.0) | (p > 1.0)):
            raise ParameterError(f"targets must be {spec.point_count} probabilities")

    if spec.combiner == "additive":
        raise ParameterError("the centroid combiner averages members; use an averaging combiner")
    w = spec.alpha()
    combined = centroid_combine(loss, bundle, spec.member_margins, w)
    members, clamped = bundle.clamp_margins(spec.member_margins)

    ensemble_term = bregman_at_margin(bundle, p, combined)
    average_term = np.sum(w[:, None] * bregman_at_margin(bundle, p, members), axis=0)
    ambiguity = np.sum(w[:, None] * bregman_between_margins(bundle, combined, members), axis=0)

    deviation = float(np.max(np.abs(combined - np.sum(w[:, None] * spec.member_margins, axis=0))))
    notes = []
    if not spec.is_uniform:
        notes.append("extension: weighted centroid combiner (weighted means inside the quasi-arithmetic form)")
    logger.debug(f"centroid combiner deviates from the arithmetic mean by {deviation:.3e}")
    return summarize(
        "centroid_ambiguity",
        "Ambiguity decomposition under the centroid combiner",
        "B(p, qbar) = mean B(p, q_i) - mean B(qbar, q_i)",
        ensemble_term,
        {"average_error": average_term, "ambiguity": ambiguity},
        ensemble_term - average_term + ambiguity,
        max(CENTROID_RESIDUAL_TOL, residual_tolerance(loss)),
        spec.member_count,
        per_point=per_point,
        extras={"mean_deviation": deviation},
        clamp_flags={"clamped_members": int(np.sum(clamped))},
        notes=notes,
    )


def regression_ambiguity(members, target, per_point: bool = False) -> DecompositionReport:
    """(f̄ − y)² = mean (y − f_i)² − mean (f̄ − f_i)² for real-valued targets."""
    f = np.asarray(members, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    y = np.broadcast_to(np.asarray(target, dtype=float), (f.shape[1],))
    f_bar = np.mean(f, axis=0)
    ensemble_error = (f_bar - y) ** 2
    average_error = np.mean((y[None, :] - f) ** 2, axis=0)
    ambiguity = np.mean((f_bar[None, :] - f) ** 2, axis=0)
    return summarize(
        "regression_ambiguity",
        "Ambiguity decomposition for squared-error regression",
        "(fbar - y)^2 = mean (y - f_i)^2 - mean (fbar - f_i)^2",
        ensemble_error,
        {"average_error": average_error, "ambiguity": ambiguity},
        ensemble_error - average_error + ambiguity,
        1e-9,
        f.shape[0],
        per_point=per_point,
    )


@dataclass(frozen=True)
class MemberTable:
    """Member margins read from ``point_id,member_1..member_M,label[,p]``."""

    point_ids: List[str]
    margins: np.ndarray
    labels: np.ndarray
    targets: Optional[np.ndarray] = None


def load_members_csv(path: str | Path) -> MemberTable:
    """
    Read an ensemble margins file.

    ``member_k`` columns are taken in numeric order; an optional ``p``
    column gives the target probabilities for the centroid combiner.
    """
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            columns = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read members file {path}: {exc}") from exc

    member_columns = sorted(
        (c for c in columns if c.startswith("member_") and c[len("member_"):].isdigit()),
        key=lambda c: int(c[len("member_"):]),
    )
    if "point_id" not in columns or "label" not in columns or not member_columns or not rows:
        raise ConfigError(f"members file {path} needs point_id, member_1..member_M and label columns")
    try:
        margins = np.array([[float(row[c]) for row in rows] for c in member_columns])
        labels = np.array([float(row["label"]) for row in rows])
        targets = np.array([float(row["p"]) for row in rows]) if "p" in columns else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric value in members file {path}") from exc
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ConfigError(f"labels in {path} must be -1 or +1")
    if not np.all(np.isfinite(margins)):
        raise ConfigError(f"non-finite member margin in {path}")
    return MemberTable([row["point_id"] for row in rows], margins, labels, targets)
