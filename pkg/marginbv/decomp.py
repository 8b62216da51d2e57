"""
Risk decompositions over an empirical distribution of models.

Every estimator takes an M×N matrix of model outputs f(x_j; D_i). The
expectation over training sets is the (weighted) mean over rows; the
expectation over points is the uniform mean over columns. With posteriors
p_j the expectation over Y|x is exact, otherwise the observed labels are
used. Identities are therefore exact up to rounding and every report
carries its residual.
"""

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from .bregman import BregmanGenerator, divergence
from .errors import DecompositionInapplicableError, InvariantViolationError, NumericError, ParameterError
from .loss_zoo import LossDescriptor, classify_gradient_symmetry, even_odd_split
from .risk_link import LinkBundle, bregman_at_margin, bregman_between_margins
from .schemas.reports import DecompositionReport
from .utils.logging_config import get_logger
from .utils.numerics import check_finite

logger = get_logger("decomp")

ANALYTIC_RESIDUAL_TOL = 1e-9
TABULATED_RESIDUAL_TOL = 1e-6
BUJA_RESIDUAL_TOL = 1e-8
CLAMP_WARN_FRACTION = 0.10
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MarginSampleMatrix:
    """Model outputs f(x_j; D_i); rows are models, columns are points."""

    margins: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        margins = np.asarray(self.margins, dtype=float)
        if margins.ndim == 1:
            margins = margins[:, None]
        if margins.ndim != 2 or margins.shape[0] < 1 or margins.shape[1] < 1:
            raise ParameterError(f"margins must be an M×N matrix, got shape {np.shape(self.margins)}")
        check_finite(margins, margins, "margin")
        object.__setattr__(self, "margins", margins)

        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (margins.shape[0],):
                raise ParameterError(f"need {margins.shape[0]} model weights, got shape {weights.shape}")
            if np.any(weights < 0) or abs(float(np.sum(weights)) - 1.0) > WEIGHT_SUM_TOL:
                raise ParameterError("model weights must be non-negative and sum to 1")
            object.__setattr__(self, "weights", weights)

    @property
    def model_count(self) -> int:
        return self.margins.shape[0]

    @property
    def point_count(self) -> int:
        return self.margins.shape[1]

    def weight_vector(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.model_count, 1.0 / self.model_count)
        return self.weights

    def expect(self, values: np.ndarray) -> np.ndarray:
        """E_D of an M×N array, one value per point, summed in row order."""
        return np.sum(self.weight_vector()[:, None] * values, axis=0)

    def central(self) -> np.ndarray:
        """f*_j = E_D[f(x_j; D)]."""
        return self.expect(self.margins)


@dataclass(frozen=True)
class BujaInputs:
    """
    Probability-side view of a margin matrix under an invertible link.

    ``implied`` and ``centroid`` are q and q* after ``inverse_link`` and so
    are clipped to [1e-12, 1 − 1e-12]; ``margins`` and ``centroid_margin``
    carry the same points unclipped.
    """

    posteriors: np.ndarray
    implied: np.ndarray
    centroid: np.ndarray
    margins: np.ndarray
    centroid_margin: np.ndarray
    clamped: np.ndarray

    @property
    def clamped_fraction(self) -> float:
        return float(np.mean(self.clamped))


def residual_tolerance(loss: LossDescriptor) -> float:
    return ANALYTIC_RESIDUAL_TOL if loss.grad_is_analytic else TABULATED_RESIDUAL_TOL


def _positive_mass(point_count: int, labels=None, posteriors=None) -> np.ndarray:
    """P(Y = +1) per point: the posterior when given, else the observed label as 0/1."""
    if posteriors is not None:
        p = np.asarray(posteriors, dtype=float)
        if p.shape != (point_count,) or np.any((p < 0.0) | (p > 1.0)):
            raise ParameterError(f"posteriors must be {point_count} values in [0, 1]")
        return p
    if labels is None:
        raise ParameterError("either labels or posteriors are required")
    y = np.asarray(labels)
    if y.shape != (point_count,) or not np.all(np.isin(y, (-1, 1))):
        raise ParameterError(f"labels must be {point_count} values in {{-1, +1}}")
    return (y > 0).astype(float)


def _mix(a: np.ndarray, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    """a·plus + (1 − a)·minus without evaluating 0·inf."""
    return np.where(a > 0.0, a * plus, 0.0) + np.where(a < 1.0, (1.0 - a) * minus, 0.0)


def summarize(
    theorem_id: str,
    title: str,
    identity: str,
    expected: np.ndarray,
    components: Mapping[str, np.ndarray],
    residual: np.ndarray,
    tolerance: float,
    model_count: int,
    per_point: bool = False,
    extras: Optional[Dict[str, float]] = None,
    clamp_flags: Optional[Dict[str, int]] = None,
    notes: Optional[list] = None,
) -> DecompositionReport:
    """Average per-point series into a report and flag a residual above tolerance."""
    expected_risk = float(np.mean(expected))
    residual_mean = float(np.mean(residual))
    relative = abs(residual_mean) / max(1.0, abs(expected_risk))
    warnings = []
    if not relative <= tolerance:
        message = f"{theorem_id}: relative residual {relative:.3e} exceeds {tolerance:g}"
        logger.warning(message)
        warnings.append(message)

    series = None
    if per_point:
        series = {"expected_risk": [float(x) for x in expected]}
        series.update({name: [float(x) for x in values] for name, values in components.items()})
        series["residual"] = [float(x) for x in residual]

    return DecompositionReport(
        theorem_id=theorem_id,
        title=title,
        identity=identity,
        expected_risk=expected_risk,
        components={name: float(np.mean(values)) for name, values in components.items()},
        residual=residual_mean,
        relative_residual=relative,
        tolerance=tolerance,
        point_count=int(np.size(expected)),
        model_count=model_count,
        per_point=series,
        extras=dict(extras or {}),
        clamp_flags=dict(clamp_flags or {}),
        notes=list(notes or []),
        warnings=warnings,
    )


def _margin_terms(loss: LossDescriptor, samples: MarginSampleMatrix, a: np.ndarray):
    """Per-point expected risk, central risk and margin variance."""
    gen = BregmanGenerator.from_loss(loss)
    f = samples.margins
    f_star = samples.central()
    expected = samples.expect(_mix(a, loss.eval(f), loss.eval(-f)))
    central = _mix(a, loss.eval(f_star), loss.eval(-f_star))
    variance = samples.expect(
        _mix(a, divergence(gen, f, f_star[None, :]), divergence(gen, -f, -f_star[None, :]))
    )
    check_finite(expected, np.arange(samples.point_count), f"expected {loss.name} risk")
    return expected, central, variance


def margin_variance_decomposition(
    loss: LossDescriptor,
    samples: MarginSampleMatrix,
    labels=None,
    posteriors=None,
    per_point: bool = False,
) -> DecompositionReport:
    """
    E[ℓ(Y·f)] = ℓ(Y·f*) + E[B_ℓ(Y·f, Y·f*)] for any strictly convex ℓ.

    Raises:
        NumericError: a loss or divergence evaluation is not finite
    """
    a = _positive_mass(samples.point_count, labels, posteriors)
    expected, central, variance = _margin_terms(loss, samples, a)
    notes = [] if posteriors is not None else ["empirical Y*: expectation over Y uses the observed labels"]
    return summarize(
        "margin_variance",
        "Margin variance decomposition",
        "E[l(Yf)] = l(Yf*) + E[B_l(Yf, Yf*)]",
        expected,
        {"central_risk": central, "margin_variance": variance},
        expected - central - variance,
        residual_tolerance(loss),
        samples.model_count,
        per_point=per_point,
        notes=notes,
    )


def require_gradient_symmetric(loss: LossDescriptor, c: Optional[float], what: str) -> float:
    if c is None:
        c = classify_gradient_symmetry(loss)
    if c is None:
        raise DecompositionInapplicableError(
            f"{what} needs a gradient-symmetric loss: a target-independent variance term exists "
            f"if and only if l'(v) + l'(-v) is constant, which fails for {loss.spec}"
        )
    return c


def bv_decomposition_gradient_symmetric(
    loss: LossDescriptor,
    samples: MarginSampleMatrix,
    labels=None,
    posteriors=None,
    per_point: bool = False,
    c: Optional[float] = None,
) -> DecompositionReport:
    """
    E[ℓ(Y·f)] = E[ℓ(Y·f*)] + E_D[B_ℓ(f, f*)] with a label-free variance.

    Raises:
        DecompositionInapplicableError: ℓ is not gradient-symmetric
    """
    c = require_gradient_symmetric(loss, c, "the label-free bias-variance decomposition")
    a = _positive_mass(samples.point_count, labels, posteriors)
    expected, central, margin_variance = _margin_terms(loss, samples, a)
    gen = BregmanGenerator.from_loss(loss)
    variance = samples.expect(divergence(gen, samples.margins, samples.central()[None, :]))

    notes = [] if posteriors is not None else ["empirical Y*: expectation over Y uses the observed labels"]
    return summarize(
        "gradient_symmetric",
        "Bias-variance decomposition for gradient-symmetric losses",
        "E[l(Yf)] = E[l(Yf*)] + E_D[B_l(f, f*)]",
        expected,
        {"bias_plus_noise": central, "variance": variance},
        expected - central - variance,
        residual_tolerance(loss),
        samples.model_count,
        per_point=per_point,
        extras={
            "gradient_symmetry_c": float(c),
            "margin_variance_gap": float(np.max(np.abs(variance - margin_variance))),
        },
        notes=notes,
    )


def buja_inputs(bundle: LinkBundle, samples: MarginSampleMatrix, posteriors) -> BujaInputs:
    """
    q = ψ⁻¹(f) and the centroid q* = [−L̲']⁻¹(E_D[−L̲'(q)]), also kept as ψ(q*).

    −L̲'(ψ⁻¹(f)) is ``margin_to_dual(f)`` and ψ(q*) its inverse, so the
    centroid never passes through a probability.
    """
    p = np.asarray(posteriors, dtype=float)
    if p.shape != (samples.point_count,) or np.any((p < 0.0) | (p > 1.0)):
        raise ParameterError(f"posteriors must be {samples.point_count} values in [0, 1]")
    clamped_f, clamped = bundle.clamp_margins(samples.margins)
    dual = samples.expect(bundle.margin_to_dual(clamped_f))
    centroid_margin = bundle.dual_to_margin(dual)
    centroid, _ = bundle.to_probability(centroid_margin)
    return BujaInputs(
        posteriors=p,
        implied=bundle.inverse_link(clamped_f),
        centroid=centroid,
        margins=clamped_f,
        centroid_margin=centroid_margin,
        clamped=clamped,
    )


def buja_decomposition(
    loss: LossDescriptor,
    bundle: LinkBundle,
    samples: MarginSampleMatrix,
    posteriors,
    per_point: bool = False,
) -> DecompositionReport:
    """
    E_D[B_{−L̲}(p, q)] = B_{−L̲}(p, q*) + E_D[B_{−L̲}(q*, q)].

    Every divergence is taken from the margins (``bregman_at_margin``,
    ``bregman_between_margins``), never from clipped probabilities.

    Raises:
        LinkDomainError: the centroid cannot be inverted on the link bracket
    """
    inputs = buja_inputs(bundle, samples, posteriors)
    p, f_star = inputs.posteriors, inputs.centroid_margin

    excess = samples.expect(bregman_at_margin(bundle, p, inputs.margins))
    bias = bregman_at_margin(bundle, p, f_star)
    variance = samples.expect(bregman_between_margins(bundle, f_star, inputs.margins))

    dual_gap = float(np.max(np.abs(
        bundle.margin_to_dual(inputs.centroid_margin)
        - samples.expect(bundle.margin_to_dual(inputs.margins))
    )))
    centroid_gap = float(np.max(np.abs(inputs.centroid_margin - samples.central())))

    clamp_count = int(np.sum(inputs.clamped))
    notes = []
    if clamp_count:
        message = (
            f"{clamp_count} of {inputs.clamped.size} margins clamped into the link range "
            f"{bundle.link_range}"
        )
        notes.append(message)
        if inputs.clamped_fraction > CLAMP_WARN_FRACTION:
            logger.warning(message)

    report = summarize(
        "buja",
        "Expected excess risk as bias plus variance in probability space",
        "E_D[B(p, q)] = B(p, q*) + E_D[B(q*, q)]",
        excess,
        {"bias": bias, "variance": variance},
        excess - bias - variance,
        max(BUJA_RESIDUAL_TOL, residual_tolerance(loss)),
        samples.model_count,
        per_point=per_point,
        extras={"centroid_dual_gap": dual_gap, "centroid_margin_gap": centroid_gap},
        clamp_flags={"clamped_margins": clamp_count},
        notes=notes,
    )
    if inputs.clamped_fraction > CLAMP_WARN_FRACTION:
        report.warnings.append(
            f"{inputs.clamped_fraction:.1%} of implied probabilities were clamped"
        )
    return report


def lol_decomposition(
    loss: LossDescriptor,
    samples: MarginSampleMatrix,
    labels=None,
    posteriors=None,
    per_point: bool = False,
    c: Optional[float] = None,
) -> DecompositionReport:
    """
    E[ℓ(Y·f)] = E[b·Y*·f*] + E[E_D[ℓ_e(f)]] for a linear-odd loss.

    When ℓ is also gradient-symmetric the Jensen gap of ℓ_e is checked
    against the variance term and b·Y*·f* + ℓ_e(f*) against the bias.

    Raises:
        DecompositionInapplicableError: the odd part of ℓ is not linear
    """
    parts = even_odd_split(loss)
    if not parts.is_linear_odd:
        raise DecompositionInapplicableError(
            f"{loss.spec} is not linear-odd: its odd part is not b·v"
        )
    b = parts.odd_slope
    a = _positive_mass(samples.point_count, labels, posteriors)
    y_star = 2.0 * a - 1.0
    f = samples.margins
    f_star = samples.central()

    expected = samples.expect(_mix(a, loss.eval(f), loss.eval(-f)))
    margin_term = b * y_star * f_star
    even_term = samples.expect(parts.even(f))
    even_at_centre = parts.even(f_star)
    jensen_gap = even_term - even_at_centre

    extras = {"odd_slope": float(b)}
    if c is None:
        c = classify_gradient_symmetry(loss)
    if c is not None:
        central = _mix(a, loss.eval(f_star), loss.eval(-f_star))
        extras["bias_gap"] = float(np.max(np.abs(central - (margin_term + even_at_centre))))
        try:
            variance = samples.expect(divergence(BregmanGenerator.from_loss(loss), f, f_star[None, :]))
            extras["variance_gap"] = float(np.max(np.abs(variance - jensen_gap)))
        except InvariantViolationError:
            # non-convex loss: no Bregman variance to compare against
            pass

    notes = [] if posteriors is not None else ["empirical Y*: Y* is the observed label at each point"]
    if np.min(jensen_gap) < -1e-12:
        notes.append("negative Jensen gap: the even part is not convex on these margins")
    return summarize(
        "lol",
        "Decomposition for linear-odd losses",
        "E[l(Yf)] = E[b Y* f*] + E[E_D[l_e(f)]]",
        expected,
        {"expected_margin_term": margin_term, "even_part_term": even_term},
        expected - margin_term - even_term,
        residual_tolerance(loss),
        samples.model_count,
        per_point=per_point,
        extras={**extras, "jensen_gap": float(np.mean(jensen_gap))},
        notes=notes,
    )


@dataclass(frozen=True)
class NoiseBiasSplit:
    """Per-point noise L̲(p) and bias B_{−L̲}(p, ψ⁻¹(f*))."""

    noise: np.ndarray
    bias: np.ndarray
    l0_offset: float
    fallback_points: int = 0

    @property
    def total(self) -> np.ndarray:
        return self.noise + self.bias


def noise_bias_split(loss: LossDescriptor, bundle: LinkBundle, f_star, posteriors) -> NoiseBiasSplit:
    """
    Separate E_Y[ℓ(Y·f*)] into noise L̲(p) and bias B_{−L̲}(p, ψ⁻¹(f*)).

    Noise is evaluated in its Bregman form p·B(1, p) + (1 − p)·B(0, p) + L̲(0);
    at p ∈ {0, 1}, or when that form is not finite, the closed minimum risk
    is used instead.
    """
    p = np.atleast_1d(np.asarray(posteriors, dtype=float))
    f_star = np.atleast_1d(np.asarray(f_star, dtype=float))
    if p.shape != f_star.shape or np.any((p < 0.0) | (p > 1.0)):
        raise ParameterError("posteriors must match f* and lie in [0, 1]")
    gen = bundle.generator()
    l0 = float(bundle.min_risk(0.0))
    if not math.isfinite(l0):
        raise NumericError(f"minimum risk at 0 is not finite for {loss.spec}")

    direct = np.asarray(bundle.min_risk(p), dtype=float)
    noise = direct.copy()
    interior = (p > 0.0) & (p < 1.0)
    fallback = int(np.sum(~interior))
    if np.any(interior):
        pi = p[interior]
        try:
            noise[interior] = (
                pi * divergence(gen, np.ones_like(pi), pi)
                + (1.0 - pi) * divergence(gen, np.zeros_like(pi), pi)
                + l0
            )
        except NumericError as exc:
            logger.warning(f"Bregman form of the noise not finite ({exc}); using the minimum risk directly")
            fallback = int(p.size)

    bias = bregman_at_margin(bundle, p, f_star)
    return NoiseBiasSplit(noise=noise, bias=np.asarray(bias, dtype=float), l0_offset=l0, fallback_points=fallback)


def noise_bias_report(
    loss: LossDescriptor,
    bundle: LinkBundle,
    samples: MarginSampleMatrix,
    posteriors,
    per_point: bool = False,
) -> DecompositionReport:
    """E_Y[ℓ(Y·f*)] = noise + bias, checked against the central-model risk."""
    p = np.asarray(posteriors, dtype=float)
    f_star = samples.central()
    split = noise_bias_split(loss, bundle, f_star, p)
    central = _mix(p, loss.eval(f_star), loss.eval(-f_star))
    return summarize(
        "noise_split",
        "Noise and bias of the central model",
        "E_Y[l(Yf*)] = Lmin(p) + B(p, psi^-1(f*))",
        central,
        {"noise": split.noise, "bias": split.bias},
        central - split.noise - split.bias,
        max(BUJA_RESIDUAL_TOL, residual_tolerance(loss)),
        samples.model_count,
        per_point=per_point,
        extras={"l0_offset": split.l0_offset},
        clamp_flags={"noise_fallback_points": split.fallback_points},
    )
