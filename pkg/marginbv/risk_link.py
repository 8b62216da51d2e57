"""
Pointwise risk, minimum risk and the optimal link of a margin loss.

For a posterior p = P(Y = +1 | x):

    L(p, v)  = p·ℓ(v) + (1 − p)·ℓ(−v)
    L̲(p)    = min_v L(p, v),  attained at v = ψ(p)
    ψ⁻¹(f)   = ℓ'(−f) / (ℓ'(f) + ℓ'(−f))          (first-order condition)
    −L̲'(p)  = ℓ(−ψ(p)) − ℓ(ψ(p))                  (envelope identity)

Closed forms on the loss descriptor are used when present; otherwise ψ is
found by bisection on the first-order condition. Divergences of −L̲ at
an implied probability ψ⁻¹(f) are evaluated from f itself;
``inverse_link`` is clipped to [1e-12, 1 − 1e-12] and loses the tail.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .bregman import BregmanGenerator, find_limit_anchor
from .errors import LinkDomainError
from .loss_zoo import LossDescriptor
from .utils.logging_config import get_logger
from .utils.numerics import bisect_increasing

logger = get_logger("risk_link")

ArrayFn = Callable[[np.ndarray], np.ndarray]

P_CLIP = 1e-12
LINK_BRACKET = 50.0
RANGE_CLAMP = 1e-9
P_GRID = np.round(np.arange(1, 100) / 100.0, 2)
MIN_RISK_FD_STEP = 1e-6


def clip_probability(p) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=float), P_CLIP, 1.0 - P_CLIP)


def pointwise_risk(loss: LossDescriptor, p, v):
    """L(p, v) = p·ℓ(v) + (1 − p)·ℓ(−v)."""
    scalar = np.ndim(p) == 0 and np.ndim(v) == 0
    p, v = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(v, dtype=float))
    with np.errstate(invalid="ignore"):
        risk = np.where(p > 0.0, p * loss.eval(v), 0.0) + np.where(p < 1.0, (1.0 - p) * loss.eval(-v), 0.0)
    return float(risk) if scalar else risk


@dataclass(frozen=True)
class LinkBundle:
    """
    Link-side view of a loss.

    ``margin_to_dual`` is f ↦ −L̲'(ψ⁻¹(f)) and ``dual_to_margin`` its
    inverse; both are exact compositions, so code that only needs −L̲' of
    an implied probability never round-trips through (0, 1).
    """

    loss: LossDescriptor
    min_risk: ArrayFn
    link: ArrayFn
    inverse_link: ArrayFn
    neg_min_risk_grad: ArrayFn
    link_range: Tuple[float, float]
    margin_to_dual: ArrayFn
    dual_to_margin: ArrayFn
    implied_pair: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
    closed_form: bool = False

    @property
    def has_bounded_range(self) -> bool:
        return math.isfinite(self.link_range[0]) or math.isfinite(self.link_range[1])

    def clamp_margins(self, f) -> tuple[np.ndarray, np.ndarray]:
        """Clamp margins into the open link range; returns (clamped, mask of clamped)."""
        f = np.asarray(f, dtype=float)
        lo, hi = self.link_range
        lo = lo + RANGE_CLAMP if math.isfinite(lo) else -math.inf
        hi = hi - RANGE_CLAMP if math.isfinite(hi) else math.inf
        clamped = np.clip(f, lo, hi)
        return clamped, clamped != f

    def to_probability(self, f) -> tuple[np.ndarray, np.ndarray]:
        """q = ψ⁻¹(f) together with the mask of margins that needed clamping."""
        clamped, mask = self.clamp_margins(f)
        return self.inverse_link(clamped), mask

    def neg_min_risk_grad_inverse(self, z) -> np.ndarray:
        """[−L̲']⁻¹(z)."""
        return self.inverse_link(self.dual_to_margin(z))

    def generator(self) -> BregmanGenerator:
        """−L̲ as a Bregman generator on [0, 1]."""
        min_risk = self.min_risk
        return BregmanGenerator(
            phi=lambda p: -min_risk(p),
            phi_grad=self.neg_min_risk_grad,
            domain=(0.0, 1.0),
            name=f"-Lmin[{self.loss.name}]",
        )


def _numeric_link(loss: LossDescriptor, lo: float, hi: float) -> ArrayFn:
    """ψ(p) by bisection on p·ℓ'(v) − (1 − p)·ℓ'(−v) = 0, increasing in v."""

    def link(p):
        p = clip_probability(p)
        shape = p.shape
        flat = np.atleast_1d(p).ravel()

        def foc(v):
            return flat * loss.grad(v) - (1.0 - flat) * loss.grad(-v)

        try:
            v = bisect_increasing(foc, np.zeros_like(flat), lo, hi, what=f"link of {loss.name}")
        except LinkDomainError as exc:
            raise LinkDomainError(f"{exc}; probability too extreme for {loss.spec}") from exc
        return v.reshape(shape)

    return link


def build_link_bundle(loss: LossDescriptor) -> LinkBundle:
    """
    Assemble ψ, ψ⁻¹, L̲ and −L̲' for a strictly convex loss.

    The link range is (−g⁺, g⁺) when ℓ has a finite minimiser g⁺ (e.g.
    [−1, 1] for the squared loss) and ℝ otherwise.
    """
    anchor = find_limit_anchor(loss)
    g = anchor.g_plus
    link_range = (-g, g) if math.isfinite(g) else (-math.inf, math.inf)
    lo = max(-LINK_BRACKET, link_range[0])
    hi = min(LINK_BRACKET, link_range[1])

    closed_form = loss.known_link is not None and loss.known_inverse_link is not None
    if closed_form:
        raw_link = loss.known_link

        def link(p):
            return raw_link(clip_probability(p))
    else:
        link = _numeric_link(loss, lo, hi)

    if loss.known_inverse_link is not None:
        raw_inverse = loss.known_inverse_link
    else:
        def raw_inverse(f):
            f = np.asarray(f, dtype=float)
            left, right = loss.grad(-f), loss.grad(f)
            return left / (right + left)

    lo_f = link_range[0] + RANGE_CLAMP if math.isfinite(link_range[0]) else -math.inf
    hi_f = link_range[1] - RANGE_CLAMP if math.isfinite(link_range[1]) else math.inf

    def inverse_link(f):
        return clip_probability(raw_inverse(np.clip(np.asarray(f, dtype=float), lo_f, hi_f)))

    def implied_pair(f):
        # unclipped; 1 − q comes from ψ⁻¹(−f) rather than a subtraction
        f = np.clip(np.asarray(f, dtype=float), lo_f, hi_f)
        return raw_inverse(f), raw_inverse(-f)

    def margin_to_dual(f):
        f = np.asarray(f, dtype=float)
        return loss.eval(-f) - loss.eval(f)

    def dual_to_margin(z):
        z = np.asarray(z, dtype=float)
        shape = z.shape
        f = bisect_increasing(margin_to_dual, np.atleast_1d(z).ravel(), lo, hi, what=f"[-L']^-1 of {loss.name}")
        return f.reshape(shape)

    def neg_min_risk_grad(p):
        return margin_to_dual(link(p))

    if loss.known_min_risk is not None:
        raw_min_risk = loss.known_min_risk
    else:
        def raw_min_risk(p):
            return pointwise_risk(loss, p, link(p))

    def min_risk(p):
        p = np.asarray(p, dtype=float)
        edge = (p <= 0.0) | (p >= 1.0)
        # fair losses: L̲(0) = L̲(1) = inf ℓ = 0
        value = raw_min_risk(clip_probability(p))
        return np.where(edge, 0.0, value) if np.ndim(value) else (0.0 if edge else float(value))

    logger.debug(
        f"link bundle for {loss.spec}: {'closed form' if closed_form else 'numeric'}, range {link_range}"
    )
    return LinkBundle(
        loss=loss,
        min_risk=min_risk,
        link=link,
        inverse_link=inverse_link,
        neg_min_risk_grad=neg_min_risk_grad,
        link_range=link_range,
        margin_to_dual=margin_to_dual,
        dual_to_margin=dual_to_margin,
        implied_pair=implied_pair,
        closed_form=closed_form,
    )


def excess_risk(bundle: LinkBundle, p, q):
    """L(p, ψ(q)) − L̲(p)."""
    return pointwise_risk(bundle.loss, p, bundle.link(q)) - bundle.min_risk(p)


def bregman_at_margin(bundle: LinkBundle, p, f):
    """
    B_{−L̲}(p, q) with q = ψ⁻¹(f), evaluated from the margin f.

    L̲(q) is read as L(q, f) and −L̲'(q) as ``margin_to_dual(f)``; q and
    1 − q come unclipped from ``implied_pair``. Margins are clamped into
    the link range first.
    """
    loss = bundle.loss
    p = np.asarray(p, dtype=float)
    f, _ = bundle.clamp_margins(f)
    q, q_c = bundle.implied_pair(f)
    # q − p, taken from the side of ½ that p lies on
    gap = np.where(p > 0.5, (1.0 - p) - q_c, q - p)
    risk_at_q = q * loss.eval(f) + q_c * loss.eval(-f)
    return risk_at_q + gap * bundle.margin_to_dual(f) - bundle.min_risk(p)


def bregman_between_margins(bundle: LinkBundle, g, f):
    """B_{−L̲}(ψ⁻¹(g), ψ⁻¹(f)) = L(ψ⁻¹(g), f) − L(ψ⁻¹(g), g)."""
    loss = bundle.loss
    g, _ = bundle.clamp_margins(g)
    f, _ = bundle.clamp_margins(f)
    q, q_c = bundle.implied_pair(g)
    return q * (loss.eval(f) - loss.eval(g)) + q_c * (loss.eval(-f) - loss.eval(-g))


def pointwise_risk_bregman(bundle: LinkBundle, p, f):
    """
    L(p, f) rebuilt as E_Y[B_{−L̲}(Y_{0/1}, q)] + L̲(0) with q = ψ⁻¹(f).

    Y_{0/1} is 1 with probability p and 0 otherwise; L̲(0) = 0 here. Each
    divergence goes through ``bregman_at_margin``.
    """
    p = np.asarray(p, dtype=float)
    return (
        p * bregman_at_margin(bundle, 1.0, f)
        + (1.0 - p) * bregman_at_margin(bundle, 0.0, f)
        + float(bundle.min_risk(0.0))
    )


def canonical_scaling_check(
    loss: LossDescriptor,
    bundle: LinkBundle,
    grid: np.ndarray = P_GRID,
    tol: float = 1e-5,
) -> Optional[float]:
    """
    c when L̲'(p) = c·ψ(p) on the p-grid, None otherwise.

    L̲' is a central difference (h = 1e-6, one-sided at the grid edges of
    [0, 1]); points with ψ(p) ≈ 0 around p = ½ are excluded.
    """
    p = np.asarray(grid, dtype=float)
    h = MIN_RISK_FD_STEP
    lower = np.maximum(p - h, P_CLIP)
    upper = np.minimum(p + h, 1.0 - P_CLIP)
    slope = (bundle.min_risk(upper) - bundle.min_risk(lower)) / (upper - lower)
    psi = bundle.link(p)
    keep = np.abs(p - 0.5) > 0.015
    ratio = slope[keep] / psi[keep]
    c = float(np.mean(ratio))
    spread = float(np.max(ratio) - np.min(ratio))
    logger.debug(f"{loss.spec}: L'/psi spread {spread:.3e}, mean {c:.6g}")
    if spread <= tol * max(1.0, abs(c)) and c < 0.0:
        return c
    return None


def link_is_increasing(bundle: LinkBundle, grid: np.ndarray = P_GRID) -> bool:
    return bool(np.all(np.diff(bundle.link(grid)) > 0.0))
