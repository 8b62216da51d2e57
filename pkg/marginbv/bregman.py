"""
Bregman divergences on the real line.

B_φ(u, v) = φ(u) − φ(v) − φ'(v)(u − v), for a strictly convex generator φ.
Two generators matter here: a margin loss ℓ itself (domain ℝ) and the
negative minimum risk −L̲ (domain [0, 1]), built by ``risk_link``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import InvariantViolationError, ParameterError, TruncationError
from .loss_zoo import LossDescriptor
from .utils.logging_config import get_logger
from .utils.numerics import ProbeGrid, bisect_increasing, check_finite, golden_section_max

logger = get_logger("bregman")

ArrayFn = Callable[[np.ndarray], np.ndarray]

CLAMP_BAND = 1e-12
CONJUGATE_EPS = 1e-12
FLIP_GRID = ProbeGrid(-5.0, 5.0, 41)
LIMIT_TOL = 1e-9
TRUNCATION_SCHEDULE = (10.0, 20.0, 30.0, 40.0, 50.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)


@dataclass(frozen=True)
class BregmanGenerator:
    """A strictly convex φ with derivative φ' on ``domain`` (closed bounds)."""

    phi: ArrayFn
    phi_grad: ArrayFn
    domain: Tuple[float, float] = (-math.inf, math.inf)
    name: str = "phi"

    @classmethod
    def from_loss(cls, loss: LossDescriptor) -> "BregmanGenerator":
        return cls(phi=loss.eval, phi_grad=loss.grad, name=loss.name)

    def contains(self, x: np.ndarray, interior: bool = False) -> np.ndarray:
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        if interior:
            return (x > lo) & (x < hi)
        return (x >= lo) & (x <= hi)


@dataclass(frozen=True)
class LimitAnchor:
    """Anchors g⁺ = argmin ℓ and g⁻ = −g⁺ over the extended reals."""

    g_plus: float
    g_minus: float
    truncation_G: float = TRUNCATION_SCHEDULE[-1]

    def __post_init__(self):
        if self.g_minus != -self.g_plus:
            raise InvariantViolationError(f"anchors must satisfy g- = -g+, got {self.g_minus}, {self.g_plus}")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.g_plus)

    def for_label(self, y: int) -> float:
        return self.g_plus if y > 0 else self.g_minus


@dataclass(frozen=True)
class LimitBregmanResult:
    value: float
    truncation_g: Optional[float]
    converged: bool
    last_delta: float = 0.0


def divergence(gen: BregmanGenerator, u, v):
    """
    B_φ(u, v), elementwise over broadcast u and v.

    Results within the floating-point band below zero are clamped to 0; the
    band is 1e-12 scaled by the magnitude of the terms being cancelled.

    Raises:
        ParameterError: u outside the domain or v not interior
        NumericError: φ or φ' not finite at the inputs
        InvariantViolationError: result more negative than the clamp band
    """
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if not np.all(gen.contains(u)) or not np.all(gen.contains(v, interior=True)):
        raise ParameterError(f"arguments outside the domain {gen.domain} of {gen.name}")

    phi_u = gen.phi(u)
    phi_v = gen.phi(v)
    grad_v = gen.phi_grad(v)
    check_finite(phi_u, u, f"{gen.name}(u)")
    check_finite(phi_v, v, f"{gen.name}(v)")
    check_finite(grad_v, v, f"{gen.name}'(v)")

    linear = grad_v * (u - v)
    d = phi_u - phi_v - linear
    band = CLAMP_BAND * np.maximum.reduce([np.ones_like(d), np.abs(phi_u), np.abs(phi_v), np.abs(linear)])
    if np.any(d < -band):
        index = tuple(int(i) for i in np.argwhere(d < -band)[0])
        raise InvariantViolationError(
            f"negative Bregman divergence {d[index]:.3e} for {gen.name} at u={u[index]!r}, v={v[index]!r}",
            location=index,
        )
    d = np.where(d < 0.0, 0.0, d)
    return float(d) if scalar else d


def label_flip_asymmetry(loss: LossDescriptor, grid: ProbeGrid = FLIP_GRID) -> float:
    """max over grid pairs of |B_ℓ(u, v) − B_ℓ(−u, −v)|."""
    gen = BregmanGenerator.from_loss(loss)
    u, v = np.meshgrid(grid.points(), grid.points(), indexing="ij")
    return float(np.max(np.abs(divergence(gen, u, v) - divergence(gen, -u, -v))))


def label_flip_symmetric(loss: LossDescriptor, grid: ProbeGrid = FLIP_GRID, tol: float = 1e-8) -> bool:
    """True iff B_ℓ(u, v) = B_ℓ(−u, −v) on the (u, v) grid within tol."""
    asym = label_flip_asymmetry(loss, grid)
    logger.debug(f"{loss.spec}: label-flip asymmetry {asym:.3e}")
    return asym <= tol


def conjugate(
    phi: BregmanGenerator,
    v: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    eps: float = CONJUGATE_EPS,
) -> float:
    """
    Numeric convex conjugate φ*(v) = sup_p {p·v − φ(p)} over p ∈ [eps, 1 − eps].

    The objective is strictly concave, so golden-section search on p is
    exact up to ``tol``.

    Raises:
        ConvergenceError: iteration cap hit before the bracket reached tol
    """
    lo, hi = eps, 1.0 - eps
    check_finite(np.array([phi.phi(lo), phi.phi(hi)]), np.array([lo, hi]), f"{phi.name}(p)")
    v = float(v)

    def objective(p: float) -> float:
        return p * v - float(phi.phi(p))

    _, value = golden_section_max(objective, lo, hi, tol=tol, max_iter=max_iter)
    return value


def find_limit_anchor(loss: LossDescriptor, truncation_G: float = TRUNCATION_SCHEDULE[-1]) -> LimitAnchor:
    """g⁺ = argmin ℓ over the extended reals; +∞ when ℓ' stays negative."""
    if loss.known_argmin is not None:
        g = float(loss.known_argmin)
    elif float(loss.grad(50.0)) < 0.0:
        g = math.inf
    else:
        g = float(bisect_increasing(loss.grad, np.zeros(1), -50.0, 50.0, what=f"argmin of {loss.name}")[0])
    return LimitAnchor(g_plus=g, g_minus=-g, truncation_G=truncation_G)


def limit_bregman_loss(
    loss: LossDescriptor,
    y: int,
    f: float,
    anchor: Optional[LimitAnchor] = None,
    strict: bool = True,
) -> LimitBregmanResult:
    """
    ℓ(y·f) evaluated as the (limit of the) divergence B_ℓ(f, g_y).

    Finite anchors are evaluated directly. Infinite anchors walk the
    truncation schedule until successive values differ by < 1e-9.

    Raises:
        TruncationError: schedule exhausted (only when ``strict``)
    """
    if y not in (-1, 1):
        raise ParameterError(f"label must be ±1, got {y}")
    anchor = anchor or find_limit_anchor(loss)
    gen = BregmanGenerator.from_loss(loss)
    g_y = anchor.for_label(y)

    if math.isfinite(g_y):
        return LimitBregmanResult(value=divergence(gen, f, g_y), truncation_g=None, converged=True)

    sign = 1.0 if g_y > 0 else -1.0
    previous = None
    delta = math.inf
    value = math.nan
    level = TRUNCATION_SCHEDULE[0]
    for level in (g for g in TRUNCATION_SCHEDULE if g <= anchor.truncation_G):
        value = divergence(gen, f, sign * level)
        if previous is not None:
            delta = abs(value - previous)
            if delta < LIMIT_TOL:
                return LimitBregmanResult(value=value, truncation_g=level, converged=True, last_delta=delta)
        previous = value

    message = (
        f"{loss.spec}: B(f={f:g}, g->{'+' if sign > 0 else '-'}inf) did not settle by G={level:g} "
        f"(last change {delta:.3e})"
    )
    if strict:
        raise TruncationError(message, last_value=value, truncation_g=level, last_delta=delta)
    logger.warning(message)
    return LimitBregmanResult(value=value, truncation_g=level, converged=False, last_delta=delta)


def dual_form(
    dual: BregmanGenerator,
    dual_grad_inverse: ArrayFn,
    c: float,
    u,
    v,
):
    """B_dual([dual']⁻¹(c·v), [dual']⁻¹(c·u)); equals B_ℓ(u, v) when dual = −L̲."""
    a = dual_grad_inverse(c * np.asarray(v, dtype=float))
    b = dual_grad_inverse(c * np.asarray(u, dtype=float))
    return divergence(dual, a, b)
