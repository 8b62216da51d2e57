"""
Catalogue of margin losses.

A margin loss is a function of the functional margin v = y·f. Every loss
here is strictly convex with infimum zero. Besides the value and gradient
each descriptor may carry closed forms of its optimal link, minimum risk
and conjugate negative minimum risk; ``risk_link`` falls back to numeric
solves when those are absent.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import entr, expit, logit

from .errors import CatalogueError, ConfigError, InvariantViolationError, ParameterError
from .utils.logging_config import get_logger
from .utils.numerics import DEFAULT_GRID, ProbeGrid, central_difference, check_finite

logger = get_logger("loss_zoo")

ArrayFn = Callable[[np.ndarray], np.ndarray]

CATALOGUE = ("squared", "logistic", "canonical_boosting", "laplacian", "exponential", "smooth_hinge")

SMOOTH_HINGE_DEFAULT_T = 10.0
ANALYTIC_SYMMETRY_TOL = 1e-8
NUMERIC_SYMMETRY_TOL = 1e-5


@dataclass(frozen=True)
class LossDescriptor:
    """
    A named margin loss ℓ(v).

    ``eval`` and ``grad`` accept scalars or arrays. ``known_argmin`` is the
    minimiser of ℓ over the extended reals (``math.inf`` when ℓ only
    approaches zero as v → ∞).
    """

    name: str
    eval: ArrayFn
    grad: ArrayFn
    grad_is_analytic: bool = True
    params: Dict[str, float] = field(default_factory=dict)
    known_c: Optional[float] = None
    known_link: Optional[ArrayFn] = None
    known_inverse_link: Optional[ArrayFn] = None
    known_min_risk: Optional[ArrayFn] = None
    known_conjugate: Optional[ArrayFn] = None
    known_argmin: Optional[float] = None
    kink_points: Tuple[float, ...] = ()
    tabulated_range: Optional[Tuple[float, float]] = None

    def __call__(self, v):
        return self.eval(np.asarray(v, dtype=float))

    @property
    def spec(self) -> str:
        """The ``name[:k=v]`` form accepted by the CLI."""
        if not self.params:
            return self.name
        args = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.name}:{args}"

    @classmethod
    def from_even_part(
        cls,
        name: str,
        even: ArrayFn,
        even_grad: ArrayFn,
        c: float,
    ) -> "LossDescriptor":
        """
        Build the gradient-symmetric loss ℓ(v) = ℓ_e(v) + (c/2)·v.

        Any differentiable even ℓ_e yields ℓ'(v) + ℓ'(−v) = c. Convexity and
        non-negativity are not checked here; see ``check_strict_convexity``.
        """
        half_c = 0.5 * c

        def _eval(v):
            v = np.asarray(v, dtype=float)
            return even(v) + half_c * v

        def _grad(v):
            v = np.asarray(v, dtype=float)
            return even_grad(v) + half_c

        return cls(name=name, eval=_eval, grad=_grad, known_c=c)


@dataclass(frozen=True)
class EvenOddParts:
    """Split ℓ = ℓ_e + ℓ_o; ``odd_slope`` is b when ℓ_o(v) = b·v."""

    even: ArrayFn
    odd: ArrayFn
    odd_slope: Optional[float] = None

    @property
    def is_linear_odd(self) -> bool:
        return self.odd_slope is not None


# ---------------------------------------------------------------------------
# Catalogue rows
# ---------------------------------------------------------------------------

def _squared() -> LossDescriptor:
    return LossDescriptor(
        name="squared",
        eval=lambda v: (1.0 - np.asarray(v, dtype=float)) ** 2,
        grad=lambda v: 2.0 * (np.asarray(v, dtype=float) - 1.0),
        known_c=-4.0,
        known_link=lambda p: 2.0 * np.asarray(p, dtype=float) - 1.0,
        known_inverse_link=lambda f: 0.5 * (1.0 + np.asarray(f, dtype=float)),
        known_min_risk=lambda p: 4.0 * np.asarray(p, dtype=float) * (1.0 - np.asarray(p, dtype=float)),
        known_conjugate=lambda v: (1.0 + np.asarray(v, dtype=float) / 4.0) ** 2,
        known_argmin=1.0,
    )


def _logistic() -> LossDescriptor:
    return LossDescriptor(
        name="logistic",
        eval=lambda v: np.logaddexp(0.0, -np.asarray(v, dtype=float)),
        grad=lambda v: -expit(-np.asarray(v, dtype=float)),
        known_c=-1.0,
        known_link=lambda p: logit(np.asarray(p, dtype=float)),
        known_inverse_link=lambda f: expit(np.asarray(f, dtype=float)),
        known_min_risk=lambda p: entr(np.asarray(p, dtype=float)) + entr(1.0 - np.asarray(p, dtype=float)),
        known_conjugate=lambda v: np.logaddexp(0.0, np.asarray(v, dtype=float)),
        known_argmin=math.inf,
    )


def _canonical_boosting_eval(v):
    v = np.asarray(v, dtype=float)
    s = np.sqrt(v * v + 4.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # ½(s − v) = 2/(s + v) avoids cancellation for large positive v
        return np.where(v >= 0.0, 2.0 / (s + np.abs(v)), 0.5 * (s - v))


def _canonical_boosting_grad(v):
    v = np.asarray(v, dtype=float)
    s = np.sqrt(v * v + 4.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v >= 0.0, -2.0 / (s * (s + np.abs(v))), v / (2.0 * s) - 0.5)


def _canonical_boosting() -> LossDescriptor:
    def _link(p):
        p = np.asarray(p, dtype=float)
        return (2.0 * p - 1.0) / np.sqrt(p * (1.0 - p))

    def _inverse_link(f):
        f = np.asarray(f, dtype=float)
        return 0.5 + f / (2.0 * np.sqrt(f * f + 4.0))

    return LossDescriptor(
        name="canonical_boosting",
        eval=_canonical_boosting_eval,
        grad=_canonical_boosting_grad,
        known_c=-1.0,
        known_link=_link,
        known_inverse_link=_inverse_link,
        known_min_risk=lambda p: 2.0 * np.sqrt(np.asarray(p, dtype=float) * (1.0 - np.asarray(p, dtype=float))),
        known_conjugate=lambda v: _canonical_boosting_eval(-np.asarray(v, dtype=float)),
        known_argmin=math.inf,
    )


def _laplacian_eval(v):
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    return 0.5 * (np.exp(-a) + a - v)


def _laplacian_grad(v):
    v = np.asarray(v, dtype=float)
    half_tail = 0.5 * np.exp(-np.abs(v))
    return np.where(v >= 0.0, -half_tail, half_tail - 1.0)


def _laplacian() -> LossDescriptor:
    # link and minimum risk are solved numerically by risk_link
    return LossDescriptor(
        name="laplacian",
        eval=_laplacian_eval,
        grad=_laplacian_grad,
        known_c=-1.0,
        known_conjugate=lambda v: _laplacian_eval(-np.asarray(v, dtype=float)),
        known_argmin=math.inf,
        kink_points=(0.0,),
    )


def _exponential() -> LossDescriptor:
    return LossDescriptor(
        name="exponential",
        eval=lambda v: np.exp(-np.asarray(v, dtype=float)),
        grad=lambda v: -np.exp(-np.asarray(v, dtype=float)),
        known_link=lambda p: 0.5 * logit(np.asarray(p, dtype=float)),
        known_inverse_link=lambda f: expit(2.0 * np.asarray(f, dtype=float)),
        known_min_risk=lambda p: 2.0 * np.sqrt(np.asarray(p, dtype=float) * (1.0 - np.asarray(p, dtype=float))),
        known_argmin=math.inf,
    )


def _smooth_hinge(t: float) -> LossDescriptor:
    return LossDescriptor(
        name="smooth_hinge",
        eval=lambda v: np.logaddexp(0.0, -t * (np.asarray(v, dtype=float) - 1.0)) / t,
        grad=lambda v: -expit(-t * (np.asarray(v, dtype=float) - 1.0)),
        params={"t": t},
        known_argmin=math.inf,
    )


def builtin_loss(name: str, params: Optional[Mapping[str, float]] = None) -> LossDescriptor:
    """
    Look up a catalogue loss.

    Args:
        name: one of ``CATALOGUE``
        params: named parameters; only ``smooth_hinge`` takes one (``t``)

    Raises:
        CatalogueError: unknown name
        ParameterError: unknown parameter, or t ≤ 0
    """
    params = dict(params or {})
    if name not in CATALOGUE:
        raise CatalogueError(f"unknown loss '{name}'; choose from {', '.join(CATALOGUE)}")

    if name == "smooth_hinge":
        t = float(params.pop("t", SMOOTH_HINGE_DEFAULT_T))
        if params:
            raise ParameterError(f"smooth_hinge takes only 't', got {sorted(params)}")
        if not t > 0.0 or not math.isfinite(t):
            raise ParameterError(f"smooth_hinge requires t > 0, got t={t}")
        return _smooth_hinge(t)

    if params:
        raise ParameterError(f"loss '{name}' takes no parameters, got {sorted(params)}")
    return {
        "squared": _squared,
        "logistic": _logistic,
        "canonical_boosting": _canonical_boosting,
        "laplacian": _laplacian,
        "exponential": _exponential,
    }[name]()


def tabulated_loss(name: str, v: np.ndarray, values: np.ndarray) -> LossDescriptor:
    """
    A user loss given as (v, ℓ(v)) pairs.

    Values are interpolated with a monotone piecewise cubic; the gradient is
    a central finite difference of the interpolant, so the descriptor is
    flagged non-analytic.
    """
    v = np.asarray(v, dtype=float)
    values = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.shape != values.shape or v.size < 4:
        raise ConfigError("tabulated loss needs at least 4 matching (v, loss) pairs")
    order = np.argsort(v)
    v, values = v[order], values[order]
    if np.any(np.diff(v) <= 0):
        raise ConfigError("tabulated loss has repeated v values")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ConfigError("tabulated loss values must be finite and non-negative")

    interpolant = PchipInterpolator(v, values, extrapolate=True)

    def _eval(x):
        return interpolant(np.asarray(x, dtype=float))

    def _grad(x):
        x = np.asarray(x, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(x))
        return central_difference(_eval, x, h)

    argmin = float(v[np.argmin(values)])
    if argmin >= v[-1]:
        # minimiser sits on the right edge: treat as the limit regime
        argmin = math.inf
    logger.debug(f"tabulated loss '{name}' over [{v[0]:g}, {v[-1]:g}], argmin {argmin}")
    return LossDescriptor(
        name=name,
        eval=_eval,
        grad=_grad,
        grad_is_analytic=False,
        known_argmin=argmin,
        tabulated_range=(float(v[0]), float(v[-1])),
    )


def load_tabulated_loss(path: str | Path) -> LossDescriptor:
    """Read a ``v,loss`` CSV into a tabulated loss."""
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as exc:
        raise ConfigError(f"cannot read loss table {path}: {exc}") from exc
    try:
        v = np.array([float(row["v"]) for row in rows])
        values = np.array([float(row["loss"]) for row in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"loss table {path} needs numeric columns 'v' and 'loss'") from exc
    return tabulated_loss(path.stem, v, values)


def parse_loss_spec(spec: str) -> tuple[str, Dict[str, str]]:
    """Split ``name[:k=v,k=v]`` into a name and raw parameter strings."""
    name, _, rest = spec.strip().partition(":")
    params: Dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key.strip():
                raise ParameterError(f"malformed loss parameter '{item}' in '{spec}'")
            params[key.strip()] = value.strip()
    return name.strip(), params


def load_loss(spec: str) -> LossDescriptor:
    """Resolve a CLI loss spec, e.g. ``logistic``, ``smooth_hinge:t=10`` or ``tabulated:file=x.csv``."""
    name, raw = parse_loss_spec(spec)
    if name == "tabulated":
        if set(raw) != {"file"}:
            raise ParameterError("tabulated loss needs exactly one parameter: file=<csv>")
        return load_tabulated_loss(raw["file"])
    try:
        params = {k: float(v) for k, v in raw.items()}
    except ValueError as exc:
        raise ParameterError(f"non-numeric parameter in '{spec}'") from exc
    return builtin_loss(name, params)


def canonical_form(loss: LossDescriptor, c: Optional[float] = None) -> LossDescriptor:
    """
    Rescale a gradient-symmetric loss with c < 0 to canonical form (1/|c|)·ℓ.

    The link is unchanged by the rescaling; the minimum risk scales with
    the loss and the conjugate becomes v ↦ ℓ(−v)/|c|.
    """
    c = loss.known_c if c is None else c
    if c is None:
        c = classify_gradient_symmetry(loss)
    if c is None or not c < 0:
        raise ParameterError(f"loss '{loss.name}' is not gradient-symmetric with c < 0")
    scale = 1.0 / abs(c)
    base_eval, base_grad, base_min_risk = loss.eval, loss.grad, loss.known_min_risk

    def _eval(v):
        return scale * base_eval(v)

    return replace(
        loss,
        name=f"canonical_{loss.name}" if not loss.name.startswith("canonical") else loss.name,
        eval=_eval,
        grad=lambda v: scale * base_grad(v),
        known_c=-1.0,
        known_min_risk=(lambda p: scale * base_min_risk(p)) if base_min_risk is not None else None,
        known_conjugate=lambda v: _eval(-np.asarray(v, dtype=float)),
    )


# ---------------------------------------------------------------------------
# Classification and checks
# ---------------------------------------------------------------------------

def default_symmetry_tol(loss: LossDescriptor) -> float:
    return ANALYTIC_SYMMETRY_TOL if loss.grad_is_analytic else NUMERIC_SYMMETRY_TOL


def _require_symmetric_grid(grid: ProbeGrid, minimum: int = 1) -> np.ndarray:
    if not grid.is_symmetric:
        raise ParameterError(f"probe grid [{grid.lo}, {grid.hi}] is not symmetric about 0")
    if grid.count < minimum:
        raise ParameterError(f"probe grid needs at least {minimum} points, got {grid.count}")
    return grid.points()


def gradient_sums(loss: LossDescriptor, grid: ProbeGrid = DEFAULT_GRID) -> np.ndarray:
    """s(v) = ℓ'(v) + ℓ'(−v) over the grid."""
    v = grid.points()
    s = loss.grad(v) + loss.grad(-v)
    check_finite(s, v, f"{loss.name} gradient sum")
    return s


def classify_gradient_symmetry(
    loss: LossDescriptor,
    grid: ProbeGrid = DEFAULT_GRID,
    tol: Optional[float] = None,
) -> Optional[float]:
    """
    Return the gradient-symmetry constant c, or None when ℓ'(v) + ℓ'(−v) varies.

    Raises:
        NumericError: a gradient is not finite (names the offending v)
        InvariantViolationError: the measured c contradicts ``loss.known_c``
    """
    tol = default_symmetry_tol(loss) if tol is None else tol
    if not tol > 0:
        raise ParameterError("tolerance must be positive")
    _require_symmetric_grid(grid, minimum=101)
    s = gradient_sums(loss, grid)
    spread = float(np.max(s) - np.min(s))
    c = float(np.mean(s)) if spread <= tol else None
    logger.debug(f"{loss.spec}: gradient-sum spread {spread:.3e} -> c={c}")

    if loss.known_c is not None and (c is None or abs(c - loss.known_c) > tol):
        raise InvariantViolationError(
            f"{loss.spec}: measured gradient-symmetry constant {c} disagrees with c={loss.known_c}"
        )
    return c


def even_odd_split(
    loss: LossDescriptor,
    grid: ProbeGrid = DEFAULT_GRID,
    tol: Optional[float] = None,
) -> EvenOddParts:
    """
    Even/odd parts ℓ_e(v) = ½(ℓ(v) + ℓ(−v)) and ℓ_o(v) = ½(ℓ(v) − ℓ(−v)).

    ``odd_slope`` is b = ℓ_o(1) when |ℓ_o(v) − b·v| ≤ tol over the grid.
    """
    tol = default_symmetry_tol(loss) if tol is None else tol
    v = _require_symmetric_grid(grid)
    base = loss.eval

    def even(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (base(x) + base(-x))

    def odd(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (base(x) - base(-x))

    b = float(odd(1.0))
    deviation = float(np.max(np.abs(odd(v) - b * v)))
    odd_slope = b if deviation <= tol else None

    if odd_slope is not None and loss.known_c is not None and abs(odd_slope - 0.5 * loss.known_c) > tol:
        raise InvariantViolationError(
            f"{loss.spec}: odd slope {odd_slope} is not c/2 = {0.5 * loss.known_c}"
        )
    return EvenOddParts(even=even, odd=odd, odd_slope=odd_slope)


def gradient_check_error(
    loss: LossDescriptor,
    grid: ProbeGrid = DEFAULT_GRID,
    kink_exclusion: float = 1e-3,
) -> float:
    """
    Max |ℓ'(v) − central difference| / max(1, |ℓ'(v)|) over the grid.

    The step is h = 1e-5·max(1, |v|); points within ``kink_exclusion`` of a
    kink are skipped.
    """
    v = grid.points()
    for kink in loss.kink_points:
        v = v[np.abs(v - kink) >= kink_exclusion]
    h = 1e-5 * np.maximum(1.0, np.abs(v))
    fd = central_difference(loss.eval, v, h)
    analytic = loss.grad(v)
    check_finite(analytic, v, f"{loss.name} gradient")
    return float(np.max(np.abs(analytic - fd) / np.maximum(1.0, np.abs(analytic))))


STRICT_PAIR_CENTRES = np.linspace(-1.0, 3.0, 41)
STRICT_PAIR_HALF_WIDTH = 1.0
STRICT_GAP_RTOL = 1e-12


def check_strict_convexity(
    loss: LossDescriptor,
    grid: ProbeGrid = DEFAULT_GRID,
    tol: float = 1e-10,
) -> bool:
    """
    Midpoint chord test.

    Neighbouring and mirrored grid pairs must satisfy ℓ(mid) ≤ chord + tol.
    Width-2 pairs centred on [−1, 3] must also satisfy
    ℓ(mid) < chord − 1e-12·max(1, chord), which rejects a linear or flat
    piece around the decision boundary. Saturating tails further out are
    not held to the strict margin.
    """
    v = grid.points()
    half = len(v) // 2
    pairs = [(v[:-1], v[1:]), (v, v[::-1]), (v[:half], v[half:half + half])]
    for a, b in pairs:
        mid = loss.eval(0.5 * (a + b))
        chord = 0.5 * (loss.eval(a) + loss.eval(b))
        if np.any(mid > chord + tol):
            return False

    a = STRICT_PAIR_CENTRES - STRICT_PAIR_HALF_WIDTH
    b = STRICT_PAIR_CENTRES + STRICT_PAIR_HALF_WIDTH
    chord = 0.5 * (loss.eval(a) + loss.eval(b))
    gap = chord - loss.eval(STRICT_PAIR_CENTRES)
    return bool(np.all(gap > STRICT_GAP_RTOL * np.maximum(1.0, np.abs(chord))))


def check_non_negative(loss: LossDescriptor, grid: ProbeGrid = DEFAULT_GRID, tol: float = 1e-12) -> bool:
    return bool(np.all(loss.eval(grid.points()) >= -tol))


def gradient_symmetry_identity_error(loss: LossDescriptor, c: float, grid: ProbeGrid = DEFAULT_GRID) -> float:
    """max |ℓ(v) − ℓ(−v) − c·v| over the grid."""
    v = grid.points()
    return float(np.max(np.abs(loss.eval(v) - loss.eval(-v) - c * v)))
