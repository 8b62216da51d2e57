"""Small numeric kernels shared by the analysis modules."""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConvergenceError, LinkDomainError, NumericError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


@dataclass(frozen=True)
class ProbeGrid:
    """Equispaced probe points on [lo, hi]."""

    lo: float = -10.0
    hi: float = 10.0
    count: int = 1001

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def is_symmetric(self) -> bool:
        return math.isclose(self.lo, -self.hi)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / max(self.count - 1, 1)


DEFAULT_GRID = ProbeGrid()


def golden_section_max(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> tuple[float, float]:
    """
    Maximise a unimodal function on [lo, hi] by golden-section search.

    Returns:
        (argmax, max) where the interval shrank below ``tol``; the
        endpoints are compared too, so boundary maxima are found.

    Raises:
        ConvergenceError: interval still wider than ``tol`` after ``max_iter``
    """
    a, b = lo, hi
    f_lo, f_hi = fn(lo), fn(hi)
    dist = b - a
    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc, yd = fn(c), fn(d)

    iteration = 0
    while b - a > tol:
        if iteration >= max_iter:
            raise ConvergenceError(
                f"golden-section search did not reach tol={tol:g} in {max_iter} iterations "
                f"(interval [{a:.6g}, {b:.6g}])",
                location=(a, b),
            )
        if yc > yd:
            b, d, yd = d, c, yc
            c = a + INV_PHI_SQ * (b - a)
            yc = fn(c)
        else:
            a, c, yc = c, d, yd
            d = a + INV_PHI * (b - a)
            yd = fn(d)
        iteration += 1

    x = 0.5 * (a + b)
    best_x, best_y = x, fn(x)
    if f_lo > best_y:
        best_x, best_y = lo, f_lo
    if f_hi > best_y:
        best_x, best_y = hi, f_hi
    return best_x, best_y


def bisect_increasing(
    fn: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: float,
    hi: float,
    max_iter: int = 200,
    what: str = "root",
) -> np.ndarray:
    """
    Solve fn(x) = target elementwise for a strictly increasing fn.

    Every element is bisected on the same bracket [lo, hi] until the
    bracket collapses to adjacent floats.

    Raises:
        LinkDomainError: some target lies outside [fn(lo), fn(hi)]
    """
    target = np.asarray(target, dtype=float)
    f_lo = fn(np.full(target.shape, lo))
    f_hi = fn(np.full(target.shape, hi))
    outside = (target < f_lo) | (target > f_hi) | ~np.isfinite(target)
    if np.any(outside):
        bad = target[outside].ravel()[0]
        raise LinkDomainError(
            f"no bracket for {what} within [{lo:g}, {hi:g}] (target {bad:.6g})"
        )

    a = np.full(target.shape, lo, dtype=float)
    b = np.full(target.shape, hi, dtype=float)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        above = fn(mid) > target
        b = np.where(above, mid, b)
        a = np.where(above, a, mid)
        if np.all((b - a) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(a))):
            break
    return 0.5 * (a + b)


def central_difference(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: np.ndarray | float,
) -> np.ndarray:
    """Central finite difference (fn(x+h) - fn(x-h)) / 2h."""
    x = np.asarray(x, dtype=float)
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def check_finite(values: np.ndarray, where: np.ndarray, what: str) -> None:
    """Raise NumericError naming the first input whose value is not finite."""
    values = np.asarray(values)
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        at = np.asarray(where)[index] if np.ndim(where) else where
        raise NumericError(f"{what} is not finite at {at!r}", location=index)
