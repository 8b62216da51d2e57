"""
Property suites behind ``marginbv verify``.

Each suite is a list of named checks run against one loss. A check
measures a residual (or a witness gap) and compares it with its
tolerance; exceptions inside a check are recorded as a failed check
rather than aborting the suite.
"""

import math
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np
from scipy.special import entr

from .bregman import (
    BregmanGenerator,
    conjugate,
    divergence,
    dual_form,
    label_flip_asymmetry,
    limit_bregman_loss,
)
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
    label_free_ambiguity_gap,
    margin_ambiguity,
)
from .errors import MarginBVError
from .loss_zoo import (
    CATALOGUE,
    LossDescriptor,
    canonical_form,
    check_non_negative,
    check_strict_convexity,
    classify_gradient_symmetry,
    default_symmetry_tol,
    even_odd_split,
    gradient_check_error,
    gradient_sums,
)
from .risk_link import (
    P_GRID,
    LinkBundle,
    build_link_bundle,
    canonical_scaling_check,
    excess_risk,
    link_is_increasing,
    pointwise_risk,
    pointwise_risk_bregman,
)
from .schemas.reports import CheckResult
from .utils.logging_config import get_logger

logger = get_logger("verification")

SUITES = ("symmetry", "bregman", "conjugate", "decomp", "ensemble")

EXPECTED_SYMMETRY_CONSTANT: Dict[str, Optional[float]] = {
    "squared": -4.0,
    "logistic": -1.0,
    "canonical_boosting": -1.0,
    "laplacian": -1.0,
    "exponential": None,
    "smooth_hinge": None,
}

RANDOM_INSTANCES = 100
WITNESS_GAP = 1e-3
ROUNDTRIP_TOL = 1e-8
LIMIT_BREGMAN_TOL = 1e-6
CONJUGATE_TOL = 1e-6


def reference_neg_min_risk(name: str) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    """Closed-form −L̲(p) for the canonical catalogue rows."""

    def laplacian(p):
        s = 1.0 - np.abs(2.0 * p - 1.0)
        return -0.5 * s * (1.0 - np.log(s))

    return {
        "squared": lambda p: -4.0 * p * (1.0 - p),
        "logistic": lambda p: -(entr(p) + entr(1.0 - p)),
        "canonical_boosting": lambda p: -2.0 * np.sqrt(p * (1.0 - p)),
        "laplacian": laplacian,
    }.get(name)


def expand_suites(names: Iterable[str]) -> List[str]:
    selected: List[str] = []
    for name in names:
        for suite in (SUITES if name == "all" else (name,)):
            if suite not in SUITES:
                raise ValueError(f"unknown suite '{suite}'")
            if suite not in selected:
                selected.append(suite)
    return selected


class SuiteRunner:
    """Runs the property checks of the selected suites for one loss."""

    CHECKS: Dict[str, tuple] = {
        "symmetry": (
            "check_classification",
            "check_label_flip",
            "check_odd_part",
            "check_gradient",
            "check_convexity",
            "check_canonical_scaling",
            "check_canonical_form",
        ),
        "bregman": (
            "check_non_negativity",
            "check_minimiser",
            "check_link_roundtrip",
            "check_min_risk_table",
            "check_excess_risk_identity",
            "check_pointwise_bregman_form",
            "check_limit_bregman",
            "check_dual_connection",
        ),
        "conjugate": ("check_conjugate",),
        "decomp": (
            "check_margin_variance_exact",
            "check_gradient_symmetric_exact",
            "check_lol_exact",
            "check_buja_equivalence",
            "check_micro_instance",
            "check_symmetry_witnesses",
        ),
        "ensemble": (
            "check_margin_ambiguity",
            "check_label_free_ambiguity",
            "check_additive_ambiguity",
            "check_centroid_linearity",
            "check_centroid_ambiguity",
        ),
    }

    def __init__(self, loss: LossDescriptor, tol: float = 1e-9, seed: int = 0):
        self.loss = loss
        self.tol = tol
        self.seed = seed
        self.is_catalogue = loss.tabulated_range is None and loss.name in CATALOGUE

    @cached_property
    def c(self) -> Optional[float]:
        return classify_gradient_symmetry(self.loss)

    @cached_property
    def bundle(self) -> LinkBundle:
        return build_link_bundle(self.loss)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def margin_bounds(self, inside_link: bool) -> tuple:
        """Margins drawn in [−4, 4], or inside the link range when it is bounded."""
        if inside_link and self.bundle.has_bounded_range:
            hi = 0.95 * min(4.0, self.bundle.link_range[1])
            return -hi, hi
        return -4.0, 4.0

    def run(self, suites: Iterable[str]) -> List[CheckResult]:
        results: List[CheckResult] = []
        for suite in expand_suites(suites):
            for method in self.CHECKS[suite]:
                try:
                    results.extend(getattr(self, method)(suite))
                except MarginBVError as exc:
                    logger.warning(f"{suite}/{method}: {exc}")
                    results.append(CheckResult(
                        suite=suite, name=method.removeprefix("check_"), anchor="",
                        passed=False, detail=f"{type(exc).__name__}: {exc}",
                    ))
        return results

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    @staticmethod
    def _bound(suite, name, anchor, measured, tolerance, detail="") -> CheckResult:
        measured = float(measured)
        return CheckResult(
            suite=suite, name=name, anchor=anchor, measured=measured,
            tolerance=tolerance, passed=bool(measured <= tolerance), detail=detail,
        )

    @staticmethod
    def _witness(suite, name, anchor, gap, detail="") -> CheckResult:
        gap = float(gap)
        return CheckResult(
            suite=suite, name=name, anchor=anchor, measured=gap,
            tolerance=WITNESS_GAP, passed=bool(gap > WITNESS_GAP), detail=detail,
        )

    @staticmethod
    def _skip(suite, name, anchor, reason) -> CheckResult:
        return CheckResult(suite=suite, name=name, anchor=anchor, passed=True, skipped=True, detail=reason)

    def _random_instances(self, salt: int, inside_link: bool = False):
        rng = self.rng(salt)
        lo, hi = self.margin_bounds(inside_link)
        for _ in range(RANDOM_INSTANCES):
            m = int(rng.integers(1, 9))
            n = int(rng.integers(1, 17))
            margins = rng.uniform(lo, hi, size=(m, n))
            labels = np.where(rng.random(n) < 0.5, -1, 1)
            posteriors = rng.uniform(0.05, 0.95, size=n)
            yield MarginSampleMatrix(margins), labels, posteriors

    # ------------------------------------------------------------------
    # symmetry
    # ------------------------------------------------------------------

    def check_classification(self, suite):
        spread = float(np.ptp(gradient_sums(self.loss)))
        anchor = "gradient symmetry: l'(v) + l'(-v) constant on [-10, 10]"
        verdict = f"c={self.c:g}" if self.c is not None else "not gradient-symmetric"
        if not self.is_catalogue:
            return [CheckResult(suite=suite, name="classification", anchor=anchor, measured=spread,
                                passed=True, detail=f"{verdict} (best-effort for user losses)")]
        expected = EXPECTED_SYMMETRY_CONSTANT[self.loss.name]
        if expected is None:
            passed = self.c is None
        else:
            passed = self.c is not None and abs(self.c - expected) <= default_symmetry_tol(self.loss)
        return [CheckResult(suite=suite, name="classification", anchor=anchor, measured=spread,
                            tolerance=default_symmetry_tol(self.loss), passed=passed, detail=verdict)]

    def check_label_flip(self, suite):
        asym = label_flip_asymmetry(self.loss)
        tol = 1e-8 if self.loss.grad_is_analytic else 1e-4
        symmetric = asym <= tol
        return [CheckResult(
            suite=suite, name="label_flip", anchor="B_l(u, v) = B_l(-u, -v) iff gradient-symmetric",
            measured=asym, tolerance=tol, passed=symmetric == (self.c is not None),
            detail="symmetric" if symmetric else "asymmetric",
        )]

    def check_odd_part(self, suite):
        parts = even_odd_split(self.loss)
        anchor = "odd part b*v with b = c/2"
        if self.c is None:
            detail = f"linear odd, b={parts.odd_slope:g}" if parts.is_linear_odd else "odd part not linear"
            return [self._skip(suite, "odd_part", anchor, detail)]
        if not parts.is_linear_odd:
            return [CheckResult(suite=suite, name="odd_part", anchor=anchor, passed=False,
                                detail="gradient-symmetric loss without a linear odd part")]
        return [self._bound(suite, "odd_part", anchor, abs(parts.odd_slope - 0.5 * self.c),
                            default_symmetry_tol(self.loss), f"b={parts.odd_slope:g}")]

    def check_gradient(self, suite):
        anchor = "analytic gradient agrees with central differences (relative to max(1, |grad|))"
        if not self.loss.grad_is_analytic:
            return [self._skip(suite, "gradient", anchor, "gradient is itself a finite difference")]
        return [self._bound(suite, "gradient", anchor, gradient_check_error(self.loss), 1e-6)]

    def check_convexity(self, suite):
        convex = check_strict_convexity(self.loss)
        non_negative = check_non_negative(self.loss)
        return [CheckResult(
            suite=suite, name="convexity", anchor="strictly convex with infimum zero",
            passed=convex and non_negative,
            detail=f"convex={convex}, non_negative={non_negative}",
        )]

    def check_canonical_scaling(self, suite):
        scaled = canonical_scaling_check(self.loss, self.bundle)
        anchor = "L'(p) = c * psi(p) exactly for gradient-symmetric losses"
        if scaled is None or self.c is None:
            agree = (scaled is None) == (self.c is None)
            return [CheckResult(suite=suite, name="canonical_scaling", anchor=anchor, passed=agree,
                                detail=f"ratio {'constant' if scaled is not None else 'varies'}")]
        return [self._bound(suite, "canonical_scaling", anchor, abs(scaled - self.c), 1e-4 * abs(self.c),
                            f"ratio={scaled:.6g}")]

    def check_canonical_form(self, suite):
        anchor = "(1/|c|) l is canonical (c = -1)"
        if self.c is None:
            return [self._skip(suite, "canonical_form", anchor, "not gradient-symmetric")]
        rescaled = canonical_form(self.loss, self.c)
        c = classify_gradient_symmetry(rescaled)
        return [self._bound(suite, "canonical_form", anchor, abs(c + 1.0), default_symmetry_tol(self.loss))]

    # ------------------------------------------------------------------
    # bregman
    # ------------------------------------------------------------------

    def check_non_negativity(self, suite):
        rng = self.rng(1)
        u, v = rng.uniform(-4.0, 4.0, size=(2, 200))
        d = divergence(BregmanGenerator.from_loss(self.loss), u, v)
        return [self._bound(suite, "non_negativity", "B_l(u, v) >= 0", max(0.0, -float(np.min(d))), 0.0)]

    def check_minimiser(self, suite):
        rng = self.rng(2)
        p = rng.uniform(0.01, 0.99, size=50)
        v = rng.uniform(-6.0, 6.0, size=50)
        at_link = pointwise_risk(self.loss, p, self.bundle.link(p))
        gap = float(np.max(at_link - pointwise_risk(self.loss, p, v)))
        return [self._bound(suite, "minimiser", "L(p, psi(p)) <= L(p, v)", max(gap, 0.0), 1e-10)]

    def check_link_roundtrip(self, suite):
        b = self.bundle
        p = P_GRID
        return [
            self._bound(suite, "link_roundtrip", "psi^-1(psi(p)) = p",
                        np.max(np.abs(b.inverse_link(b.link(p)) - p)), ROUNDTRIP_TOL),
            self._bound(suite, "link_symmetry", "psi(p) = -psi(1 - p) and L(p) = L(1 - p)",
                        max(np.max(np.abs(b.link(p) + b.link(1.0 - p))),
                            np.max(np.abs(b.min_risk(p) - b.min_risk(1.0 - p)))), ROUNDTRIP_TOL),
            CheckResult(suite=suite, name="link_monotone", anchor="psi strictly increasing",
                        passed=link_is_increasing(b)),
        ]

    def check_min_risk_table(self, suite):
        anchor = "negative minimum risk matches its closed form"
        oracle = reference_neg_min_risk(self.loss.name) if self.is_catalogue else None
        if oracle is None:
            return [self._skip(suite, "min_risk_table", anchor, "no closed form for this loss")]
        p = P_GRID
        err = np.max(np.abs(-self.bundle.min_risk(p) - oracle(p)))
        return [self._bound(suite, "min_risk_table", anchor, err, 1e-8)]

    def check_excess_risk_identity(self, suite):
        rng = self.rng(3)
        p, q = rng.uniform(0.05, 0.95, size=(2, 50))
        gen = self.bundle.generator()
        err = np.max(np.abs(excess_risk(self.bundle, p, q) - divergence(gen, p, q)))
        return [self._bound(suite, "excess_risk", "L(p, psi(q)) - L(p) = B_{-L}(p, q)", err, 1e-8)]

    def check_pointwise_bregman_form(self, suite):
        rng = self.rng(4)
        lo, hi = self.margin_bounds(inside_link=True)
        p = rng.uniform(0.0, 1.0, size=50)
        f = rng.uniform(lo, hi, size=50)
        err = np.max(np.abs(pointwise_risk_bregman(self.bundle, p, f) - pointwise_risk(self.loss, p, f)))
        return [self._bound(suite, "pointwise_bregman", "L(p, f) = E_Y[B_{-L}(Y, q)] + L(0)", err, 1e-8)]

    def check_limit_bregman(self, suite):
        anchor = "l(yf) = B_l(f, g_y) as a limit"
        if self.c is None:
            return [self._skip(suite, "limit_bregman", anchor, "not gradient-symmetric")]
        rng = self.rng(5)
        worst, unsettled = 0.0, 0
        for _ in range(20):
            y = 1 if rng.random() < 0.5 else -1
            f = float(rng.uniform(-4.0, 4.0))
            result = limit_bregman_loss(self.loss, y, f, strict=False)
            unsettled += not result.converged
            worst = max(worst, abs(result.value - float(self.loss.eval(y * f))))
        detail = f"{unsettled} of 20 limits reached the end of the truncation schedule" if unsettled else ""
        return [self._bound(suite, "limit_bregman", anchor, worst, LIMIT_BREGMAN_TOL, detail)]

    def check_dual_connection(self, suite):
        anchor = "B_l(u, v) = B_{-L}([-L']^-1(cv), [-L']^-1(cu))"
        if self.c is None:
            return [self._skip(suite, "dual_connection", anchor, "not gradient-symmetric")]
        rng = self.rng(6)
        lo, hi = self.margin_bounds(inside_link=True)
        u, v = rng.uniform(lo, hi, size=(2, 50))
        primal = divergence(BregmanGenerator.from_loss(self.loss), u, v)
        dual = dual_form(self.bundle.generator(), self.bundle.neg_min_risk_grad_inverse, self.c, u, v)
        return [self._bound(suite, "dual_connection", anchor, np.max(np.abs(primal - dual)), 1e-8)]

    # ------------------------------------------------------------------
    # conjugate
    # ------------------------------------------------------------------

    def check_conjugate(self, suite):
        anchor = "[-L]*(v) = l(v / c)"
        if self.c is None:
            return [self._skip(suite, "conjugate", anchor, "not gradient-symmetric")]
        lo, hi = -8.0, 8.0
        if self.bundle.has_bounded_range:
            reach = abs(self.c) * self.bundle.link_range[1]
            lo, hi = max(lo, -reach), min(hi, reach)
        v = np.linspace(lo, hi, 33)
        gen = self.bundle.generator()
        numeric = np.array([conjugate(gen, x) for x in v])
        results = [self._bound(suite, "conjugate", anchor,
                               np.max(np.abs(numeric - self.loss.eval(v / self.c))), CONJUGATE_TOL)]
        if self.loss.known_conjugate is not None:
            results.append(self._bound(suite, "conjugate_table", "conjugate matches its closed form",
                                       np.max(np.abs(numeric - self.loss.known_conjugate(v))), CONJUGATE_TOL))
        return results

    # ------------------------------------------------------------------
    # decomp
    # ------------------------------------------------------------------

    def check_margin_variance_exact(self, suite):
        worst = max(
            margin_variance_decomposition(self.loss, s, labels=y).relative_residual
            for s, y, _ in self._random_instances(10)
        )
        return [self._bound(suite, "margin_variance_exact", "E[l(Yf)] = l(Yf*) + E[B_l(Yf, Yf*)]",
                            worst, self.tol)]

    def check_gradient_symmetric_exact(self, suite):
        anchor = "E[l(Yf)] = E[l(Yf*)] + E_D[B_l(f, f*)]"
        if self.c is None:
            return [self._skip(suite, "gradient_symmetric_exact", anchor, "not gradient-symmetric")]
        worst, gap = 0.0, 0.0
        for s, y, _ in self._random_instances(11):
            report = bv_decomposition_gradient_symmetric(self.loss, s, labels=y, c=self.c)
            worst = max(worst, report.relative_residual)
            gap = max(gap, report.extras["margin_variance_gap"])
        return [
            self._bound(suite, "gradient_symmetric_exact", anchor, worst, self.tol),
            self._bound(suite, "variance_equals_margin_variance", "label-free variance = margin variance",
                        gap, 1e-10),
        ]

    def check_lol_exact(self, suite):
        anchor = "E[l(Yf)] = E[b Y* f*] + E[E_D[l_e(f)]]"
        if not even_odd_split(self.loss).is_linear_odd:
            return [self._skip(suite, "lol_exact", anchor, "odd part not linear")]
        worst, gaps = 0.0, 0.0
        for s, y, _ in self._random_instances(12):
            report = lol_decomposition(self.loss, s, labels=y, c=self.c)
            worst = max(worst, report.relative_residual)
            gaps = max(gaps, report.extras.get("bias_gap", 0.0), report.extras.get("variance_gap", 0.0))
        return [
            self._bound(suite, "lol_exact", anchor, worst, self.tol),
            self._bound(suite, "jensen_gap", "variance = Jensen gap of l_e", gaps, 1e-10),
        ]

    def check_buja_equivalence(self, suite):
        anchor = "variance and bias + noise agree between margin and probability forms"
        if self.c is None:
            return [self._skip(suite, "buja_equivalence", anchor, "not gradient-symmetric")]
        variance_gap, bias_gap, centre_gap, residual = 0.0, 0.0, 0.0, 0.0
        for s, _, p in self._random_instances(13, inside_link=True):
            margin_side = bv_decomposition_gradient_symmetric(self.loss, s, posteriors=p, per_point=True, c=self.c)
            prob_side = buja_decomposition(self.loss, self.bundle, s, p, per_point=True)
            split = noise_bias_split(self.loss, self.bundle, s.central(), p)
            variance_gap = max(variance_gap, np.max(np.abs(
                np.array(margin_side.per_point["variance"]) - np.array(prob_side.per_point["variance"]))))
            bias_gap = max(bias_gap, np.max(np.abs(
                np.array(margin_side.per_point["bias_plus_noise"]) - np.array(prob_side.per_point["bias"])
                - split.noise)))
            centre_gap = max(centre_gap, prob_side.extras["centroid_margin_gap"])
            residual = max(residual, prob_side.relative_residual)
        return [
            self._bound(suite, "buja_exact", "E_D[B(p, q)] = B(p, q*) + E_D[B(q*, q)]", residual, 1e-8),
            self._bound(suite, "variance_equivalence", anchor, variance_gap, 1e-8),
            self._bound(suite, "bias_equivalence", "E_Y[l(Yf*)] = B(p, psi^-1(f*)) + L(p)", bias_gap, 1e-8),
            self._bound(suite, "centroid_coincidence", "psi(q*) = f*", centre_gap, 1e-8),
        ]

    def check_micro_instance(self, suite):
        anchor = "logistic, margins {1, 3}, y = +1"
        if self.loss.name != "logistic" or not self.is_catalogue:
            return [self._skip(suite, "micro_instance", anchor, "defined for the logistic loss")]
        s = MarginSampleMatrix(np.array([[1.0], [3.0]]))
        y = np.array([1])
        margin_side = margin_variance_decomposition(self.loss, s, labels=y)
        label_free = bv_decomposition_gradient_symmetric(self.loss, s, labels=y, c=self.c)
        buja = buja_decomposition(self.loss, self.bundle, s, np.array([0.7]))
        lol = lol_decomposition(self.loss, s, labels=y, c=self.c)
        measured = max(
            abs(margin_side.expected_risk - 0.180925),
            abs(margin_side.components["central_risk"] - 0.126928),
            abs(margin_side.components["margin_variance"] - 0.053996),
            abs(label_free.components["variance"] - 0.053996),
            abs(buja.components["variance"] - 0.053996),
            abs(lol.extras["jensen_gap"] - 0.053996),
        )
        return [self._bound(suite, "micro_instance", anchor, measured, 1e-6)]

    def check_symmetry_witnesses(self, suite):
        anchor = "label-free variance and centroid fail off the gradient-symmetric class"
        if self.c is not None:
            return [self._skip(suite, "symmetry_witness", anchor, "gradient-symmetric")]
        s = MarginSampleMatrix(np.array([[0.0], [2.0]]))
        gen = BregmanGenerator.from_loss(self.loss)
        free = float(s.expect(divergence(gen, s.margins, s.central()[None, :]))[0])
        gap = max(
            abs(free - margin_variance_decomposition(self.loss, s, labels=np.array([y])).components["margin_variance"])
            for y in (-1, 1)
        )
        results = [self._witness(suite, "variance_witness", anchor, gap, "margins {0, 2}")]
        try:
            report = buja_decomposition(self.loss, self.bundle, s, np.array([0.5]))
            results.append(self._witness(suite, "centroid_witness", "psi(q*) differs from f*",
                                         report.extras["centroid_margin_gap"], "margins {0, 2}"))
        except MarginBVError as exc:
            results.append(self._skip(suite, "centroid_witness", "psi(q*) differs from f*", str(exc)))
        return results

    # ------------------------------------------------------------------
    # ensemble
    # ------------------------------------------------------------------

    def _random_ensembles(self, salt: int, inside_link: bool = False):
        for s, y, p in self._random_instances(salt, inside_link):
            yield EnsembleSpec(s.margins), y, p

    def check_margin_ambiguity(self, suite):
        worst, lowest = 0.0, math.inf
        for spec, y, _ in self._random_ensembles(20):
            report = margin_ambiguity(self.loss, spec, y)
            worst = max(worst, report.relative_residual)
            lowest = min(lowest, report.extras["min_ambiguity"])
        return [
            self._bound(suite, "margin_ambiguity", "l(y fbar) = mean l(y f_i) - mean B_l(y f_i, y fbar)",
                        worst, self.tol),
            self._bound(suite, "ambiguity_non_negative", "ensemble loss <= average member loss",
                        max(0.0, -lowest), 1e-12),
        ]

    def check_label_free_ambiguity(self, suite):
        anchor = "l(y fbar) = mean l(y f_i) - mean B_l(f_i, fbar)"
        if self.c is None:
            spec = EnsembleSpec(np.array([[0.0], [2.0]]))
            gap = max(label_free_ambiguity_gap(self.loss, spec, np.array([y])) for y in (-1, 1))
            return [self._witness(suite, "label_free_witness", anchor, gap, "members {0, 2}")]
        worst, gap, consistency = 0.0, 0.0, 0.0
        for spec, y, _ in self._random_ensembles(21):
            report = gradient_symmetric_ambiguity(self.loss, spec, y, per_point=True, c=self.c)
            bv = bv_decomposition_gradient_symmetric(self.loss, spec.as_samples(), labels=y, per_point=True, c=self.c)
            worst = max(worst, report.relative_residual)
            gap = max(gap, report.extras["margin_ambiguity_gap"])
            consistency = max(consistency, np.max(np.abs(
                np.array(report.per_point["ambiguity"]) - np.array(bv.per_point["variance"]))))
        return [
            self._bound(suite, "label_free_ambiguity", anchor, worst, self.tol),
            self._bound(suite, "ambiguity_equals_margin_ambiguity", "label-free = margin ambiguity", gap, 1e-10),
            self._bound(suite, "ambiguity_is_variance", "ambiguity = variance of the member distribution",
                        consistency, 1e-12),
        ]

    def check_additive_ambiguity(self, suite):
        anchor = "l(y f_add) = mean l(y M f_i) - mean B_l(M f_i, f_add)"
        if self.c is None:
            return [self._skip(suite, "additive_ambiguity", anchor, "not gradient-symmetric")]
        worst = 0.0
        for spec, y, _ in self._random_ensembles(22):
            members = spec.member_margins / spec.member_count
            report = additive_ambiguity(self.loss, EnsembleSpec(members, combiner="additive"), y, c=self.c)
            worst = max(worst, report.relative_residual)
        return [self._bound(suite, "additive_ambiguity", anchor, worst, self.tol)]

    def check_centroid_linearity(self, suite):
        anchor = "centroid combiner equals the arithmetic mean iff gradient-symmetric"
        if self.c is None:
            combined = centroid_combine(self.loss, self.bundle, np.array([0.0, 2.0]))
            return [self._witness(suite, "centroid_witness", anchor, abs(combined - 1.0),
                                  f"members {{0, 2}} combine to {combined:.6f}")]
        worst = 0.0
        rng = self.rng(23)
        lo, hi = self.margin_bounds(inside_link=True)
        for _ in range(RANDOM_INSTANCES):
            members = rng.uniform(lo, hi, size=(int(rng.integers(1, 6)), 4))
            combined = centroid_combine(self.loss, self.bundle, members)
            worst = max(worst, float(np.max(np.abs(combined - np.mean(members, axis=0)))))
        return [self._bound(suite, "centroid_linearity", anchor, worst, 1e-8)]

    def check_centroid_ambiguity(self, suite):
        worst = 0.0
        for spec, _, p in self._random_ensembles(24, inside_link=True):
            report = centroid_ambiguity(self.loss, self.bundle, EnsembleSpec(spec.member_margins, combiner="centroid"),
                                        targets=p)
            worst = max(worst, report.relative_residual)
        return [self._bound(suite, "centroid_ambiguity", "B(p, qbar) = mean B(p, q_i) - mean B(qbar, q_i)",
                            worst, 1e-8)]


def run_verification(
    loss: LossDescriptor,
    suites: Iterable[str] = ("all",),
    tol: float = 1e-9,
    seed: int = 0,
) -> List[CheckResult]:
    """Run the selected suites; a loss passes when no check failed."""
    runner = SuiteRunner(loss, tol=tol, seed=seed)
    results = runner.run(suites)
    failed = [r for r in results if not r.passed]
    logger.info(f"{loss.spec}: {len(results) - len(failed)}/{len(results)} checks passed")
    return results
