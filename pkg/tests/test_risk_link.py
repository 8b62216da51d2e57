"""Tests for pointwise risk, minimum risk and link functions."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import expit, logit

from marginbv.bregman import divergence
from marginbv.errors import ConvergenceError, LinkDomainError, NumericError
from marginbv.loss_zoo import builtin_loss
from marginbv.risk_link import (
    P_GRID,
    bregman_at_margin,
    bregman_between_margins,
    build_link_bundle,
    canonical_scaling_check,
    excess_risk,
    link_is_increasing,
    pointwise_risk,
    pointwise_risk_bregman,
)
from marginbv.utils.numerics import bisect_increasing, check_finite, golden_section_max

from .conftest import GRADIENT_SYMMETRIC

probabilities = st.floats(0.02, 0.98)

SQUARED_BUNDLE = build_link_bundle(builtin_loss("squared"))


class TestPointwiseRisk:
    def test_mixes_both_labels(self, losses):
        loss = losses["logistic"]
        assert pointwise_risk(loss, 0.3, 1.0) == pytest.approx(0.3 * float(loss(1.0)) + 0.7 * float(loss(-1.0)))

    def test_certain_labels_skip_the_other_term(self, losses):
        loss = losses["exponential"]
        with np.errstate(over="ignore"):
            assert pointwise_risk(loss, 1.0, 800.0) == 0.0
            assert pointwise_risk(loss, 0.0, -800.0) == 0.0

    @given(probabilities, st.floats(-6.0, 6.0))
    def test_link_minimises_pointwise_risk(self, p, v):
        bundle = SQUARED_BUNDLE
        best = pointwise_risk(bundle.loss, p, bundle.link(p))
        assert best <= pointwise_risk(bundle.loss, p, v) + 1e-12


class TestLinks:
    def test_logistic_closed_form(self, bundles):
        bundle = bundles["logistic"]
        assert bundle.closed_form
        assert_allclose(bundle.link(P_GRID), logit(P_GRID), atol=1e-12)
        assert_allclose(bundle.inverse_link(np.array([-2.0, 0.0, 3.0])), expit([-2.0, 0.0, 3.0]))

    def test_squared_range_is_bounded(self, bundles):
        bundle = bundles["squared"]
        assert bundle.link_range == (-1.0, 1.0)
        assert bundle.has_bounded_range
        clamped, mask = bundle.clamp_margins(np.array([-2.0, 0.0, 2.0]))
        assert mask.tolist() == [True, False, True]
        assert np.all(np.abs(clamped) < 1.0)

    def test_unbounded_range(self, bundles):
        assert not bundles["logistic"].has_bounded_range
        _, mask = bundles["logistic"].clamp_margins(np.array([-30.0, 30.0]))
        assert not mask.any()

    def test_laplacian_link_is_numeric(self, bundles):
        assert not bundles["laplacian"].closed_form

    def test_roundtrip(self, any_loss, bundles):
        bundle = bundles[any_loss.name]
        assert_allclose(bundle.inverse_link(bundle.link(P_GRID)), P_GRID, atol=1e-8)

    def test_link_is_odd_around_half(self, any_loss, bundles):
        bundle = bundles[any_loss.name]
        assert_allclose(bundle.link(P_GRID), -bundle.link(1.0 - P_GRID), atol=1e-8)

    def test_link_increasing(self, any_loss, bundles):
        assert link_is_increasing(bundles[any_loss.name])

    def test_to_probability_reports_clamps(self, bundles):
        q, mask = bundles["squared"].to_probability(np.array([0.0, 1.5]))
        assert q[0] == pytest.approx(0.5)
        assert mask.tolist() == [False, True]

    def test_dual_inverse(self, bundles):
        bundle = bundles["exponential"]
        f = np.array([-2.0, 0.0, 1.5])
        assert_allclose(bundle.dual_to_margin(bundle.margin_to_dual(f)), f, atol=1e-10)


class TestMinimumRisk:
    def test_logistic_entropy(self, bundles):
        assert float(bundles["logistic"].min_risk(0.5)) == pytest.approx(math.log(2.0))

    def test_fair_at_the_edges(self, any_loss, bundles):
        bundle = bundles[any_loss.name]
        assert float(bundle.min_risk(0.0)) == 0.0
        assert float(bundle.min_risk(1.0)) == 0.0

    def test_laplacian_matches_closed_form(self, bundles):
        p = P_GRID
        s = 1.0 - np.abs(2.0 * p - 1.0)
        assert_allclose(-bundles["laplacian"].min_risk(p), -0.5 * s * (1.0 - np.log(s)), atol=1e-8)

    def test_symmetric_about_half(self, any_loss, bundles):
        bundle = bundles[any_loss.name]
        assert_allclose(bundle.min_risk(P_GRID), bundle.min_risk(1.0 - P_GRID), atol=1e-8)

    @pytest.mark.parametrize("name,c", [("squared", -4.0), ("logistic", -1.0)])
    def test_dual_coordinate_is_scaled_link(self, bundles, name, c):
        bundle = bundles[name]
        assert_allclose(bundle.neg_min_risk_grad(P_GRID), -c * bundle.link(P_GRID), atol=1e-8)


class TestRiskIdentities:
    def test_excess_risk_is_bregman(self, any_loss, bundles, rng):
        bundle = bundles[any_loss.name]
        p, q = rng.uniform(0.05, 0.95, (2, 30))
        assert_allclose(excess_risk(bundle, p, q), divergence(bundle.generator(), p, q), atol=1e-8)

    def test_pointwise_risk_as_bregman_form(self, symmetric_loss, bundles, rng):
        bundle = bundles[symmetric_loss.name]
        p = rng.uniform(0.0, 1.0, 30)
        f = rng.uniform(-0.9, 0.9, 30)
        assert_allclose(pointwise_risk_bregman(bundle, p, f), pointwise_risk(symmetric_loss, p, f), atol=1e-8)

    def test_saturated_link_keeps_the_bregman_form(self, losses, bundles):
        bundle = bundles["smooth_hinge"]
        f = np.array([1.0, 2.0, 3.0, 4.0, 6.0])
        assert bundle.inverse_link(f)[-1] == 1.0 - 1e-12
        assert_allclose(pointwise_risk_bregman(bundle, 0.3, f), pointwise_risk(losses["smooth_hinge"], 0.3, f), atol=1e-12)

    def test_margin_side_divergence_matches_probability_side(self, any_loss, bundles, rng):
        bundle = bundles[any_loss.name]
        p = rng.uniform(0.05, 0.95, 30)
        f, g = rng.uniform(-0.9, 0.9, (2, 30))
        gen = bundle.generator()
        q, q_g = bundle.inverse_link(f), bundle.inverse_link(g)
        assert_allclose(bregman_at_margin(bundle, p, f), divergence(gen, p, q), atol=1e-8)
        assert_allclose(bregman_between_margins(bundle, g, f), divergence(gen, q_g, q), atol=1e-8)

    def test_margin_side_divergence_is_excess_risk(self, losses, bundles):
        bundle = bundles["smooth_hinge"]
        p, f = 0.7, np.array([2.5, 3.5, 5.0])
        expected = pointwise_risk(losses["smooth_hinge"], p, f) - bundle.min_risk(p)
        assert_allclose(bregman_at_margin(bundle, p, f), expected, rtol=1e-12)
        assert np.all(bregman_between_margins(bundle, np.array([3.0]), f) >= 0.0)

    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    def test_canonical_scaling_for_symmetric_losses(self, losses, bundles, name):
        c = canonical_scaling_check(losses[name], bundles[name])
        assert c == pytest.approx({"squared": -4.0}.get(name, -1.0), rel=1e-4)

    @pytest.mark.parametrize("name", ["exponential", "smooth_hinge"])
    def test_canonical_scaling_fails_otherwise(self, losses, bundles, name):
        assert canonical_scaling_check(losses[name], bundles[name]) is None


class TestNumerics:
    def test_golden_section_finds_interior_max(self):
        x, y = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
        assert x == pytest.approx(0.3, abs=1e-6)
        assert y == pytest.approx(0.0, abs=1e-12)

    def test_golden_section_finds_boundary_max(self):
        x, _ = golden_section_max(lambda t: t, 0.0, 1.0)
        assert x == 1.0

    def test_golden_section_iteration_cap(self):
        with pytest.raises(ConvergenceError):
            golden_section_max(lambda t: -t * t, -1.0, 1.0, tol=1e-12, max_iter=5)

    def test_bisection_solves_elementwise(self):
        roots = bisect_increasing(np.tanh, np.array([-0.5, 0.0, 0.9]), -10.0, 10.0)
        assert_allclose(np.tanh(roots), [-0.5, 0.0, 0.9], atol=1e-12)

    def test_bisection_without_bracket(self):
        with pytest.raises(LinkDomainError):
            bisect_increasing(np.tanh, np.array([1.5]), -10.0, 10.0)

    def test_check_finite_names_location(self):
        with pytest.raises(NumericError) as info:
            check_finite(np.array([1.0, np.inf]), np.array([0.1, 0.2]), "value")
        assert "0.2" in str(info.value)
