"""Tests for Bregman divergences, conjugates and the limit representation of a loss."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from marginbv.bregman import (
    BregmanGenerator,
    LimitAnchor,
    conjugate,
    divergence,
    dual_form,
    find_limit_anchor,
    label_flip_asymmetry,
    label_flip_symmetric,
    limit_bregman_loss,
)
from marginbv.errors import InvariantViolationError, ParameterError, TruncationError
from marginbv.loss_zoo import builtin_loss

from .conftest import GRADIENT_SYMMETRIC

margins = st.floats(-6.0, 6.0, allow_nan=False)


class TestDivergence:
    @given(margins, margins)
    def test_non_negative(self, u, v):
        gen = BregmanGenerator.from_loss(builtin_loss("logistic"))
        assert divergence(gen, u, v) >= 0.0

    @given(margins)
    def test_zero_on_diagonal(self, u):
        gen = BregmanGenerator.from_loss(builtin_loss("exponential"))
        assert divergence(gen, u, u) == pytest.approx(0.0, abs=1e-12)

    def test_squared_loss_gives_squared_distance(self, losses, rng):
        gen = BregmanGenerator.from_loss(losses["squared"])
        u, v = rng.uniform(-3.0, 3.0, (2, 20))
        assert_allclose(divergence(gen, u, v), (u - v) ** 2, atol=1e-12)

    def test_exponential_label_flip_values(self, losses):
        gen = BregmanGenerator.from_loss(losses["exponential"])
        forward = divergence(gen, 1.0, 0.0)
        flipped = divergence(gen, -1.0, 0.0)
        assert forward == pytest.approx(0.367879, abs=1e-6)
        assert flipped == pytest.approx(0.718282, abs=1e-6)
        assert abs(forward - flipped) > 0.35

    def test_broadcasts(self, losses):
        gen = BregmanGenerator.from_loss(losses["logistic"])
        out = divergence(gen, np.zeros((3, 4)), np.ones(4))
        assert out.shape == (3, 4)

    def test_domain_is_enforced(self, bundles):
        gen = bundles["logistic"].generator()
        with pytest.raises(ParameterError):
            divergence(gen, 1.5, 0.5)
        with pytest.raises(ParameterError):
            divergence(gen, 0.5, 0.0)

    def test_non_convex_generator_detected(self):
        gen = BregmanGenerator(phi=lambda x: -np.asarray(x) ** 2, phi_grad=lambda x: -2.0 * np.asarray(x), name="concave")
        with pytest.raises(InvariantViolationError):
            divergence(gen, 1.0, 0.0)


class TestLabelFlip:
    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    def test_symmetric_losses(self, losses, name):
        assert label_flip_symmetric(losses[name])

    @pytest.mark.parametrize("name", ["exponential", "smooth_hinge"])
    def test_asymmetric_losses(self, losses, name):
        assert not label_flip_symmetric(losses[name])
        assert label_flip_asymmetry(losses[name]) > 1e-3


class TestConjugate:
    def test_logistic_conjugate_is_softplus(self, bundles):
        gen = bundles["logistic"].generator()
        for v in (-5.0, -1.0, 0.0, 2.5, 5.0):
            assert conjugate(gen, v) == pytest.approx(math.log1p(math.exp(v)), abs=1e-6)

    def test_squared_conjugate_inside_gradient_image(self, bundles):
        gen = bundles["squared"].generator()
        for v in (-3.0, 0.0, 2.0):
            assert conjugate(gen, v) == pytest.approx((1.0 + v / 4.0) ** 2, abs=1e-6)

    def test_conjugate_is_loss_at_scaled_margin(self, symmetric_loss, bundles):
        c = {"squared": -4.0}.get(symmetric_loss.name, -1.0)
        gen = bundles[symmetric_loss.name].generator()
        for v in (-2.0, 0.5, 3.0):
            assert conjugate(gen, v) == pytest.approx(float(symmetric_loss(v / c)), abs=1e-6)


class TestLimitRepresentation:
    def test_anchors(self, losses):
        assert find_limit_anchor(losses["squared"]).g_plus == 1.0
        assert math.isinf(find_limit_anchor(losses["logistic"]).g_plus)

    def test_anchor_pair_must_mirror(self):
        with pytest.raises(InvariantViolationError):
            LimitAnchor(g_plus=1.0, g_minus=-2.0)

    @pytest.mark.parametrize("y", [-1, 1])
    def test_squared_uses_finite_anchor(self, losses, y):
        result = limit_bregman_loss(losses["squared"], y, 0.3)
        assert result.converged and result.truncation_g is None
        assert result.value == pytest.approx(float(losses["squared"](y * 0.3)), abs=1e-12)

    @pytest.mark.parametrize("name", ["logistic", "laplacian"])
    @pytest.mark.parametrize("y,f", [(1, 0.5), (-1, 2.0), (1, -3.0)])
    def test_exponential_tails_converge(self, losses, name, y, f):
        result = limit_bregman_loss(losses[name], y, f)
        assert result.converged
        assert result.value == pytest.approx(float(losses[name](y * f)), abs=1e-6)

    def test_algebraic_tail_needs_lenient_mode(self, losses):
        loss = losses["canonical_boosting"]
        with pytest.raises(TruncationError) as info:
            limit_bregman_loss(loss, 1, 0.5)
        assert info.value.truncation_g == 1e8
        result = limit_bregman_loss(loss, 1, 0.5, strict=False)
        assert not result.converged
        assert result.value == pytest.approx(float(loss(0.5)), abs=1e-6)

    def test_rejects_bad_label(self, losses):
        with pytest.raises(ParameterError):
            limit_bregman_loss(losses["logistic"], 0, 1.0)


class TestDualConnection:
    @pytest.mark.parametrize("name,c,bound", [("logistic", -1.0, 4.0), ("squared", -4.0, 0.9)])
    def test_margin_divergence_equals_dual_divergence(self, losses, bundles, rng, name, c, bound):
        bundle = bundles[name]
        u, v = rng.uniform(-bound, bound, (2, 50))
        primal = divergence(BregmanGenerator.from_loss(losses[name]), u, v)
        dual = dual_form(bundle.generator(), bundle.neg_min_risk_grad_inverse, c, u, v)
        assert_allclose(dual, primal, atol=1e-8)
