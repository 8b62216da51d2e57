"""Tests for the margin-side and probability-side risk decompositions."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from marginbv.bregman import BregmanGenerator, divergence
from marginbv.decomp import (
    MarginSampleMatrix,
    buja_decomposition,
    buja_inputs,
    bv_decomposition_gradient_symmetric,
    lol_decomposition,
    margin_variance_decomposition,
    noise_bias_report,
    noise_bias_split,
)
from marginbv.errors import DecompositionInapplicableError, ParameterError
from marginbv.loss_zoo import LossDescriptor, builtin_loss
from marginbv.risk_link import build_link_bundle

from .conftest import GRADIENT_SYMMETRIC

LOGISTIC = builtin_loss("logistic")


@st.composite
def instances(draw, bound=4.0):
    """Random (margins, labels, posteriors) with M ≤ 8 models and N ≤ 16 points."""
    m = draw(st.integers(1, 8))
    n = draw(st.integers(1, 16))
    margins = draw(arrays(float, (m, n), elements=st.floats(-bound, bound)))
    labels = draw(arrays(int, n, elements=st.sampled_from([-1, 1])))
    posteriors = draw(arrays(float, n, elements=st.floats(0.05, 0.95)))
    return MarginSampleMatrix(margins), labels, posteriors


class TestMarginSampleMatrix:
    def test_vector_is_one_point(self):
        samples = MarginSampleMatrix(np.array([1.0, 3.0]))
        assert samples.model_count == 2
        assert samples.point_count == 1
        assert_allclose(samples.central(), [2.0])

    def test_weighted_expectation(self):
        samples = MarginSampleMatrix(np.array([[0.0], [4.0]]), weights=np.array([0.75, 0.25]))
        assert_allclose(samples.central(), [1.0])

    def test_rejects_bad_weights(self):
        with pytest.raises(ParameterError):
            MarginSampleMatrix(np.zeros((2, 3)), weights=np.array([0.5, 0.6]))

    def test_rejects_empty(self):
        with pytest.raises(ParameterError):
            MarginSampleMatrix(np.zeros((0, 3)))


class TestMicroInstance:
    """Logistic loss, two models with margins 1 and 3 at a single positive point."""

    samples = MarginSampleMatrix(np.array([[1.0], [3.0]]))
    labels = np.array([1])

    def test_margin_variance(self):
        report = margin_variance_decomposition(LOGISTIC, self.samples, labels=self.labels)
        assert report.expected_risk == pytest.approx(0.180925, abs=1e-6)
        assert report.components["central_risk"] == pytest.approx(0.126928, abs=1e-6)
        assert report.components["margin_variance"] == pytest.approx(0.053996, abs=1e-6)
        assert report.exact

    def test_four_variances_agree(self):
        bundle = build_link_bundle(LOGISTIC)
        variances = [
            margin_variance_decomposition(LOGISTIC, self.samples, labels=self.labels).components["margin_variance"],
            bv_decomposition_gradient_symmetric(LOGISTIC, self.samples, labels=self.labels).components["variance"],
            buja_decomposition(LOGISTIC, bundle, self.samples, np.array([0.7])).components["variance"],
            lol_decomposition(LOGISTIC, self.samples, labels=self.labels).extras["jensen_gap"],
        ]
        assert_allclose(variances, 0.053996, atol=1e-6)

    def test_lol_terms(self):
        report = lol_decomposition(LOGISTIC, self.samples, labels=self.labels)
        # b·Y*·f* = -0.5·1·2
        assert report.components["expected_margin_term"] == pytest.approx(-1.0)
        assert report.extras["odd_slope"] == pytest.approx(-0.5)
        assert report.components["even_part_term"] == pytest.approx(1.180925, abs=1e-6)

    def test_empirical_labels_are_noted(self):
        report = margin_variance_decomposition(LOGISTIC, self.samples, labels=self.labels)
        assert any("empirical Y*" in note for note in report.notes)
        exact = margin_variance_decomposition(LOGISTIC, self.samples, posteriors=np.array([1.0]))
        assert exact.notes == []


class TestExactness:
    @pytest.mark.parametrize("name", ["squared", "logistic", "canonical_boosting", "laplacian", "exponential", "smooth_hinge"])
    @given(data=instances())
    def test_margin_variance_closes(self, name, data):
        samples, labels, _ = data
        report = margin_variance_decomposition(builtin_loss(name), samples, labels=labels)
        assert report.relative_residual <= 1e-9
        assert report.components["margin_variance"] >= 0.0

    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    @given(data=instances())
    def test_gradient_symmetric_closes(self, name, data):
        samples, labels, posteriors = data
        loss = builtin_loss(name)
        for kwargs in ({"labels": labels}, {"posteriors": posteriors}):
            report = bv_decomposition_gradient_symmetric(loss, samples, **kwargs)
            assert report.relative_residual <= 1e-9
            assert report.extras["margin_variance_gap"] <= 1e-10

    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    @given(data=instances())
    def test_lol_closes(self, name, data):
        samples, labels, _ = data
        report = lol_decomposition(builtin_loss(name), samples, labels=labels)
        assert report.relative_residual <= 1e-9
        assert report.extras["variance_gap"] <= 1e-10
        assert report.extras["bias_gap"] <= 1e-10

    def test_single_model_has_no_variance(self, any_loss, rng):
        samples = MarginSampleMatrix(rng.uniform(-0.9, 0.9, (1, 10)))
        labels = np.where(rng.random(10) < 0.5, -1, 1)
        report = margin_variance_decomposition(any_loss, samples, labels=labels)
        assert report.components["margin_variance"] == 0.0

    def test_per_point_series(self, rng):
        samples = MarginSampleMatrix(rng.normal(size=(4, 6)))
        report = margin_variance_decomposition(LOGISTIC, samples, labels=np.ones(6, dtype=int), per_point=True)
        assert set(report.per_point) == {"expected_risk", "central_risk", "margin_variance", "residual"}
        assert len(report.per_point["residual"]) == 6


class TestApplicability:
    @pytest.mark.parametrize("name", ["exponential", "smooth_hinge"])
    def test_label_free_variance_refused(self, losses, name):
        with pytest.raises(DecompositionInapplicableError):
            bv_decomposition_gradient_symmetric(losses[name], MarginSampleMatrix(np.array([0.0, 2.0])), labels=[1])

    @pytest.mark.parametrize("name", ["exponential", "smooth_hinge"])
    def test_lol_refused(self, losses, name):
        with pytest.raises(DecompositionInapplicableError):
            lol_decomposition(losses[name], MarginSampleMatrix(np.array([0.0, 2.0])), labels=[1])

    @pytest.mark.parametrize("name,minimum_gap", [("exponential", 1.0), ("smooth_hinge", 0.3)])
    def test_label_free_variance_differs_off_class(self, losses, name, minimum_gap):
        loss = losses[name]
        samples = MarginSampleMatrix(np.array([0.0, 2.0]))
        free = float(samples.expect(divergence(BregmanGenerator.from_loss(loss), samples.margins, samples.central()[None, :]))[0])
        margin = margin_variance_decomposition(loss, samples, labels=np.array([-1])).components["margin_variance"]
        assert abs(free - margin) > minimum_gap

    def test_non_convex_even_part_gives_negative_jensen_gap(self):
        bump = LossDescriptor.from_even_part(
            "bump",
            lambda v: np.exp(-np.asarray(v) ** 2),
            lambda v: -2.0 * np.asarray(v) * np.exp(-np.asarray(v) ** 2),
            c=-1.0,
        )
        samples = MarginSampleMatrix(np.array([[-0.5], [0.5]]))
        report = lol_decomposition(bump, samples, labels=np.array([1]), c=-1.0)
        assert report.relative_residual <= 1e-9
        assert report.extras["jensen_gap"] < 0.0
        assert any("negative Jensen gap" in note for note in report.notes)


class TestProbabilitySide:
    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    @given(data=instances(bound=0.9))
    def test_buja_closes_and_matches_margin_side(self, name, data):
        samples, _, posteriors = data
        loss = builtin_loss(name)
        bundle = build_link_bundle(loss)
        prob = buja_decomposition(loss, bundle, samples, posteriors, per_point=True)
        margin = bv_decomposition_gradient_symmetric(loss, samples, posteriors=posteriors, per_point=True)
        assert prob.relative_residual <= 1e-8
        assert_allclose(prob.per_point["variance"], margin.per_point["variance"], atol=1e-8)
        assert prob.extras["centroid_margin_gap"] <= 1e-8

    def test_centroid_averages_the_dual(self, losses, bundles, rng):
        bundle = bundles["exponential"]
        samples = MarginSampleMatrix(rng.uniform(-2.0, 2.0, (5, 8)))
        inputs = buja_inputs(bundle, samples, rng.uniform(0.05, 0.95, 8))
        assert_allclose(
            bundle.neg_min_risk_grad(inputs.centroid),
            samples.expect(bundle.neg_min_risk_grad(inputs.implied)),
            atol=1e-8,
        )

    def test_saturated_margins_keep_the_identity(self, losses, bundles):
        samples = MarginSampleMatrix(np.array([[3.0, 4.0], [5.0, 6.0]]))
        report = buja_decomposition(losses["smooth_hinge"], bundles["smooth_hinge"], samples, np.array([0.7, 0.2]))
        assert report.relative_residual <= 1e-10
        assert report.components["variance"] > 0.0

    def test_exponential_centroid_moves_off_the_mean(self, losses, bundles):
        samples = MarginSampleMatrix(np.array([0.0, 2.0]))
        report = buja_decomposition(losses["exponential"], bundles["exponential"], samples, np.array([0.5]))
        assert report.extras["centroid_margin_gap"] > 1e-3
        assert report.exact

    def test_squared_clamps_out_of_range_margins(self, losses, bundles):
        samples = MarginSampleMatrix(np.array([[0.2, 1.5], [0.4, 0.3]]))
        report = buja_decomposition(losses["squared"], bundles["squared"], samples, np.array([0.6, 0.4]))
        assert report.clamp_flags["clamped_margins"] == 1
        assert report.warnings

    def test_rejects_bad_posteriors(self, losses, bundles):
        with pytest.raises(ParameterError):
            buja_decomposition(losses["logistic"], bundles["logistic"], MarginSampleMatrix(np.zeros((2, 2))), [0.5, 1.5])


class TestNoiseSplit:
    def test_bias_plus_noise_is_central_risk(self, symmetric_loss, bundles, rng):
        bundle = bundles[symmetric_loss.name]
        samples = MarginSampleMatrix(rng.uniform(-0.9, 0.9, (5, 12)))
        p = rng.uniform(0.05, 0.95, 12)
        report = noise_bias_report(symmetric_loss, bundle, samples, p, per_point=True)
        central = bv_decomposition_gradient_symmetric(symmetric_loss, samples, posteriors=p, per_point=True)
        assert_allclose(
            np.array(report.per_point["noise"]) + np.array(report.per_point["bias"]),
            central.per_point["bias_plus_noise"],
            atol=1e-8,
        )

    def test_uninformative_posterior_is_pure_noise(self, bundles):
        split = noise_bias_split(LOGISTIC, bundles["logistic"], np.zeros(5), np.full(5, 0.5))
        assert_allclose(split.noise, math.log(2.0), atol=1e-12)
        assert_allclose(split.bias, 0.0, atol=1e-12)
        assert split.l0_offset == 0.0

    def test_certain_points_use_the_minimum_risk(self, bundles):
        split = noise_bias_split(LOGISTIC, bundles["logistic"], np.array([1.0, -1.0]), np.array([1.0, 0.0]))
        assert_allclose(split.noise, 0.0)
        assert split.fallback_points == 2
        assert_allclose(split.total, [math.log1p(math.exp(-1.0))] * 2, atol=1e-9)
