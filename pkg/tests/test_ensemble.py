"""Tests for the ensemble ambiguity decompositions and combiners."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from marginbv.errors import ConfigError, DecompositionInapplicableError, LinkDomainError, ParameterError
from marginbv.ensemble import (
    EnsembleSpec,
    additive_ambiguity,
    centroid_ambiguity,
    centroid_combine,
    gradient_symmetric_ambiguity,
    label_free_ambiguity_gap,
    load_members_csv,
    margin_ambiguity,
    regression_ambiguity,
)
from marginbv.loss_zoo import builtin_loss, load_loss
from marginbv.verification import run_verification

from .conftest import GRADIENT_SYMMETRIC


@st.composite
def ensembles(draw, bound=4.0):
    m = draw(st.integers(1, 8))
    n = draw(st.integers(1, 16))
    members = draw(arrays(float, (m, n), elements=st.floats(-bound, bound)))
    labels = draw(arrays(int, n, elements=st.sampled_from([-1, 1])))
    return members, labels


class TestEnsembleSpec:
    def test_default_weights(self):
        spec = EnsembleSpec(np.array([[0.0, 1.0], [2.0, 3.0]]))
        assert_allclose(spec.alpha(), [0.5, 0.5])
        assert_allclose(spec.arithmetic_mean(), [1.0, 2.0])
        assert spec.is_uniform

    def test_additive_sums_members(self):
        spec = EnsembleSpec(np.array([[0.5], [1.5]]), combiner="additive")
        assert_allclose(spec.arithmetic_mean(), [2.0])
        assert_allclose(spec.inflated_margins(), [[1.0], [3.0]])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            EnsembleSpec(np.zeros((2, 3)), weights=np.array([0.5, 0.7]), combiner="weighted")

    def test_unknown_combiner(self):
        with pytest.raises(ParameterError):
            EnsembleSpec(np.zeros((2, 3)), combiner="median")


class TestMarginAmbiguity:
    def test_squared_two_members(self, losses):
        spec = EnsembleSpec(np.array([[0.0], [2.0]]))
        report = margin_ambiguity(losses["squared"], spec, np.array([1]))
        assert report.expected_risk == pytest.approx(0.0)
        assert report.components["average_error"] == pytest.approx(1.0)
        assert report.components["ambiguity"] == pytest.approx(1.0)

    @pytest.mark.parametrize("name", ["logistic", "exponential", "smooth_hinge"])
    @given(data=ensembles())
    def test_identity_and_non_negative_ambiguity(self, name, data):
        members, labels = data
        report = margin_ambiguity(builtin_loss(name), EnsembleSpec(members), labels)
        assert report.relative_residual <= 1e-9
        assert report.expected_risk <= report.components["average_error"] * (1.0 + 1e-12) + 1e-12

    def test_weighted_members(self, losses, rng):
        members = rng.uniform(-2.0, 2.0, (3, 5))
        spec = EnsembleSpec(members, weights=np.array([0.2, 0.3, 0.5]), combiner="weighted")
        report = margin_ambiguity(losses["logistic"], spec, np.ones(5, dtype=int))
        assert report.exact


class TestLabelFreeAmbiguity:
    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    @given(data=ensembles())
    def test_identity(self, name, data):
        members, labels = data
        report = gradient_symmetric_ambiguity(builtin_loss(name), EnsembleSpec(members), labels)
        assert report.relative_residual <= 1e-9
        assert report.extras["margin_ambiguity_gap"] <= 1e-10

    def test_refused_for_exponential(self, losses):
        with pytest.raises(DecompositionInapplicableError):
            gradient_symmetric_ambiguity(losses["exponential"], EnsembleSpec(np.array([[-1.0], [1.0]])), [1])

    def test_witness_gap(self, losses):
        spec = EnsembleSpec(np.array([[0.0], [2.0]]))
        assert label_free_ambiguity_gap(losses["exponential"], spec, np.array([-1])) > 1e-3
        assert label_free_ambiguity_gap(losses["logistic"], spec, np.array([-1])) <= 1e-8
        assert label_free_ambiguity_gap(losses["squared"], spec, np.array([-1])) <= 1e-8

    @pytest.mark.parametrize("spec", ["exponential", "smooth_hinge:t=10"])
    def test_verification_witness_for_asymmetric_losses(self, spec):
        results = run_verification(load_loss(spec), suites=["ensemble"])
        witness = next(r for r in results if r.name == "label_free_witness")
        assert witness.passed
        assert witness.measured > 1e-3


class TestAdditiveAmbiguity:
    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    @given(data=ensembles(bound=0.5))
    def test_identity(self, name, data):
        members, labels = data
        report = additive_ambiguity(builtin_loss(name), EnsembleSpec(members, combiner="additive"), labels)
        assert report.relative_residual <= 1e-9

    def test_refused_for_smooth_hinge(self, losses):
        with pytest.raises(DecompositionInapplicableError):
            additive_ambiguity(losses["smooth_hinge"], EnsembleSpec(np.ones((2, 1)), combiner="additive"), [1])

    def test_needs_additive_combiner(self, losses):
        with pytest.raises(ParameterError):
            additive_ambiguity(losses["logistic"], EnsembleSpec(np.ones((2, 1))), [1])


class TestCentroidCombiner:
    def test_exponential_witness(self, losses, bundles):
        combined = centroid_combine(losses["exponential"], bundles["exponential"], np.array([0.0, 2.0]))
        assert combined == pytest.approx(math.asinh(math.sinh(2.0) / 2.0), abs=1e-9)
        assert 2.0 * math.sinh(combined) == pytest.approx(math.sinh(2.0), rel=1e-12)

    @pytest.mark.parametrize("name", GRADIENT_SYMMETRIC)
    def test_linear_for_symmetric_losses(self, losses, bundles, rng, name):
        members = rng.uniform(-0.9, 0.9, (5, 7))
        combined = centroid_combine(losses[name], bundles[name], members)
        assert_allclose(combined, members.mean(axis=0), atol=1e-8)

    def test_single_row_returns_float(self, losses, bundles):
        assert isinstance(centroid_combine(losses["logistic"], bundles["logistic"], [0.5, 1.5]), float)

    def test_clamp_budget(self, losses, bundles):
        with pytest.raises(LinkDomainError):
            centroid_combine(losses["squared"], bundles["squared"], np.array([0.0, 3.0]))

    @pytest.mark.parametrize("name", ["logistic", "laplacian", "exponential", "smooth_hinge"])
    def test_ambiguity_identity(self, losses, bundles, rng, name):
        spec = EnsembleSpec(rng.uniform(-2.0, 2.0, (4, 6)), combiner="centroid")
        report = centroid_ambiguity(losses[name], bundles[name], spec, targets=rng.uniform(0.05, 0.95, 6))
        assert report.exact
        assert report.components["ambiguity"] >= -1e-12

    def test_ambiguity_identity_past_probability_saturation(self, losses, bundles):
        spec = EnsembleSpec(np.array([[3.0], [5.0]]), combiner="centroid")
        assert bundles["smooth_hinge"].inverse_link(5.0) == 1.0 - 1e-12
        report = centroid_ambiguity(losses["smooth_hinge"], bundles["smooth_hinge"], spec, targets=[0.7])
        assert report.relative_residual <= 1e-10
        assert report.clamp_flags == {"clamped_members": 0}

    def test_reports_mean_deviation(self, losses, bundles):
        spec = EnsembleSpec(np.array([[0.0], [2.0]]), combiner="centroid")
        exponential = centroid_ambiguity(losses["exponential"], bundles["exponential"], spec, labels=[1])
        logistic = centroid_ambiguity(losses["logistic"], bundles["logistic"], spec, labels=[1])
        assert exponential.extras["mean_deviation"] > 1e-3
        assert logistic.extras["mean_deviation"] <= 1e-8

    def test_weighted_centroid_is_flagged(self, losses, bundles):
        spec = EnsembleSpec(np.array([[0.0], [1.0]]), weights=np.array([0.25, 0.75]), combiner="centroid")
        report = centroid_ambiguity(losses["logistic"], bundles["logistic"], spec, labels=[1])
        assert any(note.startswith("extension") for note in report.notes)

    def test_needs_a_target(self, losses, bundles):
        with pytest.raises(ParameterError):
            centroid_ambiguity(losses["logistic"], bundles["logistic"], EnsembleSpec(np.ones((2, 1)), combiner="centroid"))


class TestRegressionAmbiguity:
    def test_classic_identity(self, rng):
        members = rng.normal(size=(6, 10))
        target = rng.normal(size=10)
        report = regression_ambiguity(members, target, per_point=True)
        assert report.exact
        assert_allclose(
            report.per_point["expected_risk"],
            (members.mean(axis=0) - target) ** 2,
            atol=1e-12,
        )


class TestMembersFile:
    def test_reads_members_in_order(self, tmp_path):
        path = tmp_path / "members.csv"
        path.write_text("point_id,member_2,member_1,label,p\na,2.0,0.0,1,0.8\nb,1.0,-1.0,-1,0.3\n")
        table = load_members_csv(path)
        assert table.point_ids == ["a", "b"]
        assert_allclose(table.margins, [[0.0, -1.0], [2.0, 1.0]])
        assert_allclose(table.labels, [1.0, -1.0])
        assert_allclose(table.targets, [0.8, 0.3])

    def test_rejects_bad_labels(self, tmp_path):
        path = tmp_path / "members.csv"
        path.write_text("point_id,member_1,label\na,0.5,0\n")
        with pytest.raises(ConfigError):
            load_members_csv(path)

    def test_requires_member_columns(self, tmp_path):
        path = tmp_path / "members.csv"
        path.write_text("point_id,label\na,1\n")
        with pytest.raises(ConfigError):
            load_members_csv(path)
