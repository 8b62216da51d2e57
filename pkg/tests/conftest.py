"""Shared fixtures for the marginbv test suites."""

import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from marginbv.loss_zoo import CATALOGUE, builtin_loss
from marginbv.risk_link import build_link_bundle

settings.register_profile(
    "marginbv",
    max_examples=40,
    deadline=None,
    # _reset_logging only tears down handlers
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("marginbv")

GRADIENT_SYMMETRIC = ("squared", "logistic", "canonical_boosting", "laplacian")
NOT_GRADIENT_SYMMETRIC = ("exponential", "smooth_hinge")


@pytest.fixture(scope="session")
def losses():
    return {name: builtin_loss(name) for name in CATALOGUE}


@pytest.fixture(scope="session")
def bundles(losses):
    return {name: build_link_bundle(loss) for name, loss in losses.items()}


@pytest.fixture(params=CATALOGUE)
def any_loss(request, losses):
    return losses[request.param]


@pytest.fixture(params=GRADIENT_SYMMETRIC)
def symmetric_loss(request, losses):
    return losses[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    root = logging.getLogger("marginbv")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.propagate = True
