from __future__ import annotations

import numpy as np
import pytest

from fullmed.oracle.population import DiscretePopulation


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def _binary_first_stages(confounded: bool):
    p_x = np.array([0.4, 0.6])
    p_u = np.array([0.3, 0.7])
    p_d = np.empty((2, 2, 2))
    p_m = np.empty((2, 2, 2, 2))
    for x in range(2):
        for u in range(2):
            p1 = 0.25 + 0.3 * x + 0.3 * u
            p_d[x, u] = [1 - p1, p1]
            for d in range(2):
                q1 = 0.2 + 0.4 * d + 0.15 * x + (0.2 * u if confounded else 0.0)
                p_m[d, x, u] = [1 - q1, q1]
    return p_x, p_u, p_d, p_m


def mediation_population(confounded: bool = False) -> DiscretePopulation:
    """
    Binary D, M and X with Y = M + 2 * coin, coin ~ Bernoulli(0.3 + 0.2 x).

    The latent moves D; with ``confounded`` it also moves M. D reaches Y only
    through M in both cases.
    """
    p_x, p_u, p_d, p_m = _binary_first_stages(confounded)
    p_y = np.zeros((2, 2, 2, 2, 4))
    for m in range(2):
        for x in range(2):
            heads = 0.3 + 0.2 * x
            p_y[:, m, x, :, m] = 1 - heads
            p_y[:, m, x, :, 2 + m] = heads
    return DiscretePopulation(y_values=[0.0, 1.0, 2.0, 3.0], p_x=p_x, p_u=p_u, p_d=p_d, p_m=p_m, p_y=p_y)


def linear_population(direct: float) -> DiscretePopulation:
    """Binary D, M and X with Y = M + direct * D exactly."""
    p_x, p_u, p_d, p_m = _binary_first_stages(confounded=False)
    p_y = np.zeros((2, 2, 2, 2, 4))
    for d in range(2):
        for m in range(2):
            p_y[d, m, :, :, 2 * m + d] = 1.0
    y_values = [0.0, direct, 1.0, 1.0 + direct]
    return DiscretePopulation(y_values=y_values, p_x=p_x, p_u=p_u, p_d=p_d, p_m=p_m, p_y=p_y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
