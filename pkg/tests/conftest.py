import pytest

from ezbranch.distributions import binomial_marginal, from_pmf


@pytest.fixture
def two_point():
    return from_pmf({0: 0.4, 2: 0.6})


@pytest.fixture
def binomial_075():
    return binomial_marginal(0.75)


@pytest.fixture
def critical():
    return from_pmf({0: 0.5, 2: 0.5})
