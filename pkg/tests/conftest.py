import pytest

from orthounity.ball import ball_coefficients
from orthounity.exact import exact_coefficients


@pytest.fixture(scope="session")
def exact500():
    return exact_coefficients(500)


@pytest.fixture(scope="session")
def exact60(exact500):
    return exact500.truncated(60)


@pytest.fixture(scope="session")
def ball2000():
    return ball_coefficients(2000)


@pytest.fixture(scope="session")
def ball20000():
    return ball_coefficients(20000)
