import numpy as np
import pytest

from censtail import from_arrays, ingest, order


@pytest.fixture
def z1248():
    """z = 1, 2, 4, 8 without censoring."""
    return order(ingest([(1.0, 1), (2.0, 1), (4.0, 1), (8.0, 1)]))


@pytest.fixture
def z1248_mixed():
    """z = 1, 2, 4, 8 with the value 2 censored."""
    return order(ingest([(1.0, 1), (2.0, 0), (4.0, 1), (8.0, 1)]))


def random_censored(seed, n=200, gamma1=0.5, gamma2=1.0):
    """Pareto-type sample censored by an independent Pareto-type variable."""
    rng = np.random.default_rng(seed)
    x = rng.pareto(1 / gamma1, n) + 1.0
    c = rng.pareto(1 / gamma2, n) + 1.0
    return order(from_arrays(np.minimum(x, c), x <= c))
