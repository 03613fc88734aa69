import math

import mpmath
import numpy as np
import pytest

from polyatest.errors import DomainError
from polyatest.special import (
    gaussian_cdf,
    gaussian_quantile,
    gaussian_quantile_array,
    posterior_null_probability,
)


def test_quantile_known_value():
    assert gaussian_quantile(0.75) == pytest.approx(0.674489750, abs=1e-9)
    assert gaussian_quantile(0.5) == 0.0


def test_quantile_against_mpmath():
    probs = np.concatenate([np.logspace(-15, -1, 60), np.linspace(0.01, 0.99, 99),
                            1 - np.logspace(-12, -1, 40)])
    got = gaussian_quantile_array(probs)
    mpmath.mp.dps = 40
    for p, x in zip(probs, got):
        ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
        assert abs(x - ref) < 1e-9, p


def test_quantile_symmetry():
    p = np.linspace(0.001, 0.499, 200)
    np.testing.assert_allclose(gaussian_quantile_array(p), -gaussian_quantile_array(1 - p), atol=1e-12)


def test_cdf_inverts_quantile():
    p = np.linspace(0.0005, 0.9995, 101)
    np.testing.assert_allclose(gaussian_cdf(gaussian_quantile_array(p)), p, atol=1e-13)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        gaussian_quantile(p)


def test_posterior_null_probability():
    assert posterior_null_probability(0.0) == 0.5
    assert posterior_null_probability(math.log(3.0)) == pytest.approx(0.75)
    assert 0.0 < posterior_null_probability(-800.0) < 1e-300
    assert posterior_null_probability(800.0) < 1.0
    grid = np.linspace(-30, 30, 601)
    assert np.all(np.diff(posterior_null_probability(grid)) > 0)
