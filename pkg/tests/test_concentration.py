import math

import numpy as np
import pytest

from banditstop.concentration import bernstein_radius, dkw_radius, hoeffding_radius, samples_for_radius


def test_hoeffding_values_and_scaling():
    assert hoeffding_radius(200, 1.0, 0.05) == pytest.approx(0.09603, abs=5e-6)
    assert hoeffding_radius(800, 1.0, 0.05) == pytest.approx(hoeffding_radius(200, 1.0, 0.05) / 2, rel=1e-15)
    assert hoeffding_radius(200, 2.0, 0.05) == pytest.approx(2 * hoeffding_radius(200, 1.0, 0.05), rel=1e-15)


def test_dkw_values():
    assert dkw_radius(4000, 0.01) == pytest.approx(0.02574, abs=1e-5)
    assert dkw_radius(1, 2 / math.e**2) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n,delta", [(10, 2.0), (10, 0.0), (10, 1.0), (0, 0.5), (10, -0.1)])
def test_invalid_arguments(n, delta):
    with pytest.raises(ValueError):
        dkw_radius(n, delta)
    with pytest.raises(ValueError):
        hoeffding_radius(n, 1.0, delta)
    with pytest.raises(ValueError):
        bernstein_radius(n, 0.1, 1.0, delta)


def test_bernstein_zero_variance_branch():
    # with no variance the quadratic leaves eps = 2 c ln(2/delta) / (3n)
    delta = 2 / math.e**100
    assert bernstein_radius(100, 0.0, 1.0, delta) == pytest.approx(2 / 3, rel=1e-12)


def test_bernstein_monotone():
    r = [bernstein_radius(n, 0.1, 1.0, 0.01) for n in (10, 100, 1000)]
    assert r[0] > r[1] > r[2] > 0
    v = [bernstein_radius(100, s, 1.0, 0.01) for s in (0.0, 0.05, 0.25)]
    assert v[0] < v[1] < v[2]


def test_radii_shrink_with_n_and_grow_as_delta_drops():
    for f in (lambda n, d: hoeffding_radius(n, 1.0, d), dkw_radius):
        assert f(10, 0.1) > f(20, 0.1) > 0
        assert f(10, 0.01) > f(10, 0.1)


def test_samples_for_radius_inverts_hoeffding():
    n = samples_for_radius(1.0, 0.05, 0.01)
    assert hoeffding_radius(n, 1.0, 0.01) <= 0.05 < hoeffding_radius(n - 1, 1.0, 0.01)


def test_hoeffding_coverage_on_coins():
    rng = np.random.default_rng(2024)
    means = rng.binomial(500, 0.5, size=2000) / 500
    miss = np.mean(np.abs(means - 0.5) > hoeffding_radius(500, 1.0, 0.05))
    assert miss <= 0.05
