import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesdecomp.bayes_space import (
    ClrField,
    Density,
    clr,
    clr_inverse,
    distance,
    inner_product,
    inner_product_direct,
    norm,
    perturb,
    power,
)
from bayesdecomp.measure_grid import Axis, GridMeasure, uniform_axis

from helpers import random_density, random_measure

E = math.e
UNIT2 = GridMeasure([Axis("x", [0, 1], [1, 1])])


def _pair(values):
    return Density(UNIT2, values)


def test_density_rejects_nonpositive():
    with pytest.raises(ValueError):
        _pair([1.0, 0.0])
    with pytest.raises(ValueError):
        _pair([1.0, np.inf])
    with pytest.raises(ValueError):
        _pair([1.0, 2.0, 3.0])


def test_perturb_examples():
    f = _pair([1.0, E])
    one = _pair([1.0, 1.0])
    np.testing.assert_array_equal(perturb(f, one).values, f.values)
    np.testing.assert_allclose(perturb(f, f).values, [1.0, E**2], rtol=1e-15)
    inv = perturb(f, power(-1, f))
    np.testing.assert_allclose(inv.values, 1.0, rtol=1e-15)


def test_power_examples():
    f = _pair([2.0, 4.0])
    np.testing.assert_array_equal(power(0, f).values, [1.0, 1.0])
    np.testing.assert_array_equal(power(1, f).values, f.values)
    np.testing.assert_array_equal(power(-1, f).values, [0.5, 0.25])
    with pytest.raises(ValueError):
        power(np.nan, f)


def test_measure_mismatch():
    other = GridMeasure([Axis("x", [0, 1], [1, 2])])
    with pytest.raises(ValueError):
        perturb(_pair([1, 2]), Density(other, [1, 2]))


def test_clr_examples():
    np.testing.assert_array_equal(clr(_pair([3.0, 3.0])).values, [0.0, 0.0])
    # ln = (0, 2), lambda-mean 1
    np.testing.assert_allclose(clr(_pair([1.0, E**2])).values, [-1.0, 1.0], atol=1e-15)


def test_clr_inverse_examples():
    np.testing.assert_array_equal(clr_inverse(ClrField(UNIT2, [0.0, 0.0])).values, [1.0, 1.0])
    np.testing.assert_allclose(clr_inverse(ClrField(UNIT2, [-1.0, 1.0])).values, [1 / E, E], rtol=1e-15)
    with pytest.raises(ValueError):
        clr_inverse(ClrField(UNIT2, [1.0, 1.0], check=False))
    with pytest.raises(ValueError):
        ClrField(UNIT2, [1.0, 0.5])


def test_clr_round_trip(rng):
    m = random_measure(rng, [4, 3])
    f = random_density(rng, m)
    z = clr(f)
    assert abs(np.sum(z.values * m.weights())) < 1e-12
    back = clr_inverse(z)
    assert back.proportional_to(f)
    np.testing.assert_allclose(clr(back).values, z.values, atol=1e-12)


def test_inner_product_examples():
    f = _pair([1.0, E**2])
    assert inner_product(f, f) == pytest.approx(2.0, abs=1e-14)
    # (1/4) * (0 + 4 + 4 + 0)
    assert inner_product_direct(f, f) == pytest.approx(2.0, abs=1e-14)
    assert norm(f) == pytest.approx(math.sqrt(2), abs=1e-14)
    const = _pair([5.0, 5.0])
    assert inner_product(const, f) == 0.0
    assert inner_product_direct(const, f) == 0.0
    assert norm(const) == 0.0
    assert distance(f, f) == 0.0


def test_isometry_random(rng):
    for _ in range(20):
        m = random_measure(rng, rng.integers(2, 6, size=rng.integers(1, 4)))
        f, g = random_density(rng, m), random_density(rng, m, scale=2.0)
        a, b = inner_product(f, g), inner_product_direct(f, g)
        assert abs(a - b) <= 1e-10 * (1 + abs(a))
        assert inner_product(f, g) == pytest.approx(inner_product(g, f), rel=1e-14)


def test_direct_blocks_match_small_case(rng):
    # grid larger than one block of the direct sum
    m = random_measure(rng, [30, 25])
    f, g = random_density(rng, m), random_density(rng, m)
    a, b = inner_product(f, g), inner_product_direct(f, g)
    assert abs(a - b) <= 1e-10 * (1 + abs(a))


def test_distance_definition(rng):
    m = random_measure(rng, [3, 4])
    f, g = random_density(rng, m), random_density(rng, m)
    assert distance(f, g) == pytest.approx(np.sqrt(clr(f).dot(clr(f)) - 2 * clr(f).dot(clr(g)) + clr(g).dot(clr(g))), rel=1e-10)


log_fields = st.lists(st.floats(-5, 5), min_size=6, max_size=6)
alphas = st.floats(-3, 3)


@settings(max_examples=60, deadline=None)
@given(log_fields, log_fields, log_fields, alphas)
def test_vector_space_laws(lf, lg, lh, alpha):
    m = GridMeasure([uniform_axis(2, 0, 1), Axis("y", [0, 1, 3], [0.5, 1, 2])])
    f = Density.from_log(m, np.reshape(lf, m.shape))
    g = Density.from_log(m, np.reshape(lg, m.shape))
    h = Density.from_log(m, np.reshape(lh, m.shape))
    tol = 1e-12 * (1 + max(map(abs, lf + lg + lh)))

    def close(a, b):
        np.testing.assert_allclose(clr(a).values, clr(b).values, atol=tol * (1 + abs(alpha)))

    close(perturb(f, g), perturb(g, f))
    close(perturb(perturb(f, g), h), perturb(f, perturb(g, h)))
    close(power(alpha, perturb(f, g)), perturb(power(alpha, f), power(alpha, g)))
    np.testing.assert_allclose(
        clr(perturb(power(alpha, f), g)).values,
        alpha * clr(f).values + clr(g).values,
        atol=tol * (1 + abs(alpha)),
    )
    fg, ff, gg = inner_product(f, g), inner_product(f, f), inner_product(g, g)
    assert fg**2 <= ff * gg + 1e-12 * (1 + ff * gg)
    assert abs(inner_product(f, g) - inner_product_direct(f, g)) <= 1e-10 * (1 + abs(fg))
