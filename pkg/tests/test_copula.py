import math

import mpmath
import numpy as np
import pytest
from scipy.stats import norm as scipy_norm

from bayesdecomp.bayes_space import Density, clr
from bayesdecomp.copula import (
    CorrelationMatrix,
    MarginalTransform,
    beta2_density,
    beta2_log,
    copula_grid,
    copula_pipeline,
    gaussian_copula_clr_analytic,
    gaussian_copula_clr_full,
    gaussian_copula_density,
    normal_quantile,
    pushforward_measure,
    sklar_compose,
)
from bayesdecomp.decomposition import decompose
from bayesdecomp.measure_grid import Axis, GridMeasure, IndexSet, uniform_axis

PHI_1 = 0.8413447460685429  # float(mpmath.ncdf(1))


def mp_quantile(p):
    mpmath.mp.dps = 50
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def test_normal_quantile_examples():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(PHI_1) == pytest.approx(1.0, abs=1e-9)
    assert float(mpmath.ncdf(1)) == PHI_1


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_normal_quantile_rejects(p):
    with pytest.raises(ValueError):
        normal_quantile(p)


def test_normal_quantile_against_mpmath():
    ps = np.concatenate([
        np.logspace(-12, -1, 40),
        np.linspace(0.01, 0.99, 99),
        1 - np.logspace(-12, -1, 40),
        [0.02425, 0.02425 * (1 + 1e-12), 0.97575],
    ])
    ours = normal_quantile(ps)
    ref = np.array([mp_quantile(p) for p in ps])
    assert np.max(np.abs(ours - ref)) <= 1e-9


def test_normal_quantile_antisymmetry():
    ps = np.concatenate([(np.arange(256) + 0.5) / 256, np.linspace(0.001, 0.499, 200)])
    np.testing.assert_allclose(normal_quantile(1 - ps), -normal_quantile(ps), atol=1e-12)
    u = uniform_axis(64, 0, 1).points
    x = normal_quantile(u)
    np.testing.assert_array_equal(x, -x[::-1])


def test_correlation_matrix_validation():
    with pytest.raises(ValueError):
        CorrelationMatrix([[1, 0.5], [0.4, 1]])
    with pytest.raises(ValueError):
        CorrelationMatrix([[2, 0], [0, 1]])
    with pytest.raises(ValueError):
        CorrelationMatrix([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        CorrelationMatrix.exchangeable(3, -0.6)
    s = CorrelationMatrix.from_dict({"d": 2, "rho": [[1, 0.6], [0.6, 1]]})
    np.testing.assert_allclose(s.A, [[0.5625, -0.9375], [-0.9375, 0.5625]], atol=1e-14)
    with pytest.raises(ValueError):
        CorrelationMatrix.from_dict({"d": 3, "rho": [[1, 0.6], [0.6, 1]]})


def test_gaussian_copula_identity_is_constant():
    f = gaussian_copula_density(CorrelationMatrix(np.eye(3)), copula_grid(3, 8))
    np.testing.assert_array_equal(f.values, 1.0)


def test_gaussian_copula_value_at_centre():
    m = GridMeasure([Axis("u1", [0.25, 0.5, 0.75], [1, 1, 1]), Axis("u2", [0.25, 0.5, 0.75], [1, 1, 1])])
    f = gaussian_copula_density(CorrelationMatrix.exchangeable(2, 0.5), m)
    assert f.values[1, 1] == pytest.approx(1 / math.sqrt(0.75), rel=1e-14)
    assert f.values[1, 1] == pytest.approx(1.1547005383792515, rel=1e-14)


def test_gaussian_copula_matches_scipy_ratio():
    # c(u) = phi_Sigma(x) / prod phi(x_i), evaluated independently
    from scipy.stats import multivariate_normal

    sigma = CorrelationMatrix([[1, 0.3, -0.2], [0.3, 1, 0.5], [-0.2, 0.5, 1]])
    m = copula_grid(3, 5)
    f = gaussian_copula_density(sigma, m)
    u = np.stack(np.meshgrid(*(ax.points for ax in m.axes), indexing="ij"), -1).reshape(-1, 3)
    x = scipy_norm.ppf(u)
    ref = multivariate_normal(np.zeros(3), sigma.entries).pdf(x) / np.prod(scipy_norm.pdf(x), axis=1)
    np.testing.assert_allclose(f.values.ravel(), ref, rtol=1e-10)


def test_gaussian_copula_exchangeable_symmetry():
    f = gaussian_copula_density(CorrelationMatrix.exchangeable(2, 0.7), copula_grid(2, 9))
    np.testing.assert_allclose(f.values, f.values.T, rtol=1e-14)


def test_gaussian_copula_rejects_boundary():
    bad = GridMeasure([Axis("u", [0.0, 0.5], [1, 1]), Axis("v", [0.2, 0.5], [1, 1])])
    with pytest.raises(ValueError):
        gaussian_copula_density(CorrelationMatrix(np.eye(2)), bad)


def test_analytic_clr_examples():
    sigma = CorrelationMatrix.exchangeable(2, 0.6)
    assert gaussian_copula_clr_analytic(sigma, IndexSet.of(1), [0.5])[0] == pytest.approx(0.28125, abs=1e-14)
    pair = gaussian_copula_clr_analytic(sigma, IndexSet.of(1, 2), [[PHI_1, PHI_1]])[0]
    assert pair == pytest.approx(0.9375, abs=1e-9)
    s3 = CorrelationMatrix.exchangeable(3, 0.4)
    assert np.all(gaussian_copula_clr_analytic(s3, IndexSet.of(1, 2, 3), [[0.2, 0.5, 0.9]]) == 0.0)
    with pytest.raises(ValueError):
        gaussian_copula_clr_analytic(sigma, IndexSet.of(1), [1.0])


def test_analytic_full_clr_is_sum_of_parts():
    sigma = CorrelationMatrix([[1, 0.3, -0.2], [0.3, 1, 0.5], [-0.2, 0.5, 1]])
    u = np.array([[0.1, 0.4, 0.8], [0.6, 0.3, 0.05]])
    total = sum(gaussian_copula_clr_analytic(sigma, IndexSet.of(i), u[:, i - 1]) for i in (1, 2, 3))
    for i, j in ((1, 2), (1, 3), (2, 3)):
        total = total + gaussian_copula_clr_analytic(sigma, IndexSet.of(i, j), u[:, [i - 1, j - 1]])
    np.testing.assert_allclose(gaussian_copula_clr_full(sigma, u), total, atol=1e-12)


def test_beta2_value():
    m = GridMeasure([Axis("x1", [0.25, 0.5, 0.75], [1, 1, 1]), Axis("x2", [0.25, 0.5, 0.75], [1, 1, 1])])
    f = beta2_density(1, 1, 1, m)
    # x1^0 (1-x1)^1 x2^0 (1-x2)^1 (1 - x1 x2)^-3 at (1/2, 1/2)
    assert f.values[1, 1] == pytest.approx(0.25 * 0.75**-3, rel=1e-14)


def test_beta2_symmetry():
    m = copula_grid(2, 11)
    a = beta2_log(0.7, 1.3, 2.1, m)
    b = beta2_log(0.7, 2.1, 1.3, m)
    np.testing.assert_allclose(a, b.T, atol=1e-13)


@pytest.mark.parametrize("alpha", [(0, 1, 1), (1, -1, 1), (1, 1, np.nan)])
def test_beta2_rejects(alpha):
    with pytest.raises(ValueError):
        beta2_density(*alpha, copula_grid(2, 4))


def test_beta2_interaction_decreasing():
    m = copula_grid(2, 32)
    norms = [decompose(beta2_density(t, t, t, m)).norms_sq[IndexSet.of(1, 2)] for t in (1, 0.1, 0.01)]
    assert norms[0] > norms[1] > norms[2]


def _ex31_margin_term(x):
    return (1 - x) * np.log1p(-x) / x


def test_beta2_margin_reading():
    """The closed-form margin matches when the ratio term uses the margin's own variable."""
    a0, a1, a2 = 0.8, 1.5, 2.0
    s = a0 + a1 + a2
    m = copula_grid(2, 256)
    dec = decompose(beta2_density(a0, a1, a2, m))
    x1, x2 = (ax.points for ax in m.axes)
    w = m.axes[0].weights

    def centred(v):
        return v - np.sum(w * v)

    numeric_2 = dec[IndexSet.of(2)].values[0, :]
    own = centred((a2 - 1) * np.log(x2) + (a0 + a1 - 1) * np.log1p(-x2) + s * _ex31_margin_term(x2))
    # literal reading: the ratio term depends on x1, hence is constant in x2
    literal = centred((a2 - 1) * np.log(x2) + (a0 + a1 - 1) * np.log1p(-x2))
    err_own = np.max(np.abs(numeric_2 - own))
    err_literal = np.max(np.abs(numeric_2 - literal))
    assert err_own < 1e-2
    assert err_literal > 10 * err_own

    numeric_1 = dec[IndexSet.of(1)].values[:, 0]
    own_1 = centred((a1 - 1) * np.log(x1) + (a0 + a2 - 1) * np.log1p(-x1) + s * _ex31_margin_term(x1))
    assert np.max(np.abs(numeric_1 - own_1)) < 1e-2


def test_beta2_interaction_closed_form():
    s = 3.0
    m = copula_grid(2, 256)
    dec = decompose(beta2_density(1, 1, 1, m))
    x1, x2 = m.mesh()
    closed = -s * (_ex31_margin_term(x1) + _ex31_margin_term(x2)) - s * np.log1p(-x1 * x2)
    closed = closed - np.sum(closed * m.weights())
    err = np.max(np.abs(dec[IndexSet.of(1, 2)].values - closed))
    assert err < 0.05 * np.max(np.abs(closed))


def test_marginal_transform():
    F = MarginalTransform([-3, -1, 0, 2, 5], [0.001, 0.2, 0.5, 0.7, 0.999])
    np.testing.assert_allclose(F.cdf([-3, -2, 0, 3.5]), [0.001, 0.1005, 0.5, 0.8495])
    np.testing.assert_allclose(F.quantile(F.cdf(F.x)), F.x, atol=1e-14)
    with pytest.raises(ValueError):
        F.cdf([6.0])
    with pytest.raises(ValueError):
        F.quantile([0.0005])
    with pytest.raises(ValueError):
        MarginalTransform([0, 1, 1], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        MarginalTransform([0, 1], [0.0, 0.5])


def _marginals():
    return [
        MarginalTransform([-3, -1, 0, 2, 5], [0.001, 0.2, 0.5, 0.7, 0.999], name="a"),
        MarginalTransform([0, 1, 4, 10], [0.002, 0.3, 0.9, 0.998], name="b"),
    ]


def test_sklar_constant_copula():
    mu = copula_grid(2, 8)
    m_x = GridMeasure([uniform_axis(5, -2, 4, "a"), uniform_axis(6, 0.5, 5, "b")])
    out = sklar_compose(Density(mu, np.full(mu.shape, 3.0)), _marginals(), m_x)
    np.testing.assert_allclose(out.values, 3.0, rtol=1e-14)


def test_sklar_identity_marginals():
    mu = copula_grid(2, 8)
    c = gaussian_copula_density(CorrelationMatrix.exchangeable(2, 0.5), mu)
    ident = [MarginalTransform.identity(ax.points[0], ax.points[-1]) for ax in mu.axes]
    out = sklar_compose(c, ident, mu)
    np.testing.assert_allclose(out.values, c.values, rtol=1e-14)


def test_sklar_outside_range():
    mu = copula_grid(2, 8)
    c = Density(mu, np.ones(mu.shape))
    wide = GridMeasure([uniform_axis(5, -2.9, 4.9, "a"), uniform_axis(6, 0.5, 9, "b")])
    with pytest.raises(ValueError, match="interpolable range"):
        sklar_compose(c, _marginals(), wide)


def test_sklar_norms_match():
    mu = copula_grid(2, 32)
    c = gaussian_copula_density(CorrelationMatrix.exchangeable(2, 0.5), mu)
    m_x = pushforward_measure(mu, _marginals())
    dec_x = decompose(sklar_compose(c, _marginals(), m_x))
    dec_u = decompose(c)
    for I in dec_u.components:
        assert dec_x.norms_sq[I] == pytest.approx(dec_u.norms_sq[I], rel=1e-9)


def test_pipeline_independence_copula():
    mu = copula_grid(2, 8)
    res = copula_pipeline(Density(mu, np.ones(mu.shape)), _marginals())
    for I, z in res.composed.items():
        np.testing.assert_allclose(z.values, 0.0, atol=1e-14)


def test_pipeline_gaussian_three_way_vanishes():
    mu = copula_grid(3, 12)
    c = gaussian_copula_density(CorrelationMatrix.exchangeable(3, 0.4), mu)
    marg = _marginals() + [MarginalTransform([0, 1], [0.01, 0.99], name="c")]
    res = copula_pipeline(c, marg)
    assert res.composed[IndexSet.of(1, 2, 3)].norm() <= 1e-9
    assert res.composed_reconstruction_residual() <= 1e-10


def test_pipeline_requires_marginals_for_density():
    mu = copula_grid(2, 4)
    with pytest.raises(ValueError):
        copula_pipeline(Density(mu, np.ones(mu.shape)))


def test_pipeline_from_sample():
    rng = np.random.default_rng(5)
    z = rng.multivariate_normal([0, 0], [[1, 0.6], [0.6, 1]], size=4000)
    x = np.column_stack([np.exp(z[:, 0]), z[:, 1] ** 3])
    res = copula_pipeline(x, bins=8)
    rep = res.decomposition
    shares = sum(rep.norms_sq.values()) / rep.total_norm_sq
    assert shares == pytest.approx(1.0, abs=1e-9)
    assert res.composed_reconstruction_residual() <= 1e-10
    assert rep.norms_sq[IndexSet.of(1, 2)] > 0.05
