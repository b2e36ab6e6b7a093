"""Copula densities on the unit cube and the two-step Sklar pipeline.

The copula density ``c`` is decomposed on ``(0, 1)^d`` under Lebesgue
measure; the decomposition of ``c o F`` with respect to the product of the
marginal laws follows by composing every component with the marginal cdfs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .bayes_space import ClrField, Density, centre, clr
from .decomposition import Decomposition, decompose
from .measure_grid import Axis, GridMeasure, IndexSet, as_index_set, uniform_axis

# Acklam's rational approximation to the normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_lower(p: np.ndarray) -> np.ndarray:
    """Initial quantile for ``0 < p <= 0.5``."""
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = num / den
    return x


def normal_quantile(p):
    """Standard normal quantile function.

    Rational initial guess refined by one Halley step on ``erfc``.  Values
    above one half are mapped through ``-Q(1 - p)`` so that symmetric
    arguments give exactly antisymmetric results.

    Parameters
    ----------
    p : float or array_like
        Probabilities strictly inside ``(0, 1)``.

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("normal_quantile needs 0 < p < 1")
    flat = arr.ravel()
    upper = flat > 0.5
    q = np.where(upper, 1.0 - flat, flat)
    x = _acklam_lower(q)
    e = 0.5 * erfc(-x / np.sqrt(2.0)) - q
    u = e * np.sqrt(2.0 * np.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x[q == 0.5] = 0.0
    x = np.where(upper, -x, x).reshape(arr.shape)
    return float(x) if x.ndim == 0 else x


def normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / np.sqrt(2.0))


class CorrelationMatrix:
    """Symmetric positive-definite matrix with unit diagonal."""

    def __init__(self, entries):
        r = np.array(entries, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(r, r.T, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(r), 1.0, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix is not positive definite") from None
        r.flags.writeable = False
        self.entries = r

    @classmethod
    def exchangeable(cls, d: int, rho: float) -> "CorrelationMatrix":
        return cls(np.full((d, d), rho) + (1.0 - rho) * np.eye(d))

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationMatrix":
        try:
            d, rho = int(data["d"]), data["rho"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed correlation matrix: {exc}") from exc
        out = cls(rho)
        if out.d != d:
            raise ValueError(f"declared d={d} but matrix is {out.d}x{out.d}")
        return out

    def to_dict(self) -> dict:
        return {"d": self.d, "rho": self.entries.tolist()}

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def A(self) -> np.ndarray:
        """``inv(Sigma) - I``, the quadratic form of the log copula density."""
        return np.linalg.inv(self.entries) - np.eye(self.d)


def _require_interior(m: GridMeasure):
    for ax in m.axes:
        if ax.points[0] <= 0.0 or ax.points[-1] >= 1.0:
            raise ValueError(f"axis {ax.name!r} must lie strictly inside (0, 1)")


def copula_grid(d: int, n: int) -> GridMeasure:
    """Symmetric midpoint grid on ``(0, 1)^d`` with Lebesgue weights."""
    return GridMeasure(uniform_axis(n, 0.0, 1.0, name=f"u{i + 1}") for i in range(d))


def gaussian_copula_log(sigma: CorrelationMatrix, m: GridMeasure) -> np.ndarray:
    """``ln c`` of the Gaussian copula on the grid."""
    if sigma.d != m.d:
        raise ValueError(f"sigma is {sigma.d}-dimensional, grid is {m.d}-dimensional")
    _require_interior(m)
    A = sigma.A
    xs = [normal_quantile(u) for u in m.mesh()]
    quad = np.zeros(m.shape)
    for i in range(m.d):
        quad = quad + A[i, i] * xs[i] ** 2
        for j in range(i + 1, m.d):
            quad = quad + 2.0 * A[i, j] * xs[i] * xs[j]
    _, logdet = np.linalg.slogdet(sigma.entries)
    return -0.5 * logdet - 0.5 * quad


def gaussian_copula_density(sigma: CorrelationMatrix, m: GridMeasure) -> Density:
    """Gaussian copula density ``det(Sigma)^{-1/2} exp(-x'Ax/2)``, ``x = Q(u)``."""
    return Density.from_log(m, gaussian_copula_log(sigma, m))


def gaussian_copula_clr_analytic(sigma: CorrelationMatrix, I, points) -> np.ndarray:
    """Closed-form clr component of the Gaussian copula under Lebesgue measure.

    Parameters
    ----------
    sigma : CorrelationMatrix
    I : IndexSet or iterable of 1-based indices
    points : array_like, shape (k, |I|) or (k,) when ``|I| == 1``
        Evaluation points in the open unit cube.
    """
    I = as_index_set(I)
    if not I.bits or max(I.indices) > sigma.d:
        raise ValueError(f"{I!r} is not a non-empty subset of {{1..{sigma.d}}}")
    u = np.asarray(points, dtype=float)
    if u.ndim == 1 and len(I) == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != len(I):
        raise ValueError(f"points must have shape (k, {len(I)})")
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("points must lie strictly inside (0, 1)")
    if len(I) >= 3:
        return np.zeros(u.shape[0])
    A = sigma.A
    x = normal_quantile(u)
    ax = I.axes
    if len(I) == 1:
        a = A[ax[0], ax[0]]
        return -0.5 * (a * x[:, 0] ** 2 - a)
    return -A[ax[0], ax[1]] * x[:, 0] * x[:, 1]


def gaussian_copula_clr_full(sigma: CorrelationMatrix, points) -> np.ndarray:
    """Closed-form ``clr(c)(u) = -x'Ax/2 + tr(A)/2`` under Lebesgue measure."""
    u = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("points must lie strictly inside (0, 1)")
    A = sigma.A
    x = normal_quantile(u)
    return -0.5 * np.einsum("ki,ij,kj->k", x, A, x) + 0.5 * np.trace(A)


def beta2_log(alpha0: float, alpha1: float, alpha2: float, m: GridMeasure) -> np.ndarray:
    """Unnormalized ``ln f`` of the three-parameter bivariate beta density."""
    for name, a in (("alpha0", alpha0), ("alpha1", alpha1), ("alpha2", alpha2)):
        if not a > 0:
            raise ValueError(f"{name} must be positive, got {a}")
    if m.d != 2:
        raise ValueError("the bivariate beta family needs a 2-d grid")
    _require_interior(m)
    x1, x2 = m.mesh()
    s = alpha0 + alpha1 + alpha2
    return (
        (alpha1 - 1) * np.log(x1)
        + (alpha0 + alpha2 - 1) * np.log1p(-x1)
        + (alpha2 - 1) * np.log(x2)
        + (alpha0 + alpha1 - 1) * np.log1p(-x2)
        - s * np.log1p(-x1 * x2)
    )


def beta2_density(alpha0: float, alpha1: float, alpha2: float, m: GridMeasure) -> Density:
    """Bivariate beta density; the normalizing constant is dropped."""
    return Density.from_log(m, beta2_log(alpha0, alpha1, alpha2, m))


class MarginalTransform:
    """Monotone piecewise-linear cdf given by breakpoints ``(x_k, F(x_k))``.

    Evaluation outside the breakpoint range is an error; there is no
    extrapolation.
    """

    def __init__(self, x, F, name: str = "x"):
        x = np.array(x, dtype=float)
        F = np.array(F, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or x.size < 2:
            raise ValueError("marginal table needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(F) <= 0):
            raise ValueError("marginal table must be strictly increasing in both columns")
        if F[0] <= 0 or F[-1] >= 1:
            raise ValueError("marginal cdf values must lie strictly inside (0, 1)")
        x.flags.writeable = False
        F.flags.writeable = False
        self.x, self.F, self.name = x, F, name

    @classmethod
    def identity(cls, lo: float, hi: float, name: str = "u") -> "MarginalTransform":
        return cls([lo, hi], [lo, hi], name=name)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < self.x[0]) | (x > self.x[-1])):
            raise ValueError(
                f"marginal {self.name!r}: points outside [{self.x[0]}, {self.x[-1]}]"
            )
        return np.interp(x, self.x, self.F)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < self.F[0]) | (u > self.F[-1])):
            raise ValueError(
                f"marginal {self.name!r}: probabilities outside [{self.F[0]}, {self.F[-1]}]"
            )
        return np.interp(u, self.F, self.x)


def pushforward_measure(m_u: GridMeasure, marginals) -> GridMeasure:
    """Grid on the data scale: nodes ``F_i^{-1}(u)``, weights unchanged.

    With probability weights on ``m_u`` this represents the product of the
    marginal laws.
    """
    marginals = list(marginals)
    if len(marginals) != m_u.d:
        raise ValueError(f"need {m_u.d} marginals, got {len(marginals)}")
    axes = [
        Axis(F.name, F.quantile(ax.points), ax.weights)
        for ax, F in zip(m_u.axes, marginals)
    ]
    return GridMeasure(axes)


def _interp_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Linear interpolation weights from ``nodes`` to ``targets``."""
    # round trips F(F^-1(u)) may land an ulp outside the node range
    slack = 1e-12 * (nodes[-1] - nodes[0])
    outside = (targets < nodes[0] - slack) | (targets > nodes[-1] + slack)
    if np.any(outside):
        raise ValueError(
            f"image points {targets[outside][:3].tolist()} fall outside the interpolable range "
            f"[{nodes[0]}, {nodes[-1]}] of the copula grid"
        )
    targets = np.clip(targets, nodes[0], nodes[-1])
    k = np.clip(np.searchsorted(nodes, targets, side="right") - 1, 0, nodes.size - 2)
    t = (targets - nodes[k]) / (nodes[k + 1] - nodes[k])
    W = np.zeros((targets.size, nodes.size))
    rows = np.arange(targets.size)
    W[rows, k] = 1.0 - t
    W[rows, k + 1] += t
    return W


def _compose_field(values: np.ndarray, m_u: GridMeasure, images: list[np.ndarray]) -> np.ndarray:
    """Multilinear interpolation of a (possibly compact) field at a tensor grid."""
    out = np.asarray(values, dtype=float)
    for k, (ax, u) in enumerate(zip(m_u.axes, images)):
        if out.shape[k] == 1:
            continue
        W = _interp_matrix(ax.points, u)
        out = np.moveaxis(np.tensordot(W, out, axes=([1], [k])), 0, k)
    return out


def _images(marginals, m_x: GridMeasure) -> list[np.ndarray]:
    marginals = list(marginals)
    if len(marginals) != m_x.d:
        raise ValueError(f"need {m_x.d} marginals, got {len(marginals)}")
    return [F.cdf(ax.points) for F, ax in zip(marginals, m_x.axes)]


def sklar_compose(c: Density, marginals, m_x: GridMeasure) -> Density:
    """Density ``c(F_1(x_1), ..., F_d(x_d))`` on the data-scale grid ``m_x``.

    ``ln c`` is interpolated multilinearly between copula grid nodes.
    """
    if c.measure.d != m_x.d:
        raise ValueError("copula and data grids differ in dimension")
    images = _images(marginals, m_x)
    return Density.from_log(m_x, _compose_field(c.log, c.measure, images))


@dataclass
class CopulaResult:
    """Step 1 decomposition on the cube plus its components composed with ``F``."""

    copula: Density
    decomposition: Decomposition
    marginals: list
    composed_density: Density
    composed: dict[IndexSet, ClrField]

    @property
    def measure(self) -> GridMeasure:
        return self.composed_density.measure

    def composed_reconstruction_residual(self) -> float:
        """Max gap between the composed-component sum and ``clr(c o F)``."""
        target = clr(self.composed_density).values
        acc = np.zeros(self.measure.shape)
        for z in self.composed.values():
            acc = acc + z.values
        return float(np.max(np.abs(acc - target)) / (1.0 + np.max(np.abs(target))))


def copula_pipeline(
    source,
    marginals=None,
    m_x: GridMeasure | None = None,
    bins: int = 16,
    pseudocount: float = 0.5,
) -> CopulaResult:
    """Two-step decomposition of a joint law through its copula.

    Parameters
    ----------
    source : Density or array_like
        A copula density on the unit cube, or an ``(n, d)`` sample.  A sample
        is reduced to pseudo-observations and binned on a ``bins``-per-axis
        midpoint grid.
    marginals : list of MarginalTransform, optional
        Defaults to the empirical marginals of the sample; required when
        ``source`` is a density.
    m_x : GridMeasure, optional
        Data-scale grid.  Defaults to the push-forward of the copula grid.
    """
    from .ingest import SampleMatrix, empirical_marginal, histogram_density, pseudo_observations

    if isinstance(source, Density):
        c = source
        if marginals is None:
            raise ValueError("marginals are required when a copula density is given")
    else:
        sample = SampleMatrix(source)
        u = pseudo_observations(sample)
        c = histogram_density(u, copula_grid(sample.d, bins), pseudocount=pseudocount, bounds=(0.0, 1.0))
        if marginals is None:
            marginals = [
                empirical_marginal(sample.values[:, k], name=sample.names[k])
                for k in range(sample.d)
            ]
    marginals = list(marginals)
    dec = decompose(c)
    if m_x is None:
        m_x = pushforward_measure(c.measure, marginals)
    images = _images(marginals, m_x)
    composed_density = Density.from_log(m_x, _compose_field(c.log, c.measure, images))
    composed = {}
    for I in dec.components:
        vals = _compose_field(dec._compact[I.bits], c.measure, images)
        composed[I] = ClrField(m_x, centre(np.broadcast_to(vals, m_x.shape), m_x), check=False)
    return CopulaResult(c, dec, marginals, composed_density, composed)
