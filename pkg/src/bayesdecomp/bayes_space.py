"""Bayes-space algebra on a grid measure.

Densities are positive fields identified up to a positive factor.  The clr
map sends them isometrically onto zero-mean fields, where perturbation and
powering become addition and scalar multiplication.
"""

from __future__ import annotations

import numpy as np

from .measure_grid import GridMeasure, average_out, integrate_out

CLR_ZERO_SUM_RTOL = 1e-10
PROPORTIONAL_RTOL = 1e-9


def _field(values, m: GridMeasure) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != m.shape:
        try:
            arr = np.broadcast_to(arr, m.shape)
        except ValueError:
            raise ValueError(
                f"field of shape {arr.shape} does not match grid shape {m.shape}"
            ) from None
    arr = np.array(arr)
    arr.flags.writeable = False
    return arr


def _same_measure(a, b):
    if a.measure is not b.measure and a.measure != b.measure:
        raise ValueError("operands live on different grid measures")


class Density:
    """Strictly positive field on a grid, a representative of its ``=_B`` class."""

    def __init__(self, measure: GridMeasure, values):
        values = _field(values, measure)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("density values must be finite and strictly positive")
        self.measure = measure
        self.values = values

    @classmethod
    def from_log(cls, measure: GridMeasure, log_values) -> "Density":
        return cls(measure, np.exp(log_values))

    @property
    def log(self) -> np.ndarray:
        return np.log(self.values)

    def canonical(self) -> "Density":
        """The representative whose log has zero mean, ``exp(clr f)``."""
        return clr_inverse(clr(self))

    def proportional_to(self, other: "Density", rtol: float = PROPORTIONAL_RTOL) -> bool:
        _same_measure(self, other)
        # compared on the log scale, i.e. relative deviation of canonical representatives
        a, b = clr(self).values, clr(other).values
        scale = 1.0 + max(np.max(np.abs(a)), np.max(np.abs(b)))
        return bool(np.max(np.abs(a - b)) <= rtol * scale)

    def __repr__(self) -> str:
        return f"Density({self.measure!r})"


class ClrField:
    """Real field with zero weighted sum: the clr image of a density."""

    def __init__(self, measure: GridMeasure, values, check: bool = True):
        values = _field(values, measure)
        if check:
            total = integrate_out(values, measure, measure.full)
            bound = CLR_ZERO_SUM_RTOL * measure.total_mass * max(1.0, float(np.max(np.abs(values))))
            if abs(total) > bound:
                raise ValueError(f"clr field has weighted sum {total:.3e}, expected zero")
        self.measure = measure
        self.values = values

    def __add__(self, other: "ClrField") -> "ClrField":
        _same_measure(self, other)
        return ClrField(self.measure, self.values + other.values, check=False)

    def __sub__(self, other: "ClrField") -> "ClrField":
        _same_measure(self, other)
        return ClrField(self.measure, self.values - other.values, check=False)

    def __mul__(self, alpha: float) -> "ClrField":
        return ClrField(self.measure, alpha * self.values, check=False)

    __rmul__ = __mul__

    def __neg__(self) -> "ClrField":
        return ClrField(self.measure, -self.values, check=False)

    def dot(self, other: "ClrField") -> float:
        """L2(lambda) inner product."""
        _same_measure(self, other)
        return l2_inner(self.values, other.values, self.measure)

    def norm_sq(self) -> float:
        return self.dot(self)

    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_sq(), 0.0)))

    def __repr__(self) -> str:
        return f"ClrField({self.measure!r})"


def l2_inner(a, b, m: GridMeasure) -> float:
    """Weighted sum of ``a * b``; accepts arrays broadcastable to the grid."""
    return integrate_out(np.broadcast_to(np.asarray(a) * np.asarray(b), m.shape), m, m.full)


def centre(values, m: GridMeasure) -> np.ndarray:
    """Subtract the lambda-mean of a field."""
    values = np.asarray(values, dtype=float)
    return values - average_out(values, m, m.full, keepdims=False)


def perturb(f: Density, g: Density) -> Density:
    """Perturbation: pointwise product."""
    _same_measure(f, g)
    return Density(f.measure, f.values * g.values)


def power(alpha: float, f: Density) -> Density:
    """Powering: pointwise ``f ** alpha``."""
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return Density(f.measure, f.values**alpha)


def perturb_inv(f: Density, g: Density) -> Density:
    """Perturbation-subtraction ``f (-) g``."""
    return perturb(f, power(-1.0, g))


def clr(f: Density) -> ClrField:
    """Centred log-ratio: ``ln f`` minus its lambda-mean."""
    return ClrField(f.measure, centre(f.log, f.measure), check=False)


def clr_inverse(z: ClrField) -> Density:
    """Exponentiate a zero-mean field; the canonical representative of its class."""
    m = z.measure
    total = integrate_out(z.values, m, m.full)
    bound = CLR_ZERO_SUM_RTOL * m.total_mass * max(1.0, float(np.max(np.abs(z.values))))
    if abs(total) > bound:
        raise ValueError(f"clr field has weighted sum {total:.3e}, expected zero")
    return Density(m, np.exp(z.values))


def inner_product(f: Density, g: Density) -> float:
    """Bayes-space scalar product via the clr isometry."""
    _same_measure(f, g)
    return clr(f).dot(clr(g))


def inner_product_direct(f: Density, g: Density) -> float:
    """Scalar product from the double integral of log-ratios.

    Test oracle only: cost and memory are quadratic in the grid size.
    """
    _same_measure(f, g)
    m = f.measure
    w = m.weights().ravel()
    lf = f.log.ravel()
    lg = g.log.ravel()
    total = 0.0
    block = 512
    for start in range(0, w.size, block):
        sl = slice(start, start + block)
        rf = lf[sl, None] - lf[None, :]
        rg = lg[sl, None] - lg[None, :]
        total += float(w[sl] @ (rf * rg) @ w)
    return total / (2.0 * m.total_mass)


def norm(f: Density) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def distance(f: Density, g: Density) -> float:
    return norm(perturb_inv(f, g))
