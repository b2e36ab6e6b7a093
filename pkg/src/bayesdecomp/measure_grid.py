"""Tensor-product grids carrying a finite product reference measure.

The grid weights *are* the reference measure: a finite discrete measure
:math:`\\lambda = \\lambda_1 \\otimes \\cdots \\otimes \\lambda_d`.  Every
integral in the package is a weighted sum over such a grid.

Fields on a grid are stored as ``numpy`` arrays of shape
``(n_1, ..., n_d)`` in C order, so the flattened layout is row-major with
axis 1 varying slowest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 20


@dataclass(frozen=True)
class IndexSet:
    """A subset of ``{1, ..., d}`` stored as a bitmask (bit ``i-1`` for index ``i``)."""

    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("bitmask must be non-negative")

    @classmethod
    def of(cls, *indices: int) -> "IndexSet":
        bits = 0
        for i in indices:
            if i < 1:
                raise ValueError(f"indices are 1-based, got {i}")
            bits |= 1 << (i - 1)
        return cls(bits)

    @classmethod
    def full(cls, d: int) -> "IndexSet":
        return cls((1 << d) - 1)

    @property
    def indices(self) -> tuple[int, ...]:
        """Sorted 1-based indices."""
        return tuple(i + 1 for i in range(self.bits.bit_length()) if self.bits >> i & 1)

    @property
    def axes(self) -> tuple[int, ...]:
        """Sorted 0-based array axes."""
        return tuple(i - 1 for i in self.indices)

    @property
    def label(self) -> str:
        return "-".join(str(i) for i in self.indices)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i: int) -> bool:
        return i >= 1 and bool(self.bits >> (i - 1) & 1)

    def __or__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self.bits | other.bits)

    def __and__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self.bits & other.bits)

    def __sub__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self.bits & ~other.bits)

    def issubset(self, other: "IndexSet") -> bool:
        return self.bits & ~other.bits == 0

    def subsets(self, proper: bool = False) -> list["IndexSet"]:
        """All subsets, ordered by cardinality then bitmask."""
        out = []
        sub = self.bits
        while True:
            out.append(IndexSet(sub))
            if sub == 0:
                break
            sub = (sub - 1) & self.bits
        if proper:
            out = [s for s in out if s.bits != self.bits]
        return sorted(out, key=lambda s: (len(s), s.bits))

    def __repr__(self) -> str:
        return f"IndexSet({{{', '.join(map(str, self.indices))}}})"


def as_index_set(obj) -> IndexSet:
    """Coerce an :class:`IndexSet` or an iterable of 1-based indices."""
    if isinstance(obj, IndexSet):
        return obj
    if isinstance(obj, (int, np.integer)):
        return IndexSet.of(int(obj))
    return IndexSet.of(*obj)


def ordered_subsets(d: int, include_empty: bool = False) -> list[IndexSet]:
    """Subsets of ``{1..d}`` by increasing cardinality, then ascending bitmask."""
    subs = sorted(range(1 << d), key=lambda b: (bin(b).count("1"), b))
    return [IndexSet(b) for b in subs if include_empty or b]


@dataclass(frozen=True, eq=False)
class Axis:
    """One coordinate axis: nodes and strictly positive weights."""

    name: str
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if points.ndim != 1 or weights.shape != points.shape:
            raise ValueError(
                f"axis {self.name!r}: points and weights must be 1-d of equal length "
                f"(got {points.shape} and {weights.shape})"
            )
        if points.size < 2:
            raise ValueError(f"axis {self.name!r}: need at least 2 points")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(weights)):
            raise ValueError(f"axis {self.name!r}: non-finite points or weights")
        if np.any(np.diff(points) <= 0):
            raise ValueError(f"axis {self.name!r}: points must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError(f"axis {self.name!r}: weights must be strictly positive")
        points.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Axis):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.name, self.points.tobytes(), self.weights.tobytes()))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }


def uniform_axis(n: int, a: float, b: float, name: str = "x") -> Axis:
    """Midpoint-rule discretization of Lebesgue measure on ``[a, b]``.

    Examples
    --------
    >>> ax = uniform_axis(2, 0.0, 1.0)
    >>> ax.points.tolist(), ax.weights.tolist()
    ([0.25, 0.75], [0.5, 0.5])
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    h = (b - a) / n
    points = a + (np.arange(n) + 0.5) * h
    return Axis(name, points, np.full(n, h))


def probability_axis(points: Sequence[float], weights: Sequence[float], name: str = "x") -> Axis:
    """Axis whose weights are rescaled to total mass one."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or np.any(weights <= 0):
        raise ValueError("weights must be a 1-d array of strictly positive values")
    return Axis(name, points, weights / weights.sum())


class GridMeasure:
    """Finite product measure on a tensor-product grid.

    Parameters
    ----------
    axes : sequence of Axis
        One axis per dimension, ``1 <= d <= MAX_DIM``.
    """

    def __init__(self, axes: Iterable[Axis]):
        axes = tuple(axes)
        if not axes:
            raise ValueError("a grid needs at least one axis")
        if len(axes) > MAX_DIM:
            raise ValueError(f"dimension {len(axes)} exceeds the cap d <= {MAX_DIM}")
        self._axes = axes
        total = float(np.prod([ax.mass for ax in axes]))
        if not np.isfinite(total) or total <= 0:
            raise ValueError("total mass must be finite and positive")

    @property
    def axes(self) -> tuple[Axis, ...]:
        return self._axes

    @property
    def d(self) -> int:
        return len(self._axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self._axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def full(self) -> IndexSet:
        return IndexSet.full(self.d)

    @property
    def total_mass(self) -> float:
        return subset_mass(self, self.full)

    def weight_vector(self, axis: int) -> np.ndarray:
        """Weights of 0-based ``axis`` reshaped to broadcast against a field."""
        shape = [1] * self.d
        shape[axis] = -1
        return self._axes[axis].weights.reshape(shape)

    def weights(self) -> np.ndarray:
        """Full product weight array."""
        return reduce(np.multiply, (self.weight_vector(k) for k in range(self.d)))

    def mesh(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        return np.meshgrid(*(ax.points for ax in self._axes), indexing="ij", sparse=True)

    def check_subset(self, I: IndexSet) -> IndexSet:
        I = as_index_set(I)
        if not I.issubset(self.full):
            raise ValueError(f"{I!r} is not a subset of {{1..{self.d}}}")
        return I

    def sub_measure(self, I: IndexSet) -> "GridMeasure":
        I = self.check_subset(I)
        return GridMeasure(self._axes[k] for k in I.axes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridMeasure):
            return NotImplemented
        return self._axes == other._axes

    def __hash__(self):
        return hash(self._axes)

    def __repr__(self) -> str:
        return f"GridMeasure(d={self.d}, shape={self.shape}, total_mass={self.total_mass:g})"

    def to_dict(self) -> dict:
        return {"axes": [ax.to_dict() for ax in self._axes]}

    @classmethod
    def from_dict(cls, data: dict) -> "GridMeasure":
        try:
            axes = data["axes"]
            return cls(Axis(a["name"], a["points"], a["weights"]) for a in axes)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed grid: missing or invalid field {exc}") from exc


def subset_mass(m: GridMeasure, I: IndexSet) -> float:
    """Product of per-axis masses over ``I`` (1 for the empty set)."""
    I = m.check_subset(I)
    return float(np.prod([m.axes[k].mass for k in I.axes]))


def integrate_out(values, m: GridMeasure, J: IndexSet, keepdims: bool = False):
    """Weighted sum of ``values`` over the axes in ``J``.

    With ``keepdims=True`` the integrated axes are kept with length one, so the
    result broadcasts back onto the full grid.  ``J`` empty returns the input,
    ``J`` full returns a scalar (unless ``keepdims``).
    """
    J = m.check_subset(J)
    values = np.asarray(values, dtype=float)
    if values.ndim != m.d:
        raise ValueError(f"field has {values.ndim} dimensions, grid has {m.d}")
    out = values
    for k in J.axes:
        w = m.weight_vector(k)
        out = np.sum(out * w, axis=k, keepdims=True)
    if keepdims:
        return out
    if J.bits == m.full.bits:
        return float(out.reshape(()))
    return out.squeeze(axis=J.axes) if J.axes else out


def average_out(values, m: GridMeasure, J: IndexSet, keepdims: bool = True):
    """``integrate_out`` divided by the mass of the integrated axes."""
    J = m.check_subset(J)
    return integrate_out(values, m, J, keepdims=keepdims) / subset_mass(m, J)
