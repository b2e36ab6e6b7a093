"""From raw samples to grid densities."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .bayes_space import Density
from .copula import MarginalTransform
from .measure_grid import GridMeasure, uniform_axis

DEFAULT_PSEUDOCOUNT = 0.5


class SampleMatrix:
    """``n x d`` matrix of finite observations, ``n >= 2``."""

    def __init__(self, values, names=None):
        if isinstance(values, SampleMatrix):
            names = names or values.names
            values = values.values
        arr = np.array(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("samples must be a 2-d array (observations x variables)")
        if arr.shape[0] < 2:
            raise ValueError(f"need at least 2 observations, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples contain missing or non-finite values")
        if names is None:
            names = [f"x{k + 1}" for k in range(arr.shape[1])]
        if len(names) != arr.shape[1]:
            raise ValueError(f"{len(names)} names for {arr.shape[1]} columns")
        arr.flags.writeable = False
        self.values = arr
        self.names = list(names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def read_csv(path) -> SampleMatrix:
    """Read a header-plus-rows CSV of real numbers."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    try:
        data = [[float(c) for c in r] for r in body]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if any(len(r) != len(header) for r in data):
        raise ValueError(f"{path}: ragged rows (header has {len(header)} columns)")
    return SampleMatrix(np.array(data).reshape(len(data), len(header)), [h.strip() for h in header])


def cell_edges(points: np.ndarray) -> np.ndarray:
    """Cell boundaries: midpoints between nodes, outer cells mirrored."""
    mids = 0.5 * (points[1:] + points[:-1])
    lo = points[0] - (mids[0] - points[0])
    hi = points[-1] + (points[-1] - mids[-1])
    return np.concatenate([[lo], mids, [hi]])


def histogram_density(
    s, m: GridMeasure, pseudocount: float = DEFAULT_PSEUDOCOUNT, bounds=None
) -> Density:
    """Cell counts plus ``pseudocount``, divided by the cell's reference mass.

    Cells are bounded by midpoints between grid nodes.  Samples outside the
    outer cell edges (or ``bounds`` when given, applied to every axis) are
    rejected.
    """
    s = SampleMatrix(s)
    if s.d != m.d:
        raise ValueError(f"sample has {s.d} columns, grid has {m.d} axes")
    if pseudocount < 0:
        raise ValueError("pseudocount must be non-negative")
    idx = []
    for k, ax in enumerate(m.axes):
        edges = cell_edges(ax.points)
        if bounds is not None:
            edges[0], edges[-1] = bounds
        col = s.values[:, k]
        slack = 1e-12 * (edges[-1] - edges[0])
        if np.any(col < edges[0] - slack) or np.any(col > edges[-1] + slack):
            raise ValueError(
                f"axis {ax.name!r}: samples outside the grid cells [{edges[0]}, {edges[-1]}]"
            )
        idx.append(np.clip(np.searchsorted(edges[1:-1], col, side="right"), 0, ax.n - 1))
    counts = np.zeros(m.shape)
    np.add.at(counts, tuple(idx), 1.0)
    counts += pseudocount
    if np.any(counts <= 0):
        raise ValueError("empty cells with pseudocount 0: density would not be strictly positive")
    return Density(m, counts / m.weights())


def histogram_grid(s, bins) -> GridMeasure:
    """Uniform midpoint grid spanning the sample bounding box."""
    s = SampleMatrix(s)
    bins = [bins] * s.d if np.isscalar(bins) else list(bins)
    axes = []
    for k, b in enumerate(bins):
        col = s.values[:, k]
        lo, hi = float(col.min()), float(col.max())
        if not lo < hi:
            raise ValueError(f"column {s.names[k]!r} is constant")
        axes.append(uniform_axis(int(b), lo, hi, name=s.names[k]))
    return GridMeasure(axes)


def pseudo_observations(s) -> SampleMatrix:
    """Column-wise average ranks divided by ``n + 1``."""
    s = SampleMatrix(s)
    u = rankdata(s.values, method="average", axis=0) / (s.n + 1)
    return SampleMatrix(u, s.names)


def empirical_marginal(column, name: str = "x") -> MarginalTransform:
    """Piecewise-linear empirical cdf through the sorted distinct values.

    Each distinct value maps to ``(r - 1/2) / n`` with ``r`` its average rank,
    which keeps the table inside ``[1/(2n), 1 - 1/(2n)]``.
    """
    col = np.asarray(column, dtype=float).ravel()
    n = col.size
    values, counts = np.unique(col, return_counts=True)
    if values.size < 2:
        raise ValueError(f"column {name!r} needs at least 2 distinct values")
    upper = np.cumsum(counts)
    avg_rank = upper - 0.5 * (counts - 1)
    eps = 1.0 / (2 * n)
    F = np.clip((avg_rank - 0.5) / n, eps, 1.0 - eps)
    return MarginalTransform(values, F, name=name)
