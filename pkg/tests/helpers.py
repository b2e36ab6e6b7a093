"""Random grids and densities shared by the test modules."""

import numpy as np

from bayesdecomp.bayes_space import Density
from bayesdecomp.measure_grid import Axis, GridMeasure

# filled by test_acceptance, printed by the terminal-summary hook in conftest
ACCEPTANCE_LINES: list[str] = []


def random_measure(rng, sizes, probability=False):
    axes = []
    for k, n in enumerate(sizes):
        points = np.sort(rng.uniform(-2, 2, n)) + np.arange(n) * 1e-3
        weights = rng.uniform(0.2, 3.0, n)
        if probability:
            weights = weights / weights.sum()
        axes.append(Axis(f"x{k + 1}", points, weights))
    return GridMeasure(axes)


def random_density(rng, m, scale=1.0):
    return Density.from_log(m, scale * rng.normal(size=m.shape))


def separable_log(rng, m, scale=1.0):
    logf = np.zeros(m.shape)
    for k in range(m.d):
        shape = [1] * m.d
        shape[k] = -1
        logf = logf + scale * rng.normal(size=m.axes[k].n).reshape(shape)
    return logf


def random_separable(rng, m, scale=1.0):
    return Density.from_log(m, separable_log(rng, m, scale))
