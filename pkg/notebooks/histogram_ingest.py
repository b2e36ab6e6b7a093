# %% [markdown]
# # From a sample to a decomposition
#
# A correlated sample is binned into a histogram density (with a small
# pseudocount so every cell is positive), then decomposed.  The same sample
# is also reduced to its empirical copula through ranks.

# %%
import numpy as np

from bayesdecomp import IndexSet, SampleMatrix, copula_pipeline, decompose
from bayesdecomp.ingest import histogram_density, histogram_grid

rng = np.random.default_rng(1)
z = rng.multivariate_normal([0, 0], [[1, 0.7], [0.7, 1]], size=5000)
sample = SampleMatrix(np.column_stack([np.exp(z[:, 0]), z[:, 1]]), ["lognormal", "normal"])

# %%
grid = histogram_grid(sample, 12)
dec = decompose(histogram_density(sample, grid))
share = dec.norms_sq[IndexSet.of(1, 2)] / dec.total_norm_sq
print(f"histogram: interaction share {share:.3f}")

# %% [markdown]
# Ranks remove the skew of the first column; what is left is dependence.

# %%
res = copula_pipeline(sample.values, bins=12)
d = res.decomposition
print(f"empirical copula: interaction share {d.norms_sq[IndexSet.of(1, 2)] / d.total_norm_sq:.3f}")
