"""Orthogonal decomposition of multivariate densities in Bayes spaces."""

from .bayes_space import (
    ClrField,
    Density,
    clr,
    clr_inverse,
    distance,
    inner_product,
    inner_product_direct,
    norm,
    perturb,
    perturb_inv,
    power,
)
from .copula import (
    CorrelationMatrix,
    MarginalTransform,
    beta2_density,
    copula_grid,
    copula_pipeline,
    gaussian_copula_clr_analytic,
    gaussian_copula_density,
    normal_quantile,
    pushforward_measure,
    sklar_compose,
)
from .decomposition import (
    Decomposition,
    decompose,
    geometric_margin,
    hoeffding_term,
    independence_part,
    interaction_mobius,
    interaction_recursive,
    project_P,
    pythagoras_report,
    yule_perturb_check,
)
from .ingest import SampleMatrix, empirical_marginal, histogram_density, pseudo_observations
from .measure_grid import (
    Axis,
    GridMeasure,
    IndexSet,
    integrate_out,
    probability_axis,
    subset_mass,
    uniform_axis,
)

__version__ = "0.1.0"
