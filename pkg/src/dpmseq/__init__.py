"""Fast sequential fitting of Dirichlet process mixture models.

Greedy (hard-allocation) and soft-allocation single-pass engines with
conjugate NIG/NIW components, exact-inference oracles (collapsed Gibbs,
tiny-N enumeration), random-ordering search, and a benchmark harness.
"""

from .core import (
    FitState, NIGParams, NIWParams,
    nig_log_predictive, nig_predictive, nig_weighted_update,
    niw_log_predictive, niw_predictive, niw_weighted_update,
    soft_urn_weights, truncated_urn_prior, urn_prior,
)
from .data import Dataset, ingest
from .sugs import SugsFit, pseudo_marginal, sugs_fit, sugs_step
from .vsugs import (
    VsugsFit, predictive_density, step_lower_bound, vsugs_allocate,
    vsugs_fit, vsugs_step,
)
from .oracle import (
    ExactPosterior, GibbsConfig, PosteriorSamples, collapsed_gibbs,
    enumerate_exact, gibbs_predictive,
)
from .ordering import (
    EngineSpec, OrderingSearchConfig, OrderingSearchResult, search_orderings,
)
from .bench import (
    ExperimentGrid, SyntheticSpec, density_error, gen_mixture,
    relative_error, run_grid, true_density,
)
from .genotype import concordance, three_class_fit

__all__ = [
    "FitState", "NIGParams", "NIWParams",
    "nig_log_predictive", "nig_predictive", "nig_weighted_update",
    "niw_log_predictive", "niw_predictive", "niw_weighted_update",
    "soft_urn_weights", "truncated_urn_prior", "urn_prior",
    "Dataset", "ingest",
    "SugsFit", "pseudo_marginal", "sugs_fit", "sugs_step",
    "VsugsFit", "predictive_density", "step_lower_bound", "vsugs_allocate",
    "vsugs_fit", "vsugs_step",
    "ExactPosterior", "GibbsConfig", "PosteriorSamples", "collapsed_gibbs",
    "enumerate_exact", "gibbs_predictive",
    "EngineSpec", "OrderingSearchConfig", "OrderingSearchResult",
    "search_orderings",
    "ExperimentGrid", "SyntheticSpec", "density_error", "gen_mixture",
    "relative_error", "run_grid", "true_density",
    "concordance", "three_class_fit",
]

__version__ = "0.1.0"
