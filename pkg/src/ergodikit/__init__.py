"""Bayesian inference for stationary sequences over a finite alphabet."""

__version__ = "0.1.0"

from .errors import ConvergenceError, ValidationError
from .tensors import (
    Alphabet,
    FlattenedMatrix,
    StochasticTensor,
    decode_context,
    encode_context,
    flatten,
    make_tensor,
    read_tensor,
    relabel,
    write_tensor,
)
from .projection import (
    KernelSequence,
    StationaryVector,
    closed_form_binary_order3,
    kernel_sequence,
    project_chain,
    project_down,
    renormalize_stationary,
    stationary_vector,
)
from .measure import cylinder_probability, cylinder_table, stationarity_residual
from .sampler import (
    DirichletTensorPrior,
    OrderDistribution,
    Trajectory,
    sample_order,
    sample_tensor,
    sample_trajectory,
)
from .empirical import (
    GramTable,
    SymmetryDefect,
    count_grams,
    empirical_measure,
    estimate_tensor,
    symmetry_defect_term,
    symmetry_defect_total,
)
from .posterior import (
    PosteriorState,
    conditional_log_marginal,
    full_posterior,
    posterior_predictive,
    update_dirichlet,
    update_order,
)
