"""Consensus-based particle optimization for objectives given as expectations.

The package minimizes f(x) = E[F(x, Y)] with an interacting particle system:
the expectation is first reduced to a deterministic objective, either by a
fixed Monte Carlo sample of Y or by a composite-midpoint quadrature grid,
and the reduced problem is handed to the consensus dynamics.  A metrics and
experiments layer reproduces convergence-rate and success-rate studies at
configurable scale.
"""

from .approximation import (
    QuadratureGrid,
    SaaSample,
    WeightedSampleObjective,
    draw_saa_sample,
    midpoint_nodes,
    quadrature_objective,
    saa_objective,
    truncated_normal_grid,
)
from .dynamics import (
    CboParams,
    CboTrajectory,
    DiffusionKind,
    InitDistribution,
    ParticleEnsemble,
    UniformBoxInit,
    consensus_point,
    consensus_point_batch,
    em_step,
    run_cbo,
    run_meanfield_surrogate,
    sample_initial,
)
from .errors import BlowupError, ExperimentError, GridSizeError, UnsupportedLawError
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    emit_csv,
    test1_meanfield_rate,
    test1_saa_rate,
    test2_joint_rate,
    test3_dimension_sweep,
    test4_success_rates,
)
from .metrics import (
    RateFit,
    SuccessCriterion,
    consensus_rmse,
    equalize_sizes,
    loglog_slope,
    quantile_band,
    subsample_rows,
    success_rate,
    wasserstein_1d,
    wasserstein_1d_unequal,
)
from .objectives import (
    AffinePiecewiseForm,
    PiecewiseLinear,
    SeparableForm,
    StdNormal,
    StochasticObjective,
    UniformBox,
    gaussian_piecewise_expectation,
    get_objective,
    make_ackley_like,
    make_lls_family,
    make_phi,
    make_stochastic_utility,
    register_objective,
    OBJECTIVE_NAMES,
)
from .seeds import Domain, RunSeed

__version__ = "0.1.0"
