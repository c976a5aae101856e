"""holonet: certified sparse-network approximation of smooth functions and
excess-risk rate experiments on weakly dependent time series."""

__version__ = "0.1.0"

from .activations import Activation
from .network import (
    Architecture,
    ClassConstraints,
    Network,
    compose_affine_input,
    fold_affine_input,
    parallelize,
)
from .targets import (
    Box,
    HolderTarget,
    corpus_names,
    corpus_target,
    rescale_map,
    rescale_target,
    sampled_holder_norm,
)
from .interpolant import (
    GridSpec,
    PatchTable,
    build_grid,
    interpolant_error_bound,
    interpolant_eval,
    project_grid_point,
)
from .blocks import BuildLimitError, hat_network, mult_network
from .construction import (
    ApproxCertificate,
    BuildLimits,
    build_relu_approximant,
    choose_grid_resolution,
    convert_relu_to_pwl,
    extend_depth,
)
from .processes import ProcessSpec, SupervisedTask, Trajectory, make_supervised, simulate
from .dependence import DependenceEstimate, default_dictionary, estimate_dependence, wide_clamp
from .losses import Loss
from .training import (
    TrainConfig,
    TrainedModel,
    TrainingFailure,
    empirical_risk,
    gradient,
    project_constraints,
    train_erm,
)
from .risk import (
    MCRisk,
    bound_ingredients,
    deviation_denominator,
    estimate_partial_sum_variance,
    excess_and_decomposition,
    mc_risk,
)
from .rates import (
    ExperimentFailure,
    RateExperimentConfig,
    RateReport,
    class_schedule,
    rate_experiment,
)
