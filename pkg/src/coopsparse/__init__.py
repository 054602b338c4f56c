"""Cooperative sparse parameter identification over sensor networks."""

from .config import ConfigError, ExperimentConfig, default_config, from_dict, load_config
from .estimator import (
    NetworkState,
    NumericalError,
    SensorState,
    SparseSettings,
    alpha_schedule,
    dls_round,
    init_state,
    plain_sparse_objective,
    sparse_round,
    theta_hat,
)
from .graph import (
    GraphError,
    NetworkGraph,
    adjacency_power,
    diameter,
    is_connected,
    metropolis_weights,
    ring_graph,
)
from .harness import compare_modes, derive_seed, diagnose_excitation, run_experiment, simulate
from .metrics import (
    ExcitationLedger,
    RunRecord,
    cooperative_excitation_ratio,
    error_bound_scale,
    regret_increment,
    zero_set_agreement,
)
from .model import (
    GaussianNoise,
    ObservationStream,
    ReplayStream,
    StateSpaceRegressor,
    TrueParameter,
    UniformNoise,
    observe,
    single_coordinate_regressor,
    step_regressor,
)
from .solver import (
    QuadraticL1Problem,
    SolveReport,
    SolverError,
    coordinate_descent,
    kkt_residual,
    prox_gradient_oracle,
    soft_threshold,
)

__version__ = "0.1.0"
