"""Sampling-based dynamic optimization with distributed consensus MPC."""

from .admm import (
    AgentLocalState,
    GlobalConsensus,
    NeighborhoodMode,
    NeighborhoodSets,
    assemble_globals_view,
    compute_neighborhoods,
    consensus_residuals,
    dual_update,
    global_update,
    recede_and_remap,
)
from .analysis import (
    ComplexityReport,
    MomentSet,
    ScalarPointMass,
    psi,
    risk_bounds,
    schedules,
    update_error_interval,
    verify_bounds_mc,
)
from .dynamics import DynamicsKind, DynamicsModel, step
from .errors import ConfigError, DegenerateWeights, MomentInconsistency, RolloutDiverged
from .optimizer import (
    LocalProblem,
    OptimizeResult,
    OptimizerConfig,
    TrajectoryPair,
    UpdateMode,
    augmented_cost,
    optimize,
    rollout,
    test_policy,
)
from .policies import (
    GaussianMixturePolicy,
    SteinPolicy,
    UnimodalGaussianPolicy,
    gmm_em_update,
    sample_controls,
    stein_update,
    ug_update,
)
from .runtime import (
    PolicyConfig,
    RunConfig,
    RunMode,
    RunRecord,
    realized_cost,
    run,
)
from .shapes import ShapeConfig, ShapeKind, compute_weights, elite_threshold, exp_r
from .tasks import TaskSpec, make_scenario

__version__ = "0.1.0"
