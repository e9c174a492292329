"""Multi-step MLE estimator-processes for ergodic diffusions observed in continuous time."""
from multistep_mle.errors import (
    AcceptanceError,
    ConfigError,
    MultistepMLEError,
    NumericalError,
    WindowError,
)
from multistep_mle.estimate import (
    ESTIMATORS,
    EstimatorTrajectory,
    make_tau_grid,
    one_step_process,
    run_estimator,
    score_delta,
    score_delta_pathwise,
    two_step_process,
)
from multistep_mle.models import DiffusionModel, ParameterSpace, make_model
from multistep_mle.online import OnlineOneStep
from multistep_mle.simulate import SamplePath, euler_maruyama, simulate_path
from multistep_mle.stationary import build_density, fisher_quadrature

__version__ = "0.1.0"
