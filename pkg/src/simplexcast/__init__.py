"""Online multi-class probability forecasting on the simplex.

Three forecasters with worst-case cumulative-loss guarantees against linear
(or kernel) comparators under the squared-distance loss:

* CaarForecaster -- one scalar regressor per class, then simplex projection;
* MaarForecaster -- joint forecaster over all classes, threshold substitution;
* KaarForecaster -- the joint forecaster in kernel form, growing with the data.

The harness module provides the time-series labeling protocol, metrics, and
synthetic data; the bounds module verifies the guarantees on actual runs.
"""

from .bounds import (
    BoundReport,
    KernelExpert,
    LinearExpert,
    best_kernel_expert,
    best_linear_expert,
    expert_loss,
    verify_run,
)
from .caar import CaarForecaster, CaarState, caar_predict, caar_predict_raw, caar_update
from .core import (
    DimensionMismatch,
    InvariantViolation,
    LossLedger,
    PredictionVector,
    ProbabilityVector,
    Vertex,
    brier_loss,
    vertex_to_probability,
)
from .kaar import KaarForecaster, KaarState, Kernel, kaar_predict, kaar_update, kernel_eval
from .maar import (
    MaarConfig,
    MaarForecaster,
    MaarState,
    maar_predict,
    maar_update,
    solve_structured,
)
from .projection import project_to_simplex
from .substitution import GeneralizedPrediction, solve_substitution, substitution_threshold

__all__ = [
    "BoundReport",
    "CaarForecaster",
    "CaarState",
    "DimensionMismatch",
    "GeneralizedPrediction",
    "InvariantViolation",
    "KaarForecaster",
    "KaarState",
    "Kernel",
    "KernelExpert",
    "LinearExpert",
    "LossLedger",
    "MaarConfig",
    "MaarForecaster",
    "MaarState",
    "PredictionVector",
    "ProbabilityVector",
    "Vertex",
    "best_kernel_expert",
    "best_linear_expert",
    "brier_loss",
    "caar_predict",
    "caar_predict_raw",
    "caar_update",
    "expert_loss",
    "kaar_predict",
    "kaar_update",
    "kernel_eval",
    "maar_predict",
    "maar_update",
    "project_to_simplex",
    "solve_structured",
    "solve_substitution",
    "substitution_threshold",
    "vertex_to_probability",
    "verify_run",
]

__version__ = "0.1.0"
