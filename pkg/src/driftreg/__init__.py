"""Online linear regression on drifting streams.

The central learner maintains a base hyperplane and folds every
mini-batch fit into it through an exponentially weighted average of the
two surfaces' unit normals; an adaptive variant monitors per-batch KPIs
in a bounded window and re-weights a step when the newest score breaks a
dynamic z-sigma band. Classic online baselines, synthetic drift-stream
generators, metrics, and a benchmark harness round out the package.

Hot per-sample update loops live in a compiled extension when it is
built; ``kernel_backend()`` reports which implementation is active.
"""
from ._kernels import backend_name as kernel_backend
from .adaptive import (
    AdaptationMode,
    AdaptiveAveragingRegressor,
    DriftAssessment,
    KpiBag,
    KpiWindow,
    ScaleMap,
    Severity,
    window_capacity,
)
from .averaging import AveragingRegressor, StepOutcome, StepTrace
from .baselines import (
    BatchRegressor,
    DivergenceError,
    LassoRegressor,
    LmsRegressor,
    MbgdRegressor,
    PaRegressor,
    RidgeRegressor,
    RlsRegressor,
    SgdRegressor,
)
from .datagen import (
    LinearConcept,
    StreamSpec,
    SyntheticStream,
    abrupt_drift_spec,
    adversarial_spec,
    convergence_spec,
    generate,
    gradual_drift_spec,
    incremental_drift_spec,
    stationary_spec,
    write_csv,
)
from .geometry import Hyperplane
from .metrics import FoldPlan, MetricReport, kfold, mse, r_squared
from .runner import ExperimentSpec, run_cell, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AdaptationMode",
    "AdaptiveAveragingRegressor",
    "AveragingRegressor",
    "BatchRegressor",
    "DivergenceError",
    "DriftAssessment",
    "ExperimentSpec",
    "FoldPlan",
    "Hyperplane",
    "KpiBag",
    "KpiWindow",
    "LassoRegressor",
    "LinearConcept",
    "LmsRegressor",
    "MbgdRegressor",
    "MetricReport",
    "PaRegressor",
    "RidgeRegressor",
    "RlsRegressor",
    "ScaleMap",
    "SgdRegressor",
    "Severity",
    "StepOutcome",
    "StepTrace",
    "StreamSpec",
    "SyntheticStream",
    "abrupt_drift_spec",
    "adversarial_spec",
    "convergence_spec",
    "generate",
    "gradual_drift_spec",
    "incremental_drift_spec",
    "kernel_backend",
    "kfold",
    "mse",
    "r_squared",
    "run_cell",
    "run_experiment",
    "stationary_spec",
    "window_capacity",
    "write_csv",
]
