"""Surrogate-based optimization of robot program parameters, with built-in
dataset, training, and attribution explanations."""

__version__ = "0.1.0"

from .core import (
    Dataset,
    DatasetFilter,
    ExecutionRecord,
    ParameterSpec,
    ParameterVector,
    ProgramTemplate,
    Trajectory,
    build_dataset,
    cycle_time,
    pad_trajectory,
    path_length,
    peak_force,
)
from .errors import (
    ConflictError,
    DomainRuleError,
    NotFoundError,
    ParseError,
    ShadowOptError,
    ValidationError,
)
from .diagnostics import TrainingVerdict, classify
from .lrp import RelevanceReport, relevance, relevance_bars
from .net import (
    NetArchitecture,
    Prediction,
    ShadowModel,
    TrainHyperparams,
    TrainingLog,
    predict,
    train,
)
from .optimize import (
    ObjectiveSpec,
    OptimizationRun,
    OptimizerHyperparams,
    compare_parameterizations,
    objective_value,
    optimize,
    what_if,
)
from .simulate import SimConfig, batch_execute, execute, gearbox_template

__all__ = [
    "Dataset",
    "DatasetFilter",
    "ExecutionRecord",
    "ParameterSpec",
    "ParameterVector",
    "ProgramTemplate",
    "Trajectory",
    "build_dataset",
    "cycle_time",
    "pad_trajectory",
    "path_length",
    "peak_force",
    "ConflictError",
    "DomainRuleError",
    "NotFoundError",
    "ParseError",
    "ShadowOptError",
    "ValidationError",
    "NetArchitecture",
    "Prediction",
    "ShadowModel",
    "TrainHyperparams",
    "TrainingLog",
    "predict",
    "train",
    "TrainingVerdict",
    "classify",
    "RelevanceReport",
    "relevance",
    "relevance_bars",
    "ObjectiveSpec",
    "OptimizationRun",
    "OptimizerHyperparams",
    "compare_parameterizations",
    "objective_value",
    "optimize",
    "what_if",
    "SimConfig",
    "batch_execute",
    "execute",
    "gearbox_template",
]
