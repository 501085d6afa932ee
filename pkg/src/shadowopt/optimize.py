"""Weighted objectives over predictions and projected gradient descent.

Objectives are differentiable functions of a model prediction (cycle time,
path length, success probability, soft peak force vs a threshold), combined
as a weighted sum with documented unit normalization so default weights are
commensurate. The optimizer walks normalized parameter space with plain
projected gradient descent through the frozen model, recording every iterate
for the UI overlay; the best iterate is the argmin of the recorded totals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import net
from .core import ParameterVector, ProgramTemplate, new_id
from .errors import DomainRuleError, ValidationError
from .lrp import FORCE_TAU, soft_peak_force
from .net import Prediction, ShadowModel, sigmoid, softplus

OBJECTIVES = ("cycle_time", "path_length", "success", "force_threshold")

# unit normalization so default weights of 1.0 are commensurate
UNIT_TIME_S = 1.0
UNIT_PATH_MM = 100.0
UNIT_FORCE_N = 1.0
SUCCESS_EPS = 1e-9
PATH_EPS = 1e-9


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which objectives count, with what weight, and the force threshold."""

    cycle_time_enabled: bool = True
    cycle_time_weight: float = 1.0
    path_length_enabled: bool = False
    path_length_weight: float = 1.0
    success_enabled: bool = True
    success_weight: float = 1.0
    force_threshold_enabled: bool = True
    force_threshold_weight: float = 1.0
    force_threshold: Optional[float] = 25.0

    def __post_init__(self):
        enabled = self.enabled_objectives()
        if not enabled:
            raise ValidationError("objective.none_enabled", "at least one objective must be enabled", "objectives")
        for name in OBJECTIVES:
            weight = getattr(self, f"{name}_weight")
            if not np.isfinite(weight) or weight < 0:
                raise ValidationError("objective.weight", f"{name} weight must be >= 0", f"{name}_weight")
            if getattr(self, f"{name}_enabled") and weight <= 0:
                raise ValidationError(
                    "objective.weight", f"{name} is enabled so its weight must be > 0", f"{name}_weight"
                )
        if self.force_threshold_enabled:
            if self.force_threshold is None or not np.isfinite(self.force_threshold):
                raise ValidationError(
                    "objective.force_threshold",
                    "force_threshold (N) is required when the force objective is enabled",
                    "force_threshold",
                )

    def enabled_objectives(self) -> tuple:
        return tuple(name for name in OBJECTIVES if getattr(self, f"{name}_enabled"))

    def to_dict(self) -> dict:
        doc = {}
        for name in OBJECTIVES:
            doc[f"{name}_enabled"] = getattr(self, f"{name}_enabled")
            doc[f"{name}_weight"] = getattr(self, f"{name}_weight")
        doc["force_threshold"] = self.force_threshold
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path: str = "spec") -> "ObjectiveSpec":
        kwargs = {}
        for name in OBJECTIVES:
            for suffix in ("enabled", "weight"):
                key = f"{name}_{suffix}"
                if key in doc:
                    value = doc[key]
                    if suffix == "enabled":
                        if not isinstance(value, bool):
                            raise ValidationError("objective.type", f"{key} must be a boolean", f"{path}.{key}")
                    else:
                        if isinstance(value, bool) or not isinstance(value, (int, float)):
                            raise ValidationError("objective.type", f"{key} must be a number", f"{path}.{key}")
                        value = float(value)
                    kwargs[key] = value
        if "force_threshold" in doc and doc["force_threshold"] is not None:
            value = doc["force_threshold"]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError("objective.type", "force_threshold must be a number", f"{path}.force_threshold")
            kwargs["force_threshold"] = float(value)
        elif "force_threshold" in doc:
            kwargs["force_threshold"] = None
        return cls(**kwargs)


@dataclass(frozen=True)
class OptimizerHyperparams:
    """Step size in normalized parameter space and iteration budget."""

    step_size: float = 0.05
    iterations: int = 100
    seed: int = 0  # reserved for stochastic variants; plain descent is deterministic

    def __post_init__(self):
        # 0 is allowed: a zero step turns the run into a pure evaluation of x_init
        if not np.isfinite(self.step_size) or self.step_size < 0:
            raise ValidationError("optimizer.step_size", "step_size must be >= 0", "step_size")
        if self.iterations < 1:
            raise ValidationError("optimizer.iterations", "iterations must be >= 1", "iterations")

    def to_dict(self) -> dict:
        return {"step_size": self.step_size, "iterations": self.iterations, "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "OptimizerHyperparams":
        kwargs = {}
        if "step_size" in doc:
            kwargs["step_size"] = float(doc["step_size"])
        if "iterations" in doc:
            value = doc["iterations"]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError("optimizer.type", "iterations must be an integer", "iterations")
            kwargs["iterations"] = value
        if "seed" in doc:
            kwargs["seed"] = int(doc["seed"])
        return cls(**kwargs)


@dataclass(frozen=True)
class IterationRecord:
    x: ParameterVector
    prediction: Prediction
    objectives: dict
    total: float

    def to_dict(self) -> dict:
        return {
            "x": dict(self.x.values),
            "prediction": self.prediction.to_dict(),
            "objectives": dict(self.objectives),
            "total": self.total,
        }


@dataclass(frozen=True)
class OptimizationRun:
    id: str
    model_id: str
    spec: ObjectiveSpec
    hp: OptimizerHyperparams
    x_init: ParameterVector
    iterations: tuple
    best_index: int
    x_best: ParameterVector

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "model_id": self.model_id,
            "spec": self.spec.to_dict(),
            "hp": self.hp.to_dict(),
            "x_init": dict(self.x_init.values),
            "iterations": [it.to_dict() for it in self.iterations],
            "best_index": self.best_index,
            "x_best": dict(self.x_best.values),
        }


@dataclass(frozen=True)
class WhatIfResult:
    prediction: Prediction
    objectives: dict
    total: float

    def to_dict(self) -> dict:
        return {
            "prediction": self.prediction.to_dict(),
            "objectives": dict(self.objectives),
            "total": self.total,
        }


def path_length_soft(positions: np.ndarray) -> float:
    """Differentiable path length: sum of sqrt(|segment|^2 + eps)."""
    diffs = np.diff(np.asarray(positions, dtype=float), axis=0)
    if diffs.size == 0:
        return 0.0
    return float(np.sum(np.sqrt(np.sum(diffs * diffs, axis=1) + PATH_EPS)))


def objective_value(pred: Prediction, spec: ObjectiveSpec) -> tuple[dict, float]:
    """Per-objective values J_k (unit-normalized) and weighted total L."""
    values = {}
    if spec.cycle_time_enabled:
        values["cycle_time"] = float(pred.cycle_time) / UNIT_TIME_S
    if spec.path_length_enabled:
        values["path_length"] = path_length_soft(pred.trajectory.positions) / UNIT_PATH_MM
    if spec.success_enabled:
        # log1p keeps |J| <= eps when the probability rounds to exactly 1
        values["success"] = float(-np.log1p(pred.success_probability - 1.0 + SUCCESS_EPS))
    if spec.force_threshold_enabled:
        soft_peak, _ = soft_peak_force(pred.trajectory.forces, FORCE_TAU)
        values["force_threshold"] = float(softplus(np.array(soft_peak - spec.force_threshold))) / UNIT_FORCE_N
    total = sum(getattr(spec, f"{name}_weight") * j for name, j in values.items())
    return values, float(total)


def best_iteration(totals) -> int:
    """Argmin with ties resolved to the lowest index."""
    arr = np.asarray(list(totals), dtype=float)
    return int(np.argmin(arr))


def _check_optimizable(model: ShadowModel) -> None:
    log = model.training_log
    untrained = (
        model.provenance.get("kind") == "from_scratch"
        and log is not None
        and log.epochs_completed == 0
    )
    if untrained:
        raise ValidationError(
            "optimize.untrained", "model has untrained (freshly initialized) weights", "model_id"
        )


def _gradient(model: ShadowModel, cache, pred: Prediction, spec: ObjectiveSpec) -> np.ndarray:
    """dL/dx in raw parameter units, chained through the network backward pass."""
    arch = model.architecture
    T = arch.pad_length
    d_traj = np.zeros((T, 4))
    d_time = 0.0
    d_logit = 0.0

    if spec.cycle_time_enabled:
        d_time += spec.cycle_time_weight / UNIT_TIME_S

    if spec.path_length_enabled:
        positions = pred.trajectory.positions
        diffs = np.diff(positions, axis=0)
        norms = np.sqrt(np.sum(diffs * diffs, axis=1) + PATH_EPS)
        seg = diffs / norms[:, None] * (spec.path_length_weight / UNIT_PATH_MM)
        d_traj[1:, :3] += seg
        d_traj[:-1, :3] -= seg

    if spec.success_enabled:
        p = pred.success_probability
        d_logit += spec.success_weight * (-(p * (1.0 - p)) / (p + SUCCESS_EPS))

    if spec.force_threshold_enabled:
        forces = pred.trajectory.forces
        soft_peak, shares = soft_peak_force(forces, FORCE_TAU)
        gate = float(sigmoid(np.array(soft_peak - spec.force_threshold)))
        # clamped forces: zero subgradient where the raw force output is negative
        stat = model.norm_stats.channels["force"]
        raw = cache.output[0][3 : arch.trajectory_dim : 4] * stat.safe_std + stat.mean
        active = (raw > 0.0).astype(float)
        d_traj[:, 3] += spec.force_threshold_weight / UNIT_FORCE_N * gate * shares * active

    _, d_x = net.backward(model, cache, d_traj, d_time, d_logit)
    return d_x[0]


def optimize(
    model: ShadowModel,
    x_init: ParameterVector,
    spec: ObjectiveSpec,
    hp: OptimizerHyperparams,
    run_id: Optional[str] = None,
    progress=None,
    should_stop=None,
) -> OptimizationRun:
    """Projected gradient descent on the weighted objective through the model.

    Records the starting point plus every iterate (iterations + 1 entries);
    the best entry is the argmin of the recorded totals, ties to the lowest
    index. Raises on a non-finite gradient, naming the iteration.
    """
    _check_optimizable(model)
    template = model.template
    template.validate_vector(x_init)

    lo, hi = template.bounds_arrays()
    mu, sd = model.norm_stats.param_arrays(model.parameter_names)
    lo_n, hi_n = (lo - mu) / sd, (hi - mu) / sd

    x_norm = model.normalize_params(x_init.to_array())
    records = []
    for i in range(hp.iterations + 1):
        x_raw = model.denormalize_params(x_norm)
        # projection keeps iterates inside bounds; nudge float round-off back in
        x_raw = np.clip(x_raw, lo, hi)
        x_vec = ParameterVector.from_array(model.parameter_names, x_raw)
        pred, cache = net.forward(model, x_vec, mode="eval")
        objectives, total = objective_value(pred, spec)
        records.append(IterationRecord(x=x_vec, prediction=pred, objectives=objectives, total=total))
        if progress is not None:
            progress(i, hp.iterations)
        if i == hp.iterations:
            break
        if should_stop is not None and should_stop():
            break
        grad_raw = _gradient(model, cache, pred, spec)
        if not np.all(np.isfinite(grad_raw)):
            raise DomainRuleError(
                "optimize.non_finite_gradient", f"non-finite gradient at iteration {i}", "iterations"
            )
        x_norm = np.clip(x_norm - hp.step_size * grad_raw * sd, lo_n, hi_n)

    best = best_iteration(r.total for r in records)
    return OptimizationRun(
        id=run_id or new_id("opt"),
        model_id=model.id,
        spec=spec,
        hp=hp,
        x_init=x_init,
        iterations=tuple(records),
        best_index=best,
        x_best=records[best].x,
    )


def what_if(model: ShadowModel, x_probe: ParameterVector, spec: ObjectiveSpec) -> WhatIfResult:
    """Single eval-mode prediction plus objective readouts; no state touched."""
    pred = net.predict(model, x_probe)
    objectives, total = objective_value(pred, spec)
    return WhatIfResult(prediction=pred, objectives=objectives, total=total)


def compare_parameterizations(
    x_init: ParameterVector, x_best: ParameterVector, template: ProgramTemplate
) -> list:
    """Before/after rows for the UI table, in template parameter order."""
    template.validate_vector(x_init)
    template.validate_vector(x_best)
    rows = []
    for spec_ in template.parameter_specs:
        before = x_init[spec_.name]
        after = x_best[spec_.name]
        span = spec_.upper_bound - spec_.lower_bound
        rows.append(
            {
                "name": spec_.name,
                "before": before,
                "after": after,
                "delta": after - before,
                "delta_relative_to_range": (after - before) / span,
            }
        )
    return rows
