"""Dataset quality explanations: variance sufficiency, outliers, envelopes.

Answers, per parameter, whether the data varies enough to support later
optimization, flags executions whose summary statistics (path length, peak
force) fall outside the 1.5 IQR fences, and produces the plotting summaries
(box stats, per-channel trajectory envelopes split by success).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CHANNELS, Dataset, ProgramTemplate, path_length, peak_force
from .errors import ValidationError
from .simulate import gearbox_template


@dataclass(frozen=True)
class QualityThresholds:
    """Sufficiency and outlier cutoffs; overridable via service config."""

    min_coverage: float = 0.2
    min_distinct: int = 5
    max_outlier_fraction: float = 0.1

    def __post_init__(self):
        if not 0 <= self.min_coverage <= 1:
            raise ValidationError("quality.min_coverage", "min_coverage must be in [0, 1]", "min_coverage")
        if self.min_distinct < 1:
            raise ValidationError("quality.min_distinct", "min_distinct must be >= 1", "min_distinct")
        if not 0 <= self.max_outlier_fraction <= 1:
            raise ValidationError(
                "quality.max_outlier_fraction", "max_outlier_fraction must be in [0, 1]", "max_outlier_fraction"
            )

    def to_dict(self) -> dict:
        return {
            "min_coverage": self.min_coverage,
            "min_distinct": self.min_distinct,
            "max_outlier_fraction": self.max_outlier_fraction,
        }


@dataclass(frozen=True)
class ParameterQuality:
    name: str
    minimum: float
    maximum: float
    q1: float
    median: float
    q3: float
    coverage_ratio: float
    distinct_values: int
    sufficient: bool
    message_key: str
    message: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "min": self.minimum,
            "max": self.maximum,
            "quartiles": {"q1": self.q1, "median": self.median, "q3": self.q3},
            "coverage_ratio": self.coverage_ratio,
            "distinct_values": self.distinct_values,
            "sufficient": self.sufficient,
            "message_key": self.message_key,
            "message": self.message,
        }


@dataclass(frozen=True)
class QualityReport:
    per_parameter: tuple
    outlier_indices: tuple
    success_count: int
    fail_count: int
    overall_ok: bool

    @property
    def outlier_fraction(self) -> float:
        total = self.success_count + self.fail_count
        return len(self.outlier_indices) / total if total else 0.0

    def parameter(self, name: str) -> ParameterQuality:
        for p in self.per_parameter:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "per_parameter": [p.to_dict() for p in self.per_parameter],
            "outlier_indices": list(self.outlier_indices),
            "outlier_fraction": self.outlier_fraction,
            "success_count": self.success_count,
            "fail_count": self.fail_count,
            "overall_ok": self.overall_ok,
        }


def iqr_fences(values: np.ndarray) -> tuple[float, float]:
    """[q1 - 1.5 IQR, q3 + 1.5 IQR] with linearly interpolated quartiles."""
    q1, q3 = np.quantile(values, [0.25, 0.75])
    iqr = q3 - q1
    return float(q1 - 1.5 * iqr), float(q3 + 1.5 * iqr)


def _outside_fences(values: np.ndarray) -> np.ndarray:
    """Flags per value; a tiny relative margin keeps float jitter in an
    otherwise constant statistic (degenerate IQR) from flagging everything."""
    lo, hi = iqr_fences(values)
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    return (values < lo - tol) | (values > hi + tol)


def _parameter_quality(
    name: str, values: np.ndarray, lower: float, upper: float, thresholds: QualityThresholds
) -> ParameterQuality:
    q1, median, q3 = (float(q) for q in np.quantile(values, [0.25, 0.5, 0.75]))
    coverage = float((values.max() - values.min()) / (upper - lower))
    coverage = min(max(coverage, 0.0), 1.0)
    distinct = int(np.unique(values).size)
    enough_coverage = coverage >= thresholds.min_coverage
    enough_distinct = distinct >= thresholds.min_distinct
    sufficient = enough_coverage and enough_distinct
    if sufficient:
        key = "quality.variance_sufficient"
        text = (
            f"{name}: variance is sufficient for optimization "
            f"(covers {coverage:.0%} of its range with {distinct} distinct values)"
        )
    elif not enough_coverage:
        key = "quality.low_coverage"
        text = (
            f"{name}: executions cover only {coverage:.0%} of the allowed range "
            f"(need {thresholds.min_coverage:.0%}); vary this parameter more before optimizing it"
        )
    else:
        key = "quality.few_distinct_values"
        text = (
            f"{name}: only {distinct} distinct values recorded "
            f"(need {thresholds.min_distinct}); vary this parameter more before optimizing it"
        )
    return ParameterQuality(
        name=name,
        minimum=float(values.min()),
        maximum=float(values.max()),
        q1=q1,
        median=median,
        q3=q3,
        coverage_ratio=coverage,
        distinct_values=distinct,
        sufficient=sufficient,
        message_key=key,
        message=text,
    )


def analyze(
    dataset: Dataset,
    template: ProgramTemplate | None = None,
    thresholds: QualityThresholds = QualityThresholds(),
) -> QualityReport:
    """Quality report over a dataset; template supplies the parameter bounds."""
    template = template or gearbox_template()
    if template.id != dataset.program_id:
        raise ValidationError(
            "quality.template_mismatch",
            f"dataset belongs to program {dataset.program_id!r}, template is {template.id!r}",
            "program_id",
        )
    matrix = dataset.parameter_matrix()
    per_parameter = tuple(
        _parameter_quality(spec.name, matrix[:, j], spec.lower_bound, spec.upper_bound, thresholds)
        for j, spec in enumerate(template.parameter_specs)
    )

    lengths = np.array([path_length(r.trajectory) for r in dataset.records])
    peaks = np.array([peak_force(r.trajectory) for r in dataset.records])
    outliers = np.nonzero(_outside_fences(lengths) | _outside_fences(peaks))[0]

    flags = dataset.success_flags()
    success_count = int(flags.sum())
    fail_count = len(dataset) - success_count
    overall_ok = (
        all(p.sufficient for p in per_parameter)
        and len(outliers) / len(dataset) <= thresholds.max_outlier_fraction
        and success_count >= 1
        and fail_count >= 1
    )
    return QualityReport(
        per_parameter=per_parameter,
        outlier_indices=tuple(int(i) for i in outliers),
        success_count=success_count,
        fail_count=fail_count,
        overall_ok=overall_ok,
    )


def _envelope_group(stacked: np.ndarray, mask: np.ndarray) -> dict:
    count = int(mask.sum())
    if count == 0:
        return {"count": 0, "channels": None}
    sub = stacked[mask]
    channels = {}
    for k, name in enumerate(CHANNELS):
        block = sub[:, :, k]
        channels[name] = {
            "min": block.min(axis=0).tolist(),
            "mean": block.mean(axis=0).tolist(),
            "max": block.max(axis=0).tolist(),
        }
    return {"count": count, "channels": channels}


def distribution_summary(dataset: Dataset, template: ProgramTemplate | None = None) -> dict:
    """Box-plot stats per parameter plus pointwise min/mean/max trajectory
    envelopes over padded time, split by the success flag."""
    template = template or gearbox_template()
    matrix = dataset.parameter_matrix()
    boxes = []
    for j, spec in enumerate(template.parameter_specs):
        q1, median, q3 = (float(q) for q in np.quantile(matrix[:, j], [0.25, 0.5, 0.75]))
        boxes.append(
            {
                "name": spec.name,
                "unit": spec.unit,
                "min": float(matrix[:, j].min()),
                "q1": q1,
                "median": median,
                "q3": q3,
                "max": float(matrix[:, j].max()),
                "lower_bound": spec.lower_bound,
                "upper_bound": spec.upper_bound,
            }
        )

    stacked = dataset.padded_channels()
    flags = dataset.success_flags().astype(bool)
    return {
        "pad_length": dataset.pad_length,
        "dt": dataset.dt,
        "parameters": boxes,
        "envelopes": {
            "success": _envelope_group(stacked, flags),
            "failure": _envelope_group(stacked, ~flags),
        },
    }
