"""Training outcome classification from loss curves and dataset quality.

Maps a finished run onto one of five verdicts (good performance, overfitting,
underfitting, regularization, erroneous training data) using ratio and trend
rules over smoothed loss curves, and attaches an explanation key plus the
numeric evidence behind the decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .net import TrainHyperparams, TrainingLog
from .quality import QualityReport

# Detector operating points. The verdict categories come from the problem
# domain; the numbers are this implementation's documented constants,
# calibrated once against the seeded end-to-end scenario suite.
SMOOTHING_WINDOW = 11     # centered moving average, truncated at the edges
MIN_EPOCHS = 10           # shorter unaborted runs cannot be classified
REGULARIZATION_GAP = 1.5  # train this far above val: dropout noise dominates
OVERFIT_GAP = 2.0         # val this far above train
TAIL_FRACTION = 0.25      # trailing slice of epochs checked for a rising val trend
PLATEAU_SLOPE = 1e-4      # |slope| per epoch, relative to the curve's start
OUTLIER_LIMIT = 0.1       # dataset outlier fraction above which the data is suspect

VERDICT_LABELS = (
    "good_performance",
    "overfitting",
    "underfitting",
    "regularization",
    "erroneous_training_data",
)

_EVIDENCE_KEYS = (
    "final_train_loss",
    "final_val_loss",
    "gap_ratio",
    "train_slope",
    "val_slope",
    "val_tail_slope",
)


@dataclass(frozen=True)
class TrainingVerdict:
    """One label, the numbers that fired it, and the UI text key."""

    label: str
    evidence: dict
    explanation_key: str
    message: str

    def __post_init__(self):
        if self.label not in VERDICT_LABELS:
            raise ValidationError("verdict.label", f"unknown verdict label {self.label!r}", "label")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "evidence": dict(self.evidence),
            "explanation_key": self.explanation_key,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingVerdict":
        return cls(
            label=doc["label"],
            evidence=dict(doc["evidence"]),
            explanation_key=doc["explanation_key"],
            message=doc["message"],
        )


def smooth_curve(values, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Centered moving average; the window is truncated near the edges."""
    y = np.asarray(values, dtype=float)
    half = window // 2
    out = np.empty_like(y)
    for i in range(y.size):
        lo, hi = max(0, i - half), min(y.size, i + half + 1)
        out[i] = y[lo:hi].mean()
    return out

def trend_slope(values) -> float:
    """Least squares slope of the values against the epoch index."""
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        return 0.0
    x = np.arange(y.size, dtype=float)
    x -= x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def _verdict(label: str, evidence: dict, message: str) -> TrainingVerdict:
    return TrainingVerdict(
        label=label, evidence=evidence, explanation_key=f"verdict.{label}", message=message
    )


def classify(
    log: TrainingLog, hp: TrainHyperparams, dataset_quality: QualityReport
) -> TrainingVerdict:
    """Apply the ordered decision rules to one finished training run.

    Rule order: erroneous training data (abort/non-finite, a validation curve
    that never trends down, or an outlier-heavy dataset), then regularization
    (train far above val), then overfitting (val far above train and rising
    late), then underfitting (both curves plateaued high), else good.
    """
    n = log.epochs_completed
    if n < MIN_EPOCHS and not log.aborted:
        raise ValidationError(
            "diagnostics.log_too_short",
            f"need at least {MIN_EPOCHS} completed epochs to classify, got {n}",
            "log.train_loss",
        )

    train = np.asarray(log.train_loss, dtype=float)
    val = np.asarray(log.val_loss, dtype=float)
    finite = n > 0 and bool(np.all(np.isfinite(train)) and np.all(np.isfinite(val)))

    if finite:
        val_smooth = smooth_curve(val)
        train_slope = trend_slope(smooth_curve(train))
        val_slope = trend_slope(val_smooth)
        tail = max(2, math.ceil(TAIL_FRACTION * n))
        val_tail_slope = trend_slope(val_smooth[-tail:])
        final_train, final_val = float(train[-1]), float(val[-1])
        evidence = {
            "final_train_loss": final_train,
            "final_val_loss": final_val,
            "gap_ratio": final_val / final_train if final_train > 0 else math.inf,
            "train_slope": train_slope,
            "val_slope": val_slope,
            "val_tail_slope": val_tail_slope,
        }
    else:
        evidence = {key: math.nan for key in _EVIDENCE_KEYS}

    if log.aborted:
        reason = log.abort_reason or "training aborted"
        return _verdict("erroneous_training_data", evidence, f"training aborted: {reason}")
    if not finite:
        return _verdict(
            "erroneous_training_data", evidence, "loss curves contain non-finite values"
        )
    if val_slope >= 0:
        return _verdict(
            "erroneous_training_data",
            evidence,
            f"validation loss never trended down (slope {val_slope:.3g} per epoch); "
            "the model is not learning anything transferable from this data",
        )
    if dataset_quality.outlier_fraction > OUTLIER_LIMIT:
        return _verdict(
            "erroneous_training_data",
            evidence,
            f"{dataset_quality.outlier_fraction:.0%} of executions are outliers, above the "
            f"{OUTLIER_LIMIT:.0%} limit; clean the dataset before trusting this model",
        )

    if final_train > REGULARIZATION_GAP * final_val:
        return _verdict(
            "regularization",
            evidence,
            f"training loss ({final_train:.4g}) sits {final_train / final_val:.1f}x above "
            f"validation loss ({final_val:.4g}); dropout (rate {hp.dropout_rate}) is "
            "drowning the training signal, lower it",
        )

    if final_val > OVERFIT_GAP * final_train and val_tail_slope > 0:
        return _verdict(
            "overfitting",
            evidence,
            f"validation loss ({final_val:.4g}) is {final_val / final_train:.1f}x the "
            "training loss and rising over the last quarter of training; the model "
            "memorizes the training set instead of generalizing",
        )

    init_train = max(abs(float(train[0])), 1e-12)
    init_val = max(abs(float(val[0])), 1e-12)
    plateaued = (
        abs(train_slope) < PLATEAU_SLOPE * init_train
        and abs(val_slope) < PLATEAU_SLOPE * init_val
    )
    if final_train > 0.5 * init_train and final_val > 0.5 * init_val and plateaued:
        return _verdict(
            "underfitting",
            evidence,
            "both losses plateaued above half their starting values; the model has not "
            "captured the data (train longer, raise the learning rate, or enlarge the network)",
        )

    return _verdict(
        "good_performance",
        evidence,
        f"validation loss fell to {final_val:.4g} and tracks the training loss "
        f"(gap ratio {evidence['gap_ratio']:.2f})",
    )
