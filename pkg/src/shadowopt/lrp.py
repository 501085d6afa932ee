"""Relevance propagation: attribute a model head to the input parameters.

Implements the epsilon-stabilized relevance rule over the network's affine
layers. Monotone pointwise maps (tanh, output denormalization) pass relevance
through unchanged, so the head scalar decomposes over the affine graph and
conservation holds up to the epsilon leakage and dropped bias shares. The
input normalization is folded into the first affine layer, so attribution
lands on the raw program parameters and stays meaningful at probes that
normalize to zero (such as the dataset mean). The peak-force head is the soft
maximum (log-sum-exp) of the predicted force channel; its relevance is split
over timesteps by the softmax weights, which are also the exact sensitivities
of the soft maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterVector
from .errors import ValidationError
from .net import ForwardCache, ShadowModel, forward

HEADS = ("peak_force", "cycle_time", "success_logit")
EPSILON = 1e-6
FORCE_TAU = 1.0  # soft-maximum temperature over the force channel, in N


@dataclass(frozen=True)
class RelevanceReport:
    target_head: str
    probe_x: ParameterVector
    relevances: dict
    output_value: float
    conservation_residual: float

    def to_dict(self) -> dict:
        return {
            "target_head": self.target_head,
            "probe_x": dict(self.probe_x.values),
            "relevances": dict(self.relevances),
            "output_value": self.output_value,
            "conservation_residual": self.conservation_residual,
        }


@dataclass(frozen=True)
class RelevanceBar:
    parameter: str
    relevance: float
    normalized_magnitude: float

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "relevance": self.relevance,
            "normalized_magnitude": self.normalized_magnitude,
        }


def _signed_eps(z: np.ndarray, eps: float) -> np.ndarray:
    # sign(0) counts as positive so denominators never vanish
    return np.where(z >= 0.0, eps, -eps)


def _propagate(
    weights,
    cache: ForwardCache,
    relevance_out: np.ndarray,
    eps: float = EPSILON,
    input_activations: np.ndarray | None = None,
) -> np.ndarray:
    """Epsilon-rule from final-affine relevance down to the input parameters.

    The input normalization (x - mu) / sigma is folded into the first affine
    layer: its activations are x / sigma against the unscaled weights (same
    pre-activations; the -mu/sigma constant joins the bias share dropped into
    the residual), so attribution lands on the raw parameters instead of
    vanishing whenever a probe normalizes to zero. With input_activations
    omitted the first layer falls back to the cached normalized inputs.
    """
    n_hidden = len(cache.pre_activations)
    a = cache.activations[n_hidden][0]
    if n_hidden == 0 and input_activations is not None:
        a = input_activations
    z = cache.output[0]
    w, _ = weights[n_hidden]
    r = a * (w @ (relevance_out / (z + _signed_eps(z, eps))))
    for layer in reversed(range(n_hidden)):
        # relevance of the tanh output passes through to its pre-activation
        a = cache.activations[layer][0]
        if layer == 0 and input_activations is not None:
            a = input_activations
        z = cache.pre_activations[layer][0]
        w, _ = weights[layer]
        r = a * (w @ (r / (z + _signed_eps(z, eps))))
    return r


def _check_explainable(model: ShadowModel) -> None:
    log = model.training_log
    untrained = (
        model.provenance.get("kind") == "from_scratch"
        and log is not None
        and log.epochs_completed == 0
    )
    if untrained:
        raise ValidationError(
            "lrp.untrained", "model has untrained (freshly initialized) weights", "model_id"
        )


def soft_peak_force(forces: np.ndarray, tau: float = FORCE_TAU):
    """Soft maximum of the force series and its softmax weights."""
    f = np.asarray(forces, dtype=float)
    fmax = float(f.max())
    w = np.exp((f - fmax) / tau)
    total = float(w.sum())
    return fmax + tau * float(np.log(total)), w / total


def relevance(model: ShadowModel, x: ParameterVector, head: str) -> RelevanceReport:
    """Attribute one head's scalar at probe x to the program parameters."""
    if head not in HEADS:
        raise ValidationError("lrp.head", f"head must be one of {', '.join(HEADS)}", "head")
    _check_explainable(model)
    _, cache = forward(model, x, mode="eval")

    arch = model.architecture
    out = cache.output[0]
    time_idx = arch.trajectory_dim
    seed = np.zeros(arch.output_dim)
    if head == "success_logit":
        output_value = float(out[time_idx + 1])
        seed[time_idx + 1] = output_value
    elif head == "cycle_time":
        stat = model.norm_stats.cycle_time
        output_value = float(out[time_idx]) * stat.safe_std + stat.mean
        seed[time_idx] = output_value
    else:
        stat = model.norm_stats.channels["force"]
        force_idx = np.arange(3, arch.trajectory_dim, 4)
        forces = out[force_idx] * stat.safe_std + stat.mean
        output_value, shares = soft_peak_force(forces)
        seed[force_idx] = shares * output_value

    _, sd = model.norm_stats.param_arrays(model.parameter_names)
    x_raw = np.array([x[name] for name in model.parameter_names], dtype=float)
    r = _propagate(model.weights, cache, seed, input_activations=x_raw / sd)
    relevances = {name: float(v) for name, v in zip(model.parameter_names, r)}
    residual = abs(float(r.sum()) - output_value)
    return RelevanceReport(
        target_head=head,
        probe_x=x,
        relevances=relevances,
        output_value=output_value,
        conservation_residual=residual,
    )


def relevance_bars(model: ShadowModel, x: ParameterVector) -> dict:
    """Per-head bar rows in template parameter order, magnitudes scaled to [0, 1]."""
    bars = {}
    for head in HEADS:
        report = relevance(model, x, head)
        values = np.array([report.relevances[n] for n in model.parameter_names])
        top = float(np.abs(values).max())
        bars[head] = [
            RelevanceBar(
                parameter=name,
                relevance=float(v),
                normalized_magnitude=float(abs(v) / top) if top > 0 else 0.0,
            )
            for name, v in zip(model.parameter_names, values)
        ]
    return bars
