"""Shared factories for hand-built models and a loop-based forward oracle."""

import math

import numpy as np

from shadowopt.core import Moment, NormStats, ParameterSpec, ParameterVector, ProgramTemplate
from shadowopt.net import NetArchitecture, ShadowModel, init_weights

FIXED = {
    "approach_velocity": 20.0,
    "search_velocity": 10.0,
    "max_spiral_radius": 4.0,
    "insert_velocity": 10.0,
}


def generic_template(p: int) -> ProgramTemplate:
    return ProgramTemplate(
        id=f"probe-{p}",
        skill_sequence=("approach",),
        parameter_specs=tuple(
            ParameterSpec(f"p{i}", "mm/s", -100.0, 100.0, "approach") for i in range(p)
        ),
    )


def identity_stats(p: int) -> NormStats:
    unit = Moment(0.0, 1.0)
    return NormStats(
        params={f"p{i}": unit for i in range(p)},
        channels={c: unit for c in ("x", "y", "z", "force")},
        cycle_time=unit,
    )


def random_stats(p: int, rng) -> NormStats:
    def m():
        return Moment(float(rng.normal()), float(rng.uniform(0.5, 3.0)))

    return NormStats(
        params={f"p{i}": m() for i in range(p)},
        channels={c: m() for c in ("x", "y", "z", "force")},
        cycle_time=m(),
    )


def make_model(p=4, pad=3, hidden=(5, 4), seed=0, stats="identity", dropout=0.1, zero=False,
               zero_bias=False):
    arch = NetArchitecture(input_dim=p, pad_length=pad, hidden_layers=hidden, dropout_rate=dropout)
    rng = np.random.default_rng(seed)
    if zero:
        weights = [(np.zeros((i, o)), np.zeros(o)) for i, o in arch.layer_dims()]
    else:
        weights = init_weights(arch, rng)
        if not zero_bias:
            weights = [(w, rng.normal(scale=0.1, size=b.shape)) for w, b in weights]
    if isinstance(stats, NormStats):
        norm = stats
    else:
        norm = identity_stats(p) if stats == "identity" else random_stats(p, rng)
    return ShadowModel(
        id=f"m-{seed}",
        template=generic_template(p),
        dt=0.01,
        architecture=arch,
        weights=weights,
        norm_stats=norm,
        provenance={"kind": "from_scratch"},
    )


def probe(model, values) -> ParameterVector:
    return ParameterVector.from_array(model.parameter_names, values)


def oracle_forward(model: ShadowModel, x_raw):
    """Plain-Python loop forward pass; returns (trajectory rows, time, prob)."""
    names = model.parameter_names
    a = [
        (x_raw[i] - model.norm_stats.params[n].mean) / model.norm_stats.params[n].safe_std
        for i, n in enumerate(names)
    ]
    for layer in range(len(model.architecture.hidden_layers)):
        w, b = model.weights[layer]
        z = [sum(a[i] * w[i][j] for i in range(len(a))) + b[j] for j in range(w.shape[1])]
        a = [math.tanh(v) for v in z]
    w, b = model.weights[-1]
    out = [sum(a[i] * w[i][j] for i in range(len(a))) + b[j] for j in range(w.shape[1])]
    pad = model.architecture.pad_length
    chans = ("x", "y", "z", "force")
    traj = [
        [
            out[t * 4 + c] * model.norm_stats.channels[chans[c]].safe_std
            + model.norm_stats.channels[chans[c]].mean
            for c in range(4)
        ]
        for t in range(pad)
    ]
    time = out[pad * 4] * model.norm_stats.cycle_time.safe_std + model.norm_stats.cycle_time.mean
    logit = out[pad * 4 + 1]
    prob = 1.0 / (1.0 + math.exp(-logit)) if logit >= 0 else math.exp(logit) / (1.0 + math.exp(logit))
    return traj, time, prob
