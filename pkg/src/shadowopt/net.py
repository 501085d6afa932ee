"""The shadow model: a small MLP with hand-written forward and backward passes.

Maps z-score-normalized program parameters to three heads: a padded
trajectory (pad_length x 4 channels), a cycle-time scalar, and a success
logit. Gradients are exact reverse-mode, computed both for the weights
(training) and for the inputs (parameter optimization), with no autodiff
dependency: the graph is affine layers + tanh + inverted dropout + logistic
output, simple enough to differentiate by hand and verify against finite
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    EPOCH,
    NormStats,
    Dataset,
    ParameterVector,
    ProgramTemplate,
    Trajectory,
    _as_float,
    _as_int,
    _as_list,
    _as_str,
    _require,
    new_id,
)
from .errors import DomainRuleError, ValidationError

ACTIVATIONS = ("tanh",)

PROVENANCE_KINDS = ("from_scratch", "base", "finetuned")

INIT_MODES = ("scratch", "as_is", "finetune")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z):
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass(frozen=True)
class NetArchitecture:
    """Layer widths and head layout; output dim is pad_length*4 + 2."""

    input_dim: int
    pad_length: int
    hidden_layers: tuple = (64, 64)
    activation: str = "tanh"
    dropout_rate: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim < 1:
            raise ValidationError("architecture.input_dim", "input_dim must be >= 1", "input_dim")
        if self.pad_length < 1:
            raise ValidationError("architecture.pad_length", "pad_length must be >= 1", "pad_length")
        if any(w < 1 for w in self.hidden_layers):
            raise ValidationError("architecture.widths", "hidden widths must be >= 1", "hidden_layers")
        if self.activation not in ACTIVATIONS:
            raise ValidationError("architecture.activation", f"activation must be one of {ACTIVATIONS}", "activation")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("architecture.dropout", "dropout_rate must be in [0, 1)", "dropout_rate")

    @property
    def trajectory_dim(self) -> int:
        return self.pad_length * 4

    @property
    def output_dim(self) -> int:
        return self.trajectory_dim + 2

    def layer_dims(self) -> list:
        dims = [self.input_dim, *self.hidden_layers, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "pad_length": self.pad_length,
            "hidden_layers": list(self.hidden_layers),
            "activation": self.activation,
            "dropout_rate": self.dropout_rate,
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "architecture") -> "NetArchitecture":
        return cls(
            input_dim=_as_int(_require(doc, "input_dim", path), f"{path}.input_dim"),
            pad_length=_as_int(_require(doc, "pad_length", path), f"{path}.pad_length"),
            hidden_layers=tuple(
                _as_int(w, f"{path}.hidden_layers[{i}]")
                for i, w in enumerate(_as_list(_require(doc, "hidden_layers", path), f"{path}.hidden_layers"))
            ),
            activation=_as_str(_require(doc, "activation", path), f"{path}.activation"),
            dropout_rate=_as_float(_require(doc, "dropout_rate", path), f"{path}.dropout_rate"),
        )


@dataclass(frozen=True)
class TrainHyperparams:
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 200
    val_fraction: float = 0.2
    dropout_rate: float = 0.1
    weight_decay: float = 0.0
    hidden_layers: tuple = (64, 64)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        # 0 is allowed: a zero step turns training into a pure evaluation loop
        if self.learning_rate < 0:
            raise ValidationError("hyperparams.learning_rate", "learning_rate must be >= 0", "learning_rate")
        if self.batch_size < 1:
            raise ValidationError("hyperparams.batch_size", "batch_size must be >= 1", "batch_size")
        # epochs 0 is allowed: it returns the initialization untouched
        if self.epochs < 0:
            raise ValidationError("hyperparams.epochs", "epochs must be >= 0", "epochs")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValidationError("hyperparams.val_fraction", "val_fraction must be in (0, 1)", "val_fraction")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("hyperparams.dropout_rate", "dropout_rate must be in [0, 1)", "dropout_rate")
        if self.weight_decay < 0:
            raise ValidationError("hyperparams.weight_decay", "weight_decay must be >= 0", "weight_decay")
        if any(w < 1 for w in self.hidden_layers):
            raise ValidationError("hyperparams.hidden_layers", "hidden widths must be >= 1", "hidden_layers")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "val_fraction": self.val_fraction,
            "dropout_rate": self.dropout_rate,
            "weight_decay": self.weight_decay,
            "hidden_layers": list(self.hidden_layers),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "hyperparams") -> "TrainHyperparams":
        defaults = cls()
        kwargs = {}
        for name in ("learning_rate", "val_fraction", "dropout_rate", "weight_decay"):
            kwargs[name] = _as_float(doc.get(name, getattr(defaults, name)), f"{path}.{name}")
        for name in ("batch_size", "epochs", "seed"):
            kwargs[name] = _as_int(doc.get(name, getattr(defaults, name)), f"{path}.{name}")
        hidden = doc.get("hidden_layers", list(defaults.hidden_layers))
        kwargs["hidden_layers"] = tuple(
            _as_int(w, f"{path}.hidden_layers[{i}]") for i, w in enumerate(_as_list(hidden, f"{path}.hidden_layers"))
        )
        return cls(**kwargs)


@dataclass(frozen=True)
class TrainingLog:
    train_loss: tuple = ()
    val_loss: tuple = ()
    metrics: Optional[dict] = None
    val_pairs: tuple = ()
    aborted: bool = False
    abort_reason: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "train_loss", tuple(float(v) for v in self.train_loss))
        object.__setattr__(self, "val_loss", tuple(float(v) for v in self.val_loss))
        object.__setattr__(self, "val_pairs", tuple(dict(p) for p in self.val_pairs))
        if len(self.train_loss) != len(self.val_loss):
            raise ValidationError("training_log.lengths", "loss curves must have equal length", "val_loss")

    @property
    def epochs_completed(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
            "metrics": dict(self.metrics) if self.metrics is not None else None,
            "val_pairs": [dict(p) for p in self.val_pairs],
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "training_log") -> "TrainingLog":
        return cls(
            train_loss=tuple(_require(doc, "train_loss", path)),
            val_loss=tuple(_require(doc, "val_loss", path)),
            metrics=doc.get("metrics"),
            val_pairs=tuple(doc.get("val_pairs", ())),
            aborted=bool(doc.get("aborted", False)),
            abort_reason=doc.get("abort_reason"),
        )


class ShadowModel:
    """Immutable trained surrogate: weights, normalization, provenance, log."""

    __slots__ = ("id", "template", "dt", "architecture", "weights", "norm_stats", "provenance", "training_log")

    def __init__(self, id, template, dt, architecture, weights, norm_stats, provenance, training_log=None):
        if architecture.input_dim != len(template.parameter_names):
            raise ValidationError(
                "model.input_dim", "architecture input_dim must match template parameter count", "architecture"
            )
        expected = architecture.layer_dims()
        if len(weights) != len(expected):
            raise ValidationError("model.layers", "weight list does not match architecture", "weights")
        clean = []
        for (w, b), (d_in, d_out) in zip(weights, expected):
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if w.shape != (d_in, d_out) or b.shape != (d_out,):
                raise ValidationError("model.shape", f"layer shape mismatch: {w.shape} vs {(d_in, d_out)}", "weights")
            w = w.copy()
            b = b.copy()
            w.setflags(write=False)
            b.setflags(write=False)
            clean.append((w, b))
        if provenance.get("kind") not in PROVENANCE_KINDS:
            raise ValidationError("model.provenance", f"provenance kind must be one of {PROVENANCE_KINDS}", "provenance")
        if dt <= 0:
            raise ValidationError("model.dt", "dt must be > 0", "dt")
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "template", template)
        object.__setattr__(self, "dt", float(dt))
        object.__setattr__(self, "architecture", architecture)
        object.__setattr__(self, "weights", tuple(clean))
        object.__setattr__(self, "norm_stats", norm_stats)
        object.__setattr__(self, "provenance", dict(provenance))
        object.__setattr__(self, "training_log", training_log)

    def __setattr__(self, *args):
        raise AttributeError("ShadowModel is immutable")

    @property
    def parameter_names(self) -> tuple:
        return self.template.parameter_names

    @property
    def skill_signature(self) -> str:
        return self.template.skill_signature()

    def normalize_params(self, x: np.ndarray) -> np.ndarray:
        mu, sd = self.norm_stats.param_arrays(self.parameter_names)
        return (np.asarray(x, dtype=float) - mu) / sd

    def denormalize_params(self, xn: np.ndarray) -> np.ndarray:
        mu, sd = self.norm_stats.param_arrays(self.parameter_names)
        return np.asarray(xn, dtype=float) * sd + mu

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "program_id": self.template.id,
            "skill_signature": self.skill_signature,
            "dt": self.dt,
            "template": self.template.to_dict(),
            "architecture": self.architecture.to_dict(),
            "weights": [{"w": w.tolist(), "b": b.tolist()} for w, b in self.weights],
            "norm_stats": self.norm_stats.to_dict(),
            "provenance": dict(self.provenance),
            "training_log": self.training_log.to_dict() if self.training_log else None,
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "model") -> "ShadowModel":
        log_doc = doc.get("training_log")
        return cls(
            id=_as_str(_require(doc, "id", path), f"{path}.id"),
            template=ProgramTemplate.from_dict(_require(doc, "template", path), f"{path}.template"),
            dt=_as_float(_require(doc, "dt", path), f"{path}.dt"),
            architecture=NetArchitecture.from_dict(_require(doc, "architecture", path), f"{path}.architecture"),
            weights=[
                (np.array(layer["w"], dtype=float), np.array(layer["b"], dtype=float))
                for layer in _as_list(_require(doc, "weights", path), f"{path}.weights")
            ],
            norm_stats=NormStats.from_dict(_require(doc, "norm_stats", path), f"{path}.norm_stats"),
            provenance=dict(_require(doc, "provenance", path)),
            training_log=TrainingLog.from_dict(log_doc, f"{path}.training_log") if log_doc else None,
        )


@dataclass(frozen=True)
class Prediction:
    """Denormalized model output at one parameter vector."""

    trajectory: Trajectory
    cycle_time: float
    success_probability: float

    def to_dict(self) -> dict:
        return {
            "trajectory": self.trajectory.to_dict(),
            "cycle_time": self.cycle_time,
            "success_probability": self.success_probability,
        }


@dataclass
class ForwardCache:
    """Every intermediate needed for an exact backward pass (and for LRP)."""

    mode: str
    x_norm: np.ndarray  # (m, P)
    activations: list  # a_0 .. a_L, post-dropout, a_0 = x_norm
    pre_activations: list  # z per hidden layer
    tanh_outputs: list  # h = tanh(z) per hidden layer, pre-dropout
    masks: list  # dropout masks per hidden layer (train mode), else None
    output: np.ndarray  # (m, output_dim)


def init_weights(architecture: NetArchitecture, rng: np.random.Generator) -> list:
    """Glorot-uniform weights, zero biases."""
    weights = []
    for d_in, d_out in architecture.layer_dims():
        limit = math.sqrt(6.0 / (d_in + d_out))
        weights.append((rng.uniform(-limit, limit, size=(d_in, d_out)), np.zeros(d_out)))
    return weights


def _forward_core(weights, architecture, x_norm, mode="eval", rng=None) -> ForwardCache:
    x_norm = np.atleast_2d(np.asarray(x_norm, dtype=float))
    if x_norm.shape[1] != architecture.input_dim:
        raise ValidationError("forward.shape", f"expected {architecture.input_dim} inputs", "x")
    if mode not in ("train", "eval"):
        raise ValidationError("forward.mode", "mode must be 'train' or 'eval'", "mode")
    if mode == "train" and architecture.dropout_rate > 0 and rng is None:
        raise ValidationError("forward.rng", "train mode with dropout needs an rng", "rng")

    keep = 1.0 - architecture.dropout_rate
    a = x_norm
    activations = [a]
    pre_activations, tanh_outputs, masks = [], [], []
    n_hidden = len(architecture.hidden_layers)
    for l in range(n_hidden):
        w, b = weights[l]
        z = a @ w + b
        h = np.tanh(z)
        if mode == "train" and architecture.dropout_rate > 0:
            mask = (rng.random(h.shape) < keep).astype(float) / keep
            a = h * mask
        else:
            mask = None
            a = h
        pre_activations.append(z)
        tanh_outputs.append(h)
        masks.append(mask)
        activations.append(a)
    w, b = weights[-1]
    output = a @ w + b
    return ForwardCache(
        mode=mode,
        x_norm=x_norm,
        activations=activations,
        pre_activations=pre_activations,
        tanh_outputs=tanh_outputs,
        masks=masks,
        output=output,
    )


def _backward_core(weights, architecture, cache: ForwardCache, d_output: np.ndarray):
    """Exact reverse-mode gradients; returns (per-layer (dW, db), d_x_norm)."""
    d_output = np.asarray(d_output, dtype=float)
    if d_output.shape != cache.output.shape:
        raise ValidationError("backward.shape", "upstream gradient shape mismatch", "upstream")
    grads = [None] * len(weights)
    g = d_output
    w_out, _ = weights[-1]
    grads[-1] = (cache.activations[-1].T @ g, g.sum(axis=0))
    da = g @ w_out.T
    for l in range(len(architecture.hidden_layers) - 1, -1, -1):
        if cache.masks[l] is not None:
            dh = da * cache.masks[l]
        else:
            dh = da
        h = cache.tanh_outputs[l]
        dz = dh * (1.0 - h * h)
        w_l, _ = weights[l]
        grads[l] = (cache.activations[l].T @ dz, dz.sum(axis=0))
        da = dz @ w_l.T
    return grads, da


def split_heads(architecture: NetArchitecture, output: np.ndarray):
    """output (m, D+2) -> (traj_norm (m, T, 4), time_norm (m,), logit (m,))."""
    d = architecture.trajectory_dim
    m = output.shape[0]
    return output[:, :d].reshape(m, architecture.pad_length, 4), output[:, d], output[:, d + 1]


def merge_head_grads(architecture: NetArchitecture, d_traj, d_time, d_logit) -> np.ndarray:
    d_traj = np.asarray(d_traj, dtype=float)
    m = d_traj.shape[0]
    out = np.empty((m, architecture.output_dim))
    out[:, : architecture.trajectory_dim] = d_traj.reshape(m, -1)
    out[:, architecture.trajectory_dim] = d_time
    out[:, architecture.trajectory_dim + 1] = d_logit
    return out


def denormalize_heads(model: ShadowModel, traj_norm, time_norm, logit):
    mu_c, sd_c = model.norm_stats.channel_arrays()
    traj = traj_norm * sd_c + mu_c
    time = time_norm * model.norm_stats.cycle_time.safe_std + model.norm_stats.cycle_time.mean
    return traj, time, sigmoid(logit)


def _prediction_from(model: ShadowModel, traj: np.ndarray, time: float, prob: float) -> Prediction:
    forces = np.maximum(traj[:, 3], 0.0)
    trajectory = Trajectory(
        dt=model.dt,
        positions=traj[:, :3],
        forces=forces,
        success=bool(prob > 0.5),
        skills=("",) * traj.shape[0],
        tags={},
        timestamp=EPOCH,
    )
    return Prediction(trajectory=trajectory, cycle_time=float(time), success_probability=float(prob))


def forward(model: ShadowModel, x: ParameterVector, mode: str = "eval", rng=None):
    """Run the net at one parameter vector; returns (Prediction, cache)."""
    model.template.validate_vector(x)
    cache = _forward_core(model.weights, model.architecture, model.normalize_params(x.to_array()), mode, rng)
    traj_n, time_n, logit = split_heads(model.architecture, cache.output)
    traj, time, prob = denormalize_heads(model, traj_n, time_n, logit)
    return _prediction_from(model, traj[0], float(time[0]), float(prob[0])), cache


def backward(model: ShadowModel, cache: ForwardCache, d_traj, d_time, d_logit):
    """Gradients of a scalar objective given its head gradients.

    d_traj is w.r.t. the denormalized trajectory array (T, 4), d_time w.r.t.
    seconds, d_logit w.r.t. the raw success logit. Returns (weight_grads,
    d_x_raw) with d_x_raw in original parameter units.
    """
    d_traj = np.asarray(d_traj, dtype=float)
    if d_traj.ndim == 2:
        d_traj = d_traj[None, :, :]
    expected = (cache.output.shape[0], model.architecture.pad_length, 4)
    if d_traj.shape != expected:
        raise ValidationError("backward.shape", f"d_traj must have shape {expected}", "upstream")
    _, sd_c = model.norm_stats.channel_arrays()
    d_traj_n = d_traj * sd_c
    d_time_n = np.atleast_1d(np.asarray(d_time, dtype=float)) * model.norm_stats.cycle_time.safe_std
    d_logit = np.atleast_1d(np.asarray(d_logit, dtype=float))
    d_out = merge_head_grads(model.architecture, d_traj_n, d_time_n, d_logit)
    grads, d_x_norm = _backward_core(model.weights, model.architecture, cache, d_out)
    _, sd_p = model.norm_stats.param_arrays(model.parameter_names)
    return grads, d_x_norm / sd_p


def predict(model: ShadowModel, x: ParameterVector) -> Prediction:
    """Eval-mode forward pass; pure and deterministic."""
    pred, _ = forward(model, x, mode="eval")
    return pred


# ---------------------------------------------------------------------------
# training


def _normalized_labels(dataset: Dataset, norm_stats: NormStats):
    mu_c, sd_c = norm_stats.channel_arrays()
    y_traj = (dataset.padded_channels() - mu_c) / sd_c
    ct = norm_stats.cycle_time
    y_time = (dataset.cycle_times() - ct.mean) / ct.safe_std
    y_succ = dataset.success_flags()
    return y_traj.reshape(len(dataset), -1), y_time, y_succ


def _data_loss_and_grad(output, architecture, y_traj, y_time, y_succ):
    """Per-record summed squared error (trajectory, time) + BCE, batch-meaned.

    The trajectory head is summed over its pad_length*4 outputs rather than
    averaged so its gradient scale does not shrink with pad_length; verdict
    rules downstream only ever compare loss ratios, which this leaves intact.
    """
    m = output.shape[0]
    d = architecture.trajectory_dim
    e_traj = output[:, :d] - y_traj
    e_time = output[:, d] - y_time
    logit = output[:, d + 1]
    loss = float(
        (np.sum(e_traj * e_traj) + np.sum(e_time * e_time) + np.sum(softplus(logit) - y_succ * logit)) / m
    )
    d_out = np.empty_like(output)
    d_out[:, :d] = 2.0 * e_traj / m
    d_out[:, d] = 2.0 * e_time / m
    d_out[:, d + 1] = (sigmoid(logit) - y_succ) / m
    return loss, d_out


def _eval_loss(weights, architecture, x_norm, y_traj, y_time, y_succ) -> float:
    cache = _forward_core(weights, architecture, x_norm, mode="eval")
    loss, _ = _data_loss_and_grad(cache.output, architecture, y_traj, y_time, y_succ)
    return loss


def _val_metrics(model_weights, architecture, norm_stats, x_norm, y_traj, y_time, y_succ) -> tuple[dict, list]:
    cache = _forward_core(model_weights, architecture, x_norm, mode="eval")
    traj_n, time_n, logit = split_heads(architecture, cache.output)
    mu_c, sd_c = norm_stats.channel_arrays()
    traj = traj_n * sd_c + mu_c
    labels = (y_traj.reshape(traj.shape)) * sd_c + mu_c
    pos_err = traj[:, :, :3] - labels[:, :, :3]
    traj_rmse = float(np.sqrt(np.mean(pos_err * pos_err)))
    ct = norm_stats.cycle_time
    time = time_n * ct.safe_std + ct.mean
    time_labels = y_time * ct.safe_std + ct.mean
    time_mae = float(np.mean(np.abs(time - time_labels)))
    prob = sigmoid(logit)
    accuracy = float(np.mean((prob > 0.5) == (y_succ > 0.5)))
    pairs = [
        {
            "cycle_time_pred": float(time[i]),
            "cycle_time_label": float(time_labels[i]),
            "success_probability": float(prob[i]),
            "success_label": bool(y_succ[i] > 0.5),
        }
        for i in range(min(len(prob), 200))
    ]
    return {"traj_rmse": traj_rmse, "time_mae": time_mae, "success_accuracy": accuracy}, pairs


def train(
    dataset: Dataset,
    hp: TrainHyperparams = TrainHyperparams(),
    template: ProgramTemplate | None = None,
    init: str = "scratch",
    base: ShadowModel | None = None,
    model_id: str | None = None,
    progress: Optional[Callable] = None,
    should_stop: Optional[Callable] = None,
) -> ShadowModel:
    """Mini-batch SGD on the three-head loss; deterministic given hp.seed.

    init 'scratch' draws fresh weights and uses the dataset's norm stats;
    'finetune' continues from the base model's weights and keeps the base
    norm stats (the weights only make sense under them); 'as_is' skips
    training entirely and re-evaluates the base on this dataset's split.
    progress(epoch, total, train_loss, val_loss) is called per epoch;
    should_stop() is polled between epochs for cancellation.
    """
    from .simulate import gearbox_template

    template = template or gearbox_template()
    if template.id != dataset.program_id:
        raise ValidationError(
            "train.template_mismatch",
            f"dataset belongs to program {dataset.program_id!r}, template is {template.id!r}",
            "program_id",
        )
    if init not in INIT_MODES:
        raise ValidationError("train.init", f"init must be one of {INIT_MODES}", "init")
    if init in ("as_is", "finetune"):
        if base is None:
            raise ValidationError("train.base_required", f"init {init!r} requires a base model", "base")
        if base.skill_signature != template.skill_signature():
            raise DomainRuleError(
                "train.signature_mismatch",
                "base model skill signature does not match the target program",
            )
        if base.architecture.pad_length != dataset.pad_length:
            raise ValidationError(
                "train.pad_length_mismatch",
                f"base model expects pad_length {base.architecture.pad_length}, dataset has {dataset.pad_length}",
                "pad_length",
            )

    if init == "scratch":
        architecture = NetArchitecture(
            input_dim=len(template.parameter_names),
            pad_length=dataset.pad_length,
            hidden_layers=hp.hidden_layers,
            dropout_rate=hp.dropout_rate,
        )
        norm_stats = dataset.norm_stats
        provenance = {"kind": "from_scratch"}
    else:
        architecture = NetArchitecture(
            input_dim=base.architecture.input_dim,
            pad_length=base.architecture.pad_length,
            hidden_layers=base.architecture.hidden_layers,
            dropout_rate=hp.dropout_rate,
        )
        norm_stats = base.norm_stats
        provenance = {"kind": "base" if init == "as_is" else "finetuned", "base_id": base.id}

    mu_p, sd_p = norm_stats.param_arrays(template.parameter_names)
    x_norm = (dataset.parameter_matrix() - mu_p) / sd_p
    y_traj, y_time, y_succ = _normalized_labels(dataset, norm_stats)

    seed_root = np.random.SeedSequence(hp.seed)
    init_ss, loop_ss = seed_root.spawn(2)
    if init == "scratch":
        weights = init_weights(architecture, np.random.default_rng(init_ss))
    else:
        weights = [(w.copy(), b.copy()) for w, b in base.weights]

    n = len(dataset)
    rng = np.random.default_rng(loop_ss)
    perm = rng.permutation(n)
    n_val = max(1, int(math.ceil(hp.val_fraction * n)))
    if n_val >= n:
        raise DomainRuleError("train.too_small", f"dataset of {n} records cannot support a validation split")
    val_idx = perm[n - n_val :]
    train_idx = perm[: n - n_val]

    xv, yv_traj, yv_time, yv_succ = x_norm[val_idx], y_traj[val_idx], y_time[val_idx], y_succ[val_idx]
    xt, yt_traj, yt_time, yt_succ = x_norm[train_idx], y_traj[train_idx], y_time[train_idx], y_succ[train_idx]

    train_losses: list[float] = []
    val_losses: list[float] = []
    aborted = False
    abort_reason = None

    epochs = 0 if init == "as_is" else hp.epochs
    for epoch in range(epochs):
        snapshot = [(w.copy(), b.copy()) for w, b in weights]
        order = rng.permutation(len(train_idx))
        batch_losses = []
        for start in range(0, len(order), hp.batch_size):
            idx = order[start : start + hp.batch_size]
            cache = _forward_core(weights, architecture, xt[idx], mode="train", rng=rng)
            loss, d_out = _data_loss_and_grad(cache.output, architecture, yt_traj[idx], yt_time[idx], yt_succ[idx])
            grads, _ = _backward_core(weights, architecture, cache, d_out)
            for l, (gw, gb) in enumerate(grads):
                w, b = weights[l]
                if hp.weight_decay > 0:
                    gw = gw + 2.0 * hp.weight_decay * w
                weights[l] = (w - hp.learning_rate * gw, b - hp.learning_rate * gb)
            batch_losses.append(loss)
        train_loss = float(np.mean(batch_losses))
        val_loss = _eval_loss(weights, architecture, xv, yv_traj, yv_time, yv_succ)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            weights = snapshot  # keep the last finite state
            aborted = True
            abort_reason = f"non-finite loss at epoch {epoch + 1}"
            break
        train_losses.append(train_loss)
        val_losses.append(val_loss)
        if progress is not None:
            progress(epoch + 1, epochs, train_loss, val_loss)
        if should_stop is not None and should_stop():
            break

    metrics, pairs = _val_metrics(weights, architecture, norm_stats, xv, yv_traj, yv_time, yv_succ)
    log = TrainingLog(
        train_loss=train_losses,
        val_loss=val_losses,
        metrics=metrics,
        val_pairs=pairs,
        aborted=aborted,
        abort_reason=abort_reason,
    )
    return ShadowModel(
        id=model_id or new_id("model"),
        template=template,
        dt=dataset.dt,
        architecture=architecture,
        weights=weights,
        norm_stats=norm_stats,
        provenance=provenance,
        training_log=log,
    )
