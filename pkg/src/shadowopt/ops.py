"""Workflow operations shared by the HTTP service and the CLI.

Each operation validates its already-schema-checked body, runs the library
call, persists through the store, and returns the wire-format response dict.
Keeping the CLI and the service on these exact functions is what guarantees
the two front ends cannot drift apart.
"""

from __future__ import annotations

import hashlib
import threading
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import lrp as lrp_mod
from . import net as net_mod
from . import quality as quality_mod
from .core import (
    Dataset,
    DatasetFilter,
    ExecutionRecord,
    NormStats,
    ParameterVector,
    ProgramTemplate,
    build_dataset,
    cycle_time,
    format_rfc3339,
    new_id,
)
from .diagnostics import classify
from .errors import ConflictError, DomainRuleError, ShadowOptError, ValidationError
from .jobs import JobManager
from .net import Prediction, ShadowModel, TrainHyperparams
from .optimize import ObjectiveSpec, OptimizerHyperparams, objective_value, optimize, what_if
from .quality import QualityThresholds
from .simulate import SimConfig, batch_execute, execute, gearbox_template
from .store import Store


def _now() -> str:
    return format_rfc3339(datetime.now(timezone.utc))


def _idem_slot(scope: str, key: str) -> str:
    return hashlib.sha256(f"{scope}\x00{key}".encode()).hexdigest()[:32]


class AppContext:
    """Store + job manager + the in-memory execution log mirror."""

    def __init__(self, data_dir: str, thresholds: QualityThresholds = QualityThresholds()):
        self.thresholds = thresholds
        self.store = Store(data_dir)
        self.jobs = JobManager(self.store)
        self.exec_lock = threading.RLock()
        self.executions = [
            ExecutionRecord.from_dict(doc, f"executions[{i}]")
            for i, doc in enumerate(self.store.load_executions())
        ]

    def template(self, program_id: str) -> ProgramTemplate:
        return ProgramTemplate.from_dict(self.store.load("programs", program_id))

    def dataset(self, dataset_id: str) -> tuple[Dataset, dict]:
        doc = self.store.load("datasets", dataset_id)
        with self.exec_lock:
            log = self.executions
            records = []
            for i in doc["record_indices"]:
                if not 0 <= i < len(log):
                    raise ShadowOptError("dataset.torn", f"dataset {dataset_id!r} references missing execution {i}")
                records.append(log[i])
        ds_doc = doc["dataset"]
        dataset = Dataset(
            id=ds_doc["id"],
            name=ds_doc["name"],
            program_id=ds_doc["program_id"],
            records=tuple(records),
            pad_length=ds_doc["pad_length"],
            filter=DatasetFilter.from_dict(ds_doc["filter"]),
            norm_stats=NormStats.from_dict(ds_doc["norm_stats"]),
        )
        return dataset, doc

    def model(self, model_id: str) -> tuple[ShadowModel, dict]:
        doc = self.store.load("models", model_id)
        return ShadowModel.from_dict(doc["model"]), doc

    def idempotent_response(self, scope: str, key: Optional[str]) -> Optional[dict]:
        if not key:
            return None
        slot = _idem_slot(scope, key)
        if self.store.exists("idempotency", slot):
            return self.store.load("idempotency", slot)["response"]
        return None

    def remember_idempotent(self, scope: str, key: Optional[str], response: dict) -> None:
        if key:
            self.store.save("idempotency", _idem_slot(scope, key), {"scope": scope, "key": key, "response": response})


# --- responses ---


def model_response(doc: dict) -> dict:
    model = doc["model"]
    log = model.get("training_log")
    training = None
    val_pairs = []
    if log is not None:
        training = {
            "train_loss": log["train_loss"],
            "val_loss": log["val_loss"],
            "metrics": log.get("metrics"),
            "aborted": log.get("aborted", False),
            "abort_reason": log.get("abort_reason"),
        }
        val_pairs = log.get("val_pairs") or []
    return {
        "id": doc["id"],
        "dataset_id": doc.get("dataset_id"),
        "program_id": model["program_id"],
        "skill_signature": model["skill_signature"],
        "init": doc.get("init", model.get("provenance", {}).get("kind", "scratch")),
        "architecture": model["architecture"],
        "hyperparams": doc.get("hyperparams", TrainHyperparams().to_dict()),
        "provenance": model.get("provenance", {}),
        "verdict": doc.get("verdict"),
        "training": training,
        "val_pairs": val_pairs,
        "created_at": doc.get("created_at", _now()),
    }


def dataset_response(stored: dict) -> dict:
    doc = dict(stored["dataset"])
    doc["quality_ok"] = stored["quality"]["overall_ok"]
    doc["created_at"] = stored["created_at"]
    return doc


def _downsample(values: list, limit: int = 200) -> list:
    stride = max(1, -(-len(values) // limit))
    return values[::stride]


# --- programs and executions ---


def register_program(ctx: AppContext, doc: dict) -> tuple[dict, bool]:
    """Create or idempotently re-create a program; returns (doc, created)."""
    template = ProgramTemplate.from_dict(doc, "program")
    stored = template.to_dict()
    if ctx.store.exists("programs", template.id):
        existing = ctx.store.load("programs", template.id)
        if existing == stored:
            return existing, False
        raise ConflictError("program.exists", f"program {template.id!r} exists with different content", "id")
    ctx.store.save("programs", template.id, stored)
    return stored, True


def ingest_records(ctx: AppContext, records: list, idempotency_key: Optional[str] = None) -> dict:
    cached = ctx.idempotent_response("executions", idempotency_key)
    if cached is not None:
        return cached
    for record in records:
        template = ctx.template(record.program_id)
        template.validate_vector(record.parameters)
    with ctx.exec_lock:
        ctx.store.append_executions([r.to_dict() for r in records])
        ctx.executions.extend(records)
        total = len(ctx.executions)
    response = {"added": len(records), "total": total}
    ctx.remember_idempotent("executions", idempotency_key, response)
    return response


def list_executions(ctx: AppContext, filter_doc: dict, program_id: Optional[str], limit: int = 1000) -> dict:
    dataset_filter = DatasetFilter.from_dict(filter_doc, "filter")
    with ctx.exec_lock:
        log = list(ctx.executions)
    selected = [
        r for r in log if (program_id is None or r.program_id == program_id) and dataset_filter.matches(r)
    ]
    return {"count": len(selected), "records": [r.to_dict() for r in selected[:limit]]}


# --- datasets ---


def create_dataset(ctx: AppContext, doc: dict) -> dict:
    key = doc.pop("idempotency_key", None)
    cached = ctx.idempotent_response("datasets", key)
    if cached is not None:
        return cached
    template = ctx.template(doc["program_id"])
    dataset_filter = DatasetFilter.from_dict(doc.get("filter", {}), "filter")
    with ctx.exec_lock:
        log = list(ctx.executions)
    dataset_id = new_id("ds")
    dataset = build_dataset(
        dataset_id,
        doc.get("name") or dataset_id,
        template,
        log,
        dataset_filter,
        doc.get("pad_length"),
    )
    report = quality_mod.analyze(dataset, template, ctx.thresholds)
    if not report.overall_ok and not doc.get("override", False):
        bad = ", ".join(p.name for p in report.per_parameter if not p.sufficient)
        detail = bad or f"outlier fraction {report.outlier_fraction:.2f}"
        raise DomainRuleError(
            "dataset.quality",
            f"dataset quality is insufficient ({detail}); pass override=true to keep it",
            "override",
        )
    by_identity = {id(record): i for i, record in enumerate(log)}
    stored = {
        "id": dataset_id,
        "dataset": dataset.to_dict(include_records=False),
        "record_indices": [by_identity[id(record)] for record in dataset.records],
        "quality": report.to_dict(),
        "override": bool(doc.get("override", False)),
        "created_at": _now(),
    }
    ctx.store.save("datasets", dataset_id, stored)
    response = dataset_response(stored)
    ctx.remember_idempotent("datasets", key, response)
    return response


def dataset_summary(ctx: AppContext, dataset_id: str) -> dict:
    dataset, doc = ctx.dataset(dataset_id)
    template = ctx.template(dataset.program_id)
    report = doc["quality"]
    by_name = {p["name"]: p for p in report["per_parameter"]}
    parameters = []
    for spec in template.parameter_specs:
        q = by_name.get(spec.name)
        if q is None:
            continue
        parameters.append(
            {
                "name": spec.name,
                "unit": spec.unit,
                "lower_bound": spec.lower_bound,
                "upper_bound": spec.upper_bound,
                "min": q["min"],
                "max": q["max"],
                "quartiles": q["quartiles"],
                "sufficient": q["sufficient"],
                "message_key": q.get("message_key", ""),
                "message": q.get("message", ""),
            }
        )
    times = dataset.cycle_times()
    plots = []
    for i, record in enumerate(dataset.records[:24]):
        traj = record.trajectory
        plots.append(
            {
                "index": i,
                "success": traj.success,
                "dt": traj.dt,
                "positions": [[float(v) for v in p] for p in _downsample(traj.positions.tolist())],
                "forces": [float(f) for f in _downsample(traj.forces.tolist())],
            }
        )
    return {
        "id": dataset.id,
        "name": dataset.name,
        "program_id": dataset.program_id,
        "record_count": len(dataset),
        "success_count": report["success_count"],
        "fail_count": report["fail_count"],
        "pad_length": dataset.pad_length,
        "mean_parameters": dict(dataset.mean_parameters().values),
        "parameters": parameters,
        "cycle_time": {"min": float(times.min()), "mean": float(times.mean()), "max": float(times.max())},
        "plots": plots,
    }


# --- training ---


class TrainPlan:
    def __init__(self, ctx: AppContext, doc: dict):
        self.dataset, self.dataset_doc = ctx.dataset(doc["dataset_id"])
        self.template = ctx.template(self.dataset.program_id)
        self.hp = TrainHyperparams.from_dict(doc.get("hyperparams", {}), "hyperparams")
        self.init = doc.get("init", "scratch")
        self.base = None
        if self.init in ("finetune", "as_is"):
            base_id = doc.get("base_id")
            if not base_id:
                raise ValidationError("model.base_id", f"init {self.init!r} requires base_id", "base_id")
            self.base, _ = ctx.model(base_id)
        self.model_id = new_id("model")


def execute_training(ctx: AppContext, plan: TrainPlan, progress=None, should_stop=None) -> str:
    """Train, attach the verdict, persist the model envelope; returns model id."""
    model = net_mod.train(
        plan.dataset,
        plan.hp,
        template=plan.template,
        init=plan.init,
        base=plan.base,
        model_id=plan.model_id,
        progress=progress,
        should_stop=should_stop,
    )
    verdict = None
    if model.training_log is not None:
        try:
            report = quality_mod.analyze(plan.dataset, plan.template, ctx.thresholds)
            verdict = classify(model.training_log, plan.hp, report).to_dict()
        except ValidationError:
            verdict = None  # too few epochs for a meaningful verdict
    stored = {
        "id": model.id,
        "dataset_id": plan.dataset.id,
        "init": plan.init,
        "hyperparams": plan.hp.to_dict(),
        "verdict": verdict,
        "created_at": _now(),
        "model": model.to_dict(),
    }
    ctx.store.save("models", model.id, stored)
    return model.id


# --- explanation and prediction ---


def resolve_probe(ctx: AppContext, stored: dict, x_doc) -> ParameterVector:
    if x_doc:
        return ParameterVector.from_dict(x_doc, "x")
    dataset_id = stored.get("dataset_id")
    if not dataset_id:
        raise ValidationError("probe.missing", "x is required for a model without a training dataset", "x")
    dataset, _ = ctx.dataset(dataset_id)
    return dataset.mean_parameters()


def lrp_payload(ctx: AppContext, model_id: str, doc: dict) -> dict:
    model, stored = ctx.model(model_id)
    probe = resolve_probe(ctx, stored, doc.get("x"))
    heads = [doc["head"]] if doc.get("head") else list(lrp_mod.HEADS)
    reports = {}
    bars = {}
    for head in heads:
        report = lrp_mod.relevance(model, probe, head)
        reports[head] = report.to_dict()
        values = np.array([report.relevances[n] for n in model.parameter_names])
        top = float(np.abs(values).max())
        bars[head] = [
            {
                "parameter": name,
                "relevance": float(v),
                "normalized_magnitude": float(abs(v) / top) if top > 0 else 0.0,
            }
            for name, v in zip(model.parameter_names, values)
        ]
    return {"probe_x": dict(probe.values), "reports": reports, "bars": bars}


def predict_payload(ctx: AppContext, model_id: str, doc: dict) -> dict:
    model, _ = ctx.model(model_id)
    x = ParameterVector.from_dict(doc["x"], "x")
    return net_mod.predict(model, x).to_dict()


def whatif_payload(ctx: AppContext, doc: dict) -> dict:
    model, _ = ctx.model(doc["model_id"])
    spec = ObjectiveSpec.from_dict(doc.get("spec", {}), "spec")
    x = ParameterVector.from_dict(doc["x"], "x")
    return what_if(model, x, spec).to_dict()


# --- optimization ---


class OptimizationPlan:
    def __init__(self, ctx: AppContext, doc: dict):
        self.model, stored = ctx.model(doc["model_id"])
        self.spec = ObjectiveSpec.from_dict(doc.get("spec", {}), "spec")
        self.hp = OptimizerHyperparams.from_dict(doc.get("hyperparams", {}))
        self.x_init = resolve_probe(ctx, stored, doc.get("x_init"))
        self.run_id = new_id("run")


def execute_optimization(ctx: AppContext, plan: OptimizationPlan, progress=None, should_stop=None) -> str:
    run = optimize(
        plan.model,
        plan.x_init,
        plan.spec,
        plan.hp,
        run_id=plan.run_id,
        progress=progress,
        should_stop=should_stop,
    )
    ctx.store.save(
        "optimizations",
        run.id,
        {"id": run.id, "model_id": plan.model.id, "created_at": _now(), "run": run.to_dict()},
    )
    return run.id


# --- simulator-verified objectives ---


def simulated_prediction(x: ParameterVector, config: SimConfig, seed: int = 0) -> Prediction:
    """Ground-truth stand-in for the model output at x: one simulator run."""
    record = execute(x, config, seed=seed)
    traj = record.trajectory
    return Prediction(
        trajectory=traj,
        cycle_time=cycle_time(traj),
        success_probability=1.0 if traj.success else 0.0,
    )


def simulated_objective(x: ParameterVector, spec: ObjectiveSpec, config: SimConfig, seed: int = 0):
    """(objectives, total) of the weighted objective on a real simulator run."""
    return objective_value(simulated_prediction(x, config, seed), spec)


# --- demo ---

DEMO_RECORDS = 500
DEMO_HP = {"epochs": 150, "dropout_rate": 0.0}
# bolder steps than the service default: the noise-free objective surface is
# smooth and the run should actually reach the basin floor
DEMO_OPT_HP = {"step_size": 0.15, "iterations": 300}


def demo_sim_config() -> SimConfig:
    # noise-free cell so the scripted scenario is exactly reproducible
    return SimConfig(hole_offset_sigma=0.0, noise_amp=0.0)


def demo_objective_spec() -> ObjectiveSpec:
    return ObjectiveSpec()  # cycle time + success + force threshold at 25 N


def run_demo(ctx: AppContext, seed: int, progress=None) -> dict:
    """The scripted gearbox scenario: simulate, ingest, train, explain, optimize.

    Deterministic given the seed; the returned document includes the model's
    verdict, LRP bars at the dataset mean, the optimized parameters and a
    simulator-verified objective at both x_init and x_best.
    """

    def note(message: str) -> None:
        if progress is not None:
            progress(message)

    config = demo_sim_config()
    template = gearbox_template()
    register_program(ctx, template.to_dict())

    note(f"simulating {DEMO_RECORDS} executions (seed {seed})")
    records = batch_execute(DEMO_RECORDS, "uniform-random", None, config, seed=seed)
    ingest_records(ctx, records, idempotency_key=f"demo-sim-{seed}")

    note("building dataset")
    dataset_doc = create_dataset(
        ctx,
        {"program_id": template.id, "name": f"demo-{seed}", "idempotency_key": f"demo-ds-{seed}"},
    )
    dataset_id = dataset_doc["id"]

    note("training shadow model")
    hp_doc = dict(DEMO_HP, seed=seed)
    plan = TrainPlan(ctx, {"dataset_id": dataset_id, "init": "scratch", "hyperparams": hp_doc})

    def train_hook(epoch, total, train_loss, val_loss):
        if epoch == total or epoch % max(1, total // 10) == 0:
            note(f"epoch {epoch}/{total} train {train_loss:.1f} val {val_loss:.1f}")

    model_id = execute_training(ctx, plan, progress=train_hook)
    model_doc = ctx.store.load("models", model_id)

    note("computing input attributions")
    lrp_doc = lrp_payload(ctx, model_id, {})

    note("optimizing parameters")
    spec = demo_objective_spec()
    opt_plan = OptimizationPlan(
        ctx,
        {"model_id": model_id, "spec": spec.to_dict(), "hyperparams": dict(DEMO_OPT_HP)},
    )

    def opt_hook(iteration, total):
        if iteration == total or iteration % max(1, total // 5) == 0:
            note(f"iteration {iteration}/{total}")

    run_id = execute_optimization(ctx, opt_plan, progress=opt_hook)
    run_doc = ctx.store.load("optimizations", run_id)["run"]

    note("verifying on the simulator")
    x_init = ParameterVector.from_dict(run_doc["x_init"], "x_init")
    x_best = ParameterVector.from_dict(run_doc["x_best"], "x_best")
    init_objectives, init_total = simulated_objective(x_init, spec, config)
    best_objectives, best_total = simulated_objective(x_best, spec, config)
    best_record = execute(x_best, config)

    best_iteration = run_doc["iterations"][run_doc["best_index"]]
    return {
        "seed": seed,
        "config": config.to_dict(),
        "dataset": {
            "id": dataset_id,
            "record_count": dataset_doc["record_count"],
            "pad_length": dataset_doc["pad_length"],
            "quality_ok": dataset_doc["quality_ok"],
        },
        "model": {
            "id": model_id,
            "verdict": (model_doc.get("verdict") or {}).get("label"),
            "metrics": (model_doc["model"].get("training_log") or {}).get("metrics"),
        },
        "lrp": lrp_doc,
        "optimization": {
            "run_id": run_id,
            "best_index": run_doc["best_index"],
            "x_init": run_doc["x_init"],
            "x_best": run_doc["x_best"],
            "predicted": {
                "objectives": best_iteration["objectives"],
                "total": best_iteration["total"],
            },
        },
        "verified": {
            "x_init": {"objectives": init_objectives, "total": init_total},
            "x_best": {
                "objectives": best_objectives,
                "total": best_total,
                "success": best_record.trajectory.success,
                "cycle_time": cycle_time(best_record.trajectory),
                "peak_force": float(np.max(best_record.trajectory.forces)),
            },
            "improvement": 1.0 - (best_total / init_total) if init_total > 0 else 0.0,
        },
    }
