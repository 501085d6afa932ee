"""JSON Schemas for every HTTP body, plus the Guided/Expert capability descriptor.

Request schemas set additionalProperties: false so unknown fields are rejected
on writes; response schemas are published under GET /schemas and asserted by
the integration tests. The capability descriptor enumerates every tunable
field per workflow step with defaults, bounds and an expert_only flag so the
UI can build its forms without hardcoding.
"""

from __future__ import annotations

import jsonschema

from .errors import ValidationError
from .lrp import HEADS
from .net import TrainHyperparams
from .optimize import OBJECTIVES, ObjectiveSpec, OptimizerHyperparams

# --- shared fragments ---

_ID = {"type": "string", "minLength": 1, "maxLength": 128}
_PARAMS = {"type": "object", "additionalProperties": {"type": "number"}, "minProperties": 1}
_TAGS = {"type": "object", "additionalProperties": {"type": "string"}}
_SAMPLE = {
    "type": "object",
    "properties": {
        "p": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "f": {"type": "number"},
    },
    "required": ["p", "f"],
    "additionalProperties": False,
}
_TRAJECTORY_IN = {
    "type": "object",
    "properties": {
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "array", "items": _SAMPLE, "minItems": 1},
        "success": {"type": "boolean"},
        "skills": {"type": "array", "items": {"type": "string"}},
        "tags": _TAGS,
        "ts": {"type": "string"},
    },
    "required": ["dt", "samples", "success", "skills", "ts"],
    "additionalProperties": False,
}
_TRAIN_HP = {
    "type": "object",
    "properties": {
        "learning_rate": {"type": "number", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "epochs": {"type": "integer", "minimum": 0},
        "val_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "dropout_rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "weight_decay": {"type": "number", "minimum": 0},
        "hidden_layers": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 0},
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}
_OBJECTIVE_SPEC = {
    "type": "object",
    "properties": {
        "cycle_time_enabled": {"type": "boolean"},
        "cycle_time_weight": {"type": "number", "minimum": 0},
        "path_length_enabled": {"type": "boolean"},
        "path_length_weight": {"type": "number", "minimum": 0},
        "success_enabled": {"type": "boolean"},
        "success_weight": {"type": "number", "minimum": 0},
        "force_threshold_enabled": {"type": "boolean"},
        "force_threshold_weight": {"type": "number", "minimum": 0},
        "force_threshold": {"type": ["number", "null"]},
    },
    "additionalProperties": False,
}
_OPT_HP = {
    "type": "object",
    "properties": {
        "step_size": {"type": "number", "minimum": 0},
        "iterations": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}
_FILTER = {
    "type": "object",
    "properties": {
        "time_from": {"type": ["string", "null"]},
        "time_to": {"type": ["string", "null"]},
        "tag_equals": _TAGS,
    },
    "additionalProperties": False,
}
_PARAMETER_SPEC_IN = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "unit": {"type": "string"},
        "lower_bound": {"type": "number"},
        "upper_bound": {"type": "number"},
        "skill": {"type": "string"},
        "expert_only": {"type": "boolean"},
    },
    "required": ["name", "unit", "lower_bound", "upper_bound", "skill"],
    "additionalProperties": False,
}

REQUEST_SCHEMAS = {
    "program.create": {
        "type": "object",
        "properties": {
            "id": _ID,
            "skill_sequence": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "parameter_specs": {"type": "array", "items": _PARAMETER_SPEC_IN, "minItems": 1},
            "idempotency_key": _ID,
        },
        "required": ["id", "skill_sequence", "parameter_specs"],
        "additionalProperties": False,
    },
    "execution.create": {
        "type": "object",
        "properties": {
            "program_id": _ID,
            "parameters": _PARAMS,
            "trajectory": _TRAJECTORY_IN,
        },
        "required": ["program_id", "parameters", "trajectory"],
        "additionalProperties": False,
    },
    "dataset.create": {
        "type": "object",
        "properties": {
            "name": {"type": "string"},
            "program_id": _ID,
            "filter": _FILTER,
            "pad_length": {"type": ["integer", "null"], "minimum": 1},
            "override": {"type": "boolean"},
            "idempotency_key": _ID,
        },
        "required": ["program_id"],
        "additionalProperties": False,
    },
    "model.create": {
        "type": "object",
        "properties": {
            "dataset_id": _ID,
            "init": {"enum": ["scratch", "finetune", "as_is"]},
            "base_id": {"type": ["string", "null"]},
            "hyperparams": _TRAIN_HP,
            "idempotency_key": _ID,
        },
        "required": ["dataset_id"],
        "additionalProperties": False,
    },
    "lrp.request": {
        "type": "object",
        "properties": {
            "x": {"anyOf": [_PARAMS, {"type": "null"}]},
            "head": {"enum": list(HEADS) + [None]},
        },
        "additionalProperties": False,
    },
    "predict.request": {
        "type": "object",
        "properties": {"x": _PARAMS},
        "required": ["x"],
        "additionalProperties": False,
    },
    "optimization.create": {
        "type": "object",
        "properties": {
            "model_id": _ID,
            "x_init": {"anyOf": [_PARAMS, {"type": "null"}]},
            "spec": _OBJECTIVE_SPEC,
            "hyperparams": _OPT_HP,
            "idempotency_key": _ID,
        },
        "required": ["model_id"],
        "additionalProperties": False,
    },
    "whatif.request": {
        "type": "object",
        "properties": {
            "model_id": _ID,
            "x": _PARAMS,
            "spec": _OBJECTIVE_SPEC,
        },
        "required": ["model_id", "x"],
        "additionalProperties": False,
    },
    "session.create": {
        "type": "object",
        "properties": {
            "program_id": _ID,
            "target_skills": {"type": "array", "items": {"type": "string"}},
            "idempotency_key": _ID,
        },
        "required": ["program_id"],
        "additionalProperties": False,
    },
    "session.update": {
        "type": "object",
        "properties": {
            "step": {"enum": ["dataset", "training", "optimization"]},
            "dataset_id": _ID,
            "model_id": _ID,
            "run_id": _ID,
        },
        "additionalProperties": False,
    },
}

# --- response schemas ---

_ERROR = {
    "type": "object",
    "properties": {
        "code": {
            "enum": [
                "internal_error",
                "validation_error",
                "parse_error",
                "domain_rule_violation",
                "not_found",
                "conflict",
            ]
        },
        "key": {"type": "string"},
        "message": {"type": "string"},
        "field_path": {"type": ["string", "null"]},
    },
    "required": ["code", "key", "message", "field_path"],
    "additionalProperties": False,
}
_TRAJECTORY_OUT = dict(_TRAJECTORY_IN, required=["dt", "samples", "success", "skills", "tags", "ts"])
_EXECUTION_OUT = {
    "type": "object",
    "properties": {"program_id": _ID, "parameters": _PARAMS, "trajectory": _TRAJECTORY_OUT},
    "required": ["program_id", "parameters", "trajectory"],
    "additionalProperties": False,
}
_PROGRAM_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "skill_sequence": {"type": "array", "items": {"type": "string"}},
        "parameter_specs": {"type": "array", "items": _PARAMETER_SPEC_IN},
        "skill_signature": {"type": "string"},
    },
    "required": ["id", "skill_sequence", "parameter_specs"],
    "additionalProperties": False,
}
_MOMENT = {
    "type": "object",
    "properties": {"mean": {"type": "number"}, "stddev": {"type": "number"}},
    "required": ["mean", "stddev"],
    "additionalProperties": False,
}
_NORM_STATS = {
    "type": "object",
    "properties": {
        "params": {"type": "object", "additionalProperties": _MOMENT},
        "channels": {"type": "object", "additionalProperties": _MOMENT},
        "cycle_time": _MOMENT,
    },
    "required": ["params", "channels", "cycle_time"],
    "additionalProperties": False,
}
_DATASET_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "name": {"type": "string"},
        "program_id": _ID,
        "record_count": {"type": "integer", "minimum": 1},
        "pad_length": {"type": "integer", "minimum": 1},
        "filter": _FILTER,
        "norm_stats": _NORM_STATS,
        "quality_ok": {"type": "boolean"},
        "created_at": {"type": "string"},
    },
    "required": ["id", "name", "program_id", "record_count", "pad_length", "filter", "norm_stats"],
    "additionalProperties": False,
}
_QUALITY_OUT = {
    "type": "object",
    "properties": {
        "per_parameter": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "min": {"type": "number"},
                    "max": {"type": "number"},
                    "quartiles": {
                        "type": "object",
                        "properties": {
                            "q1": {"type": "number"},
                            "median": {"type": "number"},
                            "q3": {"type": "number"},
                        },
                        "required": ["q1", "median", "q3"],
                        "additionalProperties": False,
                    },
                    "coverage_ratio": {"type": "number"},
                    "distinct_values": {"type": "integer"},
                    "sufficient": {"type": "boolean"},
                    "message_key": {"type": "string"},
                    "message": {"type": "string"},
                },
                "required": ["name", "min", "max", "quartiles", "coverage_ratio", "sufficient"],
                "additionalProperties": False,
            },
        },
        "outlier_indices": {"type": "array", "items": {"type": "integer"}},
        "outlier_fraction": {"type": "number"},
        "success_count": {"type": "integer"},
        "fail_count": {"type": "integer"},
        "overall_ok": {"type": "boolean"},
    },
    "required": ["per_parameter", "outlier_indices", "success_count", "fail_count", "overall_ok"],
    "additionalProperties": False,
}
_VERDICT_OUT = {
    "type": "object",
    "properties": {
        "label": {
            "enum": [
                "good_performance",
                "overfitting",
                "underfitting",
                "regularization",
                "erroneous_training_data",
            ]
        },
        "evidence": {"type": "object"},
        "explanation_key": {"type": "string"},
        "message": {"type": "string"},
    },
    "required": ["label", "evidence", "explanation_key", "message"],
    "additionalProperties": False,
}
_VAL_PAIR = {
    "type": "object",
    "properties": {
        "cycle_time_pred": {"type": "number"},
        "cycle_time_label": {"type": "number"},
        "success_probability": {"type": "number"},
        "success_label": {"type": "boolean"},
    },
    "required": ["cycle_time_pred", "cycle_time_label", "success_probability", "success_label"],
    "additionalProperties": False,
}
_MODEL_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "dataset_id": {"type": ["string", "null"]},
        "program_id": _ID,
        "skill_signature": {"type": "string"},
        "init": {"enum": ["scratch", "finetune", "as_is"]},
        "architecture": {
            "type": "object",
            "properties": {
                "input_dim": {"type": "integer"},
                "pad_length": {"type": "integer"},
                "hidden_layers": {"type": "array", "items": {"type": "integer"}},
                "activation": {"type": "string"},
                "dropout_rate": {"type": "number"},
            },
            "required": ["input_dim", "pad_length", "hidden_layers"],
            "additionalProperties": False,
        },
        "hyperparams": dict(_TRAIN_HP, required=list(_TRAIN_HP["properties"])),
        "provenance": {"type": "object"},
        "verdict": {"anyOf": [_VERDICT_OUT, {"type": "null"}]},
        "training": {
            "anyOf": [
                {
                    "type": "object",
                    "properties": {
                        "train_loss": {"type": "array", "items": {"type": "number"}},
                        "val_loss": {"type": "array", "items": {"type": "number"}},
                        "metrics": {"type": ["object", "null"]},
                        "aborted": {"type": "boolean"},
                        "abort_reason": {"type": ["string", "null"]},
                    },
                    "required": ["train_loss", "val_loss", "metrics", "aborted"],
                    "additionalProperties": False,
                },
                {"type": "null"},
            ]
        },
        "val_pairs": {"type": "array", "items": _VAL_PAIR},
        "created_at": {"type": "string"},
    },
    "required": ["id", "program_id", "skill_signature", "init", "architecture", "verdict"],
    "additionalProperties": False,
}
_JOB_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "kind": {"enum": ["train", "optimize"]},
        "state": {"enum": ["queued", "running", "done", "failed", "cancelled"]},
        "progress": {"type": "number", "minimum": 0, "maximum": 1},
        "metrics": {"type": "object"},
        "result_id": {"type": ["string", "null"]},
        "error": {"anyOf": [_ERROR, {"type": "null"}]},
        "idempotency_key": {"type": ["string", "null"]},
        "subject_ids": {"type": "array", "items": {"type": "string"}},
        "created_at": {"type": "string"},
        "updated_at": {"type": "string"},
    },
    "required": ["id", "kind", "state", "progress", "metrics", "result_id", "error"],
    "additionalProperties": False,
}
_PREDICTION_OUT = {
    "type": "object",
    "properties": {
        "trajectory": _TRAJECTORY_OUT,
        "cycle_time": {"type": "number"},
        "success_probability": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["trajectory", "cycle_time", "success_probability"],
    "additionalProperties": False,
}
_OBJECTIVE_SPEC_OUT = dict(
    _OBJECTIVE_SPEC, required=[k for k in _OBJECTIVE_SPEC["properties"]]
)
_ITERATION_OUT = {
    "type": "object",
    "properties": {
        "x": _PARAMS,
        "prediction": _PREDICTION_OUT,
        "objectives": {"type": "object", "additionalProperties": {"type": "number"}},
        "total": {"type": "number"},
    },
    "required": ["x", "prediction", "objectives", "total"],
    "additionalProperties": False,
}
_OPTIMIZATION_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "model_id": _ID,
        "spec": _OBJECTIVE_SPEC_OUT,
        "hp": dict(_OPT_HP, required=["step_size", "iterations", "seed"]),
        "x_init": _PARAMS,
        "iterations": {"type": "array", "items": _ITERATION_OUT, "minItems": 1},
        "best_index": {"type": "integer", "minimum": 0},
        "x_best": _PARAMS,
        "created_at": {"type": "string"},
    },
    "required": ["id", "model_id", "spec", "hp", "x_init", "iterations", "best_index", "x_best"],
    "additionalProperties": False,
}
_WHATIF_OUT = {
    "type": "object",
    "properties": {
        "prediction": _PREDICTION_OUT,
        "objectives": {"type": "object", "additionalProperties": {"type": "number"}},
        "total": {"type": "number"},
    },
    "required": ["prediction", "objectives", "total"],
    "additionalProperties": False,
}
_RELEVANCE_REPORT_OUT = {
    "type": "object",
    "properties": {
        "target_head": {"enum": list(HEADS)},
        "probe_x": _PARAMS,
        "relevances": {"type": "object", "additionalProperties": {"type": "number"}},
        "output_value": {"type": "number"},
        "conservation_residual": {"type": "number"},
    },
    "required": ["target_head", "probe_x", "relevances", "output_value", "conservation_residual"],
    "additionalProperties": False,
}
_RELEVANCE_BAR_OUT = {
    "type": "object",
    "properties": {
        "parameter": {"type": "string"},
        "relevance": {"type": "number"},
        "normalized_magnitude": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["parameter", "relevance", "normalized_magnitude"],
    "additionalProperties": False,
}
_LRP_OUT = {
    "type": "object",
    "properties": {
        "probe_x": _PARAMS,
        "reports": {"type": "object", "additionalProperties": _RELEVANCE_REPORT_OUT},
        "bars": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": _RELEVANCE_BAR_OUT},
        },
    },
    "required": ["probe_x", "reports", "bars"],
    "additionalProperties": False,
}
_SESSION_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "program_id": _ID,
        "target_skills": {"type": "array", "items": {"type": "string"}},
        "current_step": {"enum": ["dataset", "training", "optimization"]},
        "dataset_id": {"type": ["string", "null"]},
        "model_ids": {"type": "array", "items": {"type": "string"}},
        "run_ids": {"type": "array", "items": {"type": "string"}},
        "created_at": {"type": "string"},
        "updated_at": {"type": "string"},
    },
    "required": ["id", "program_id", "target_skills", "current_step", "dataset_id", "model_ids", "run_ids"],
    "additionalProperties": False,
}
_CAPABILITY_FIELD = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "group": {"type": "string"},
        "type": {"enum": ["number", "integer", "boolean", "string", "choice", "integer_list", "tags", "timestamp"]},
        "default": {},
        "bounds": {
            "anyOf": [
                {"type": "array", "items": {"type": ["number", "null"]}, "minItems": 2, "maxItems": 2},
                {"type": "array", "items": {"type": "string"}},
                {"type": "null"},
            ]
        },
        "expert_only": {"type": "boolean"},
        "explanation_key": {"type": "string"},
    },
    "required": ["name", "group", "type", "default", "bounds", "expert_only", "explanation_key"],
    "additionalProperties": False,
}
_CAPABILITIES_OUT = {
    "type": "object",
    "properties": {
        "steps": {
            "type": "object",
            "properties": {
                "dataset": {"type": "array", "items": _CAPABILITY_FIELD},
                "training": {"type": "array", "items": _CAPABILITY_FIELD},
                "optimization": {"type": "array", "items": _CAPABILITY_FIELD},
            },
            "required": ["dataset", "training", "optimization"],
            "additionalProperties": False,
        },
        "heads": {"type": "array", "items": {"type": "string"}},
        "verdicts": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["steps", "heads", "verdicts"],
    "additionalProperties": False,
}
_SUMMARY_OUT = {
    "type": "object",
    "properties": {
        "id": _ID,
        "name": {"type": "string"},
        "program_id": _ID,
        "record_count": {"type": "integer"},
        "success_count": {"type": "integer"},
        "fail_count": {"type": "integer"},
        "pad_length": {"type": "integer"},
        "mean_parameters": _PARAMS,
        "parameters": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "unit": {"type": "string"},
                    "lower_bound": {"type": "number"},
                    "upper_bound": {"type": "number"},
                    "min": {"type": "number"},
                    "max": {"type": "number"},
                    "quartiles": {"type": "object"},
                    "sufficient": {"type": "boolean"},
                    "message_key": {"type": "string"},
                    "message": {"type": "string"},
                },
                "required": ["name", "unit", "lower_bound", "upper_bound", "min", "max", "quartiles", "sufficient"],
                "additionalProperties": False,
            },
        },
        "cycle_time": {
            "type": "object",
            "properties": {"min": {"type": "number"}, "mean": {"type": "number"}, "max": {"type": "number"}},
            "required": ["min", "mean", "max"],
            "additionalProperties": False,
        },
        "plots": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "index": {"type": "integer"},
                    "success": {"type": "boolean"},
                    "dt": {"type": "number"},
                    "positions": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    "forces": {"type": "array", "items": {"type": "number"}},
                },
                "required": ["index", "success", "dt", "positions", "forces"],
                "additionalProperties": False,
            },
        },
    },
    "required": [
        "id",
        "name",
        "program_id",
        "record_count",
        "success_count",
        "fail_count",
        "pad_length",
        "mean_parameters",
        "parameters",
        "cycle_time",
        "plots",
    ],
    "additionalProperties": False,
}

RESPONSE_SCHEMAS = {
    "error": {"type": "object", "properties": {"error": _ERROR}, "required": ["error"], "additionalProperties": False},
    "program": _PROGRAM_OUT,
    "program_list": {
        "type": "object",
        "properties": {"programs": {"type": "array", "items": _PROGRAM_OUT}},
        "required": ["programs"],
        "additionalProperties": False,
    },
    "execution_ingest": {
        "type": "object",
        "properties": {"added": {"type": "integer", "minimum": 0}, "total": {"type": "integer", "minimum": 0}},
        "required": ["added", "total"],
        "additionalProperties": False,
    },
    "execution_list": {
        "type": "object",
        "properties": {
            "count": {"type": "integer", "minimum": 0},
            "records": {"type": "array", "items": _EXECUTION_OUT},
        },
        "required": ["count", "records"],
        "additionalProperties": False,
    },
    "dataset": _DATASET_OUT,
    "dataset_list": {
        "type": "object",
        "properties": {"datasets": {"type": "array", "items": _DATASET_OUT}},
        "required": ["datasets"],
        "additionalProperties": False,
    },
    "dataset_summary": _SUMMARY_OUT,
    "quality": _QUALITY_OUT,
    "model": _MODEL_OUT,
    "model_list": {
        "type": "object",
        "properties": {"models": {"type": "array", "items": _MODEL_OUT}},
        "required": ["models"],
        "additionalProperties": False,
    },
    "diagnostics": _VERDICT_OUT,
    "prediction": _PREDICTION_OUT,
    "lrp": _LRP_OUT,
    "job": _JOB_OUT,
    "optimization": _OPTIMIZATION_OUT,
    "whatif": _WHATIF_OUT,
    "session": _SESSION_OUT,
    "session_list": {
        "type": "object",
        "properties": {"sessions": {"type": "array", "items": _SESSION_OUT}},
        "required": ["sessions"],
        "additionalProperties": False,
    },
    "capabilities": _CAPABILITIES_OUT,
}

_VALIDATOR_CLS = jsonschema.Draft202012Validator
_REQUEST_VALIDATORS = {name: _VALIDATOR_CLS(schema) for name, schema in REQUEST_SCHEMAS.items()}
_RESPONSE_VALIDATORS = {name: _VALIDATOR_CLS(schema) for name, schema in RESPONSE_SCHEMAS.items()}


def _field_path(error: jsonschema.ValidationError) -> str:
    parts = []
    for part in error.absolute_path:
        if isinstance(part, int):
            if parts:
                parts[-1] = f"{parts[-1]}[{part}]"
            else:
                parts.append(f"[{part}]")
        else:
            parts.append(str(part))
    return ".".join(parts) if parts else "$"


def validate_request(name: str, doc) -> dict:
    """Check a request body against its schema; unknown fields are an error."""
    validator = _REQUEST_VALIDATORS[name]
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ValidationError("request.schema", f"{name}: {first.message}", _field_path(first))
    return doc


def validate_response(name: str, doc) -> dict:
    """Assert a response body against its published schema (used by tests)."""
    validator = _RESPONSE_VALIDATORS[name]
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise AssertionError(f"response {name} violates schema at {_field_path(first)}: {first.message}")
    return doc


# --- capability descriptor ---


def _field(name, group, ftype, default, bounds, expert_only, step):
    return {
        "name": name,
        "group": group,
        "type": ftype,
        "default": default,
        "bounds": bounds,
        "expert_only": expert_only,
        "explanation_key": f"field.{step}.{name}",
    }


def capability_descriptor() -> dict:
    """Every tunable field per workflow step, with defaults and expert flags.

    Groups map descriptor entries back to their config objects so tests can
    assert completeness: train_hyperparams, optimizer_hyperparams and
    objective_spec entries cover those dataclasses exactly once each.
    """
    train_hp = TrainHyperparams()
    opt_hp = OptimizerHyperparams()
    obj = ObjectiveSpec()
    dataset_fields = [
        _field("name", "dataset", "string", "", None, False, "dataset"),
        _field("time_from", "dataset", "timestamp", None, None, False, "dataset"),
        _field("time_to", "dataset", "timestamp", None, None, False, "dataset"),
        _field("tag_equals", "dataset", "tags", {}, None, False, "dataset"),
        _field("pad_length", "dataset", "integer", None, [1, 20000], True, "dataset"),
        _field("override", "dataset", "boolean", False, None, True, "dataset"),
    ]
    training_fields = [
        _field("init", "training", "choice", "scratch", ["scratch", "finetune", "as_is"], False, "training"),
        _field("base_id", "training", "string", None, None, False, "training"),
        # Guided mode shows only learning rate and epochs; the rest is expert
        _field("learning_rate", "train_hyperparams", "number", train_hp.learning_rate, [0.0, 1.0], False, "training"),
        _field("epochs", "train_hyperparams", "integer", train_hp.epochs, [0, 20000], False, "training"),
        _field("batch_size", "train_hyperparams", "integer", train_hp.batch_size, [1, 4096], True, "training"),
        _field("val_fraction", "train_hyperparams", "number", train_hp.val_fraction, [0.05, 0.95], True, "training"),
        _field("dropout_rate", "train_hyperparams", "number", train_hp.dropout_rate, [0.0, 0.99], True, "training"),
        _field("weight_decay", "train_hyperparams", "number", train_hp.weight_decay, [0.0, 1.0], True, "training"),
        _field(
            "hidden_layers",
            "train_hyperparams",
            "integer_list",
            list(train_hp.hidden_layers),
            [1, 1024],
            True,
            "training",
        ),
        _field("seed", "train_hyperparams", "integer", train_hp.seed, None, True, "training"),
    ]
    optimization_fields = [
        _field("x_init", "optimization", "tags", None, None, True, "optimization"),
        _field("step_size", "optimizer_hyperparams", "number", opt_hp.step_size, [0.0, 10.0], True, "optimization"),
        _field("iterations", "optimizer_hyperparams", "integer", opt_hp.iterations, [1, 10000], True, "optimization"),
        _field("seed", "optimizer_hyperparams", "integer", opt_hp.seed, None, True, "optimization"),
    ]
    for name in OBJECTIVES:
        optimization_fields.append(
            _field(f"{name}_enabled", "objective_spec", "boolean", getattr(obj, f"{name}_enabled"), None, False, "optimization")
        )
        optimization_fields.append(
            _field(f"{name}_weight", "objective_spec", "number", getattr(obj, f"{name}_weight"), [0.0, 1000.0], True, "optimization")
        )
    optimization_fields.append(
        _field("force_threshold", "objective_spec", "number", obj.force_threshold, [0.1, 1000.0], False, "optimization")
    )
    from .diagnostics import VERDICT_LABELS

    return {
        "steps": {
            "dataset": dataset_fields,
            "training": training_fields,
            "optimization": optimization_fields,
        },
        "heads": list(HEADS),
        "verdicts": list(VERDICT_LABELS),
    }
