"""HTTP/JSON API binding the workflow end-to-end.

Exposes programs, executions, datasets (with quality gating), model training
and optimization as background jobs, LRP attributions, what-if probing,
workflow sessions and the Guided/Expert capability descriptor. All writes are
schema-validated (unknown fields rejected) and durable before the response;
errors use one envelope: {code, key, message, field_path}. The actual work
lives in ops; routes only parse, delegate and shape status codes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from datetime import datetime, timezone

from . import ops
from .core import ExecutionRecord, dump_json, format_rfc3339, load_json, new_id
from .errors import ConflictError, NotFoundError, ShadowOptError, ValidationError
from .quality import QualityThresholds
from .schemas import REQUEST_SCHEMAS, RESPONSE_SCHEMAS, capability_descriptor, validate_request

SESSION_STEPS = ("dataset", "training", "optimization")

_STATUS_BY_CODE = {
    "validation_error": 400,
    "parse_error": 400,
    "not_found": 404,
    "conflict": 409,
    "domain_rule_violation": 422,
    "internal_error": 500,
}


@dataclass
class ServiceConfig:
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8812
    ui_dir: str | None = None
    thresholds: QualityThresholds = field(default_factory=QualityThresholds)

    @classmethod
    def from_dict(cls, doc: dict) -> "ServiceConfig":
        kwargs = {}
        if "data_dir" in doc:
            kwargs["data_dir"] = str(doc["data_dir"])
        if "host" in doc:
            kwargs["host"] = str(doc["host"])
        if "port" in doc:
            kwargs["port"] = int(doc["port"])
        if "ui_dir" in doc and doc["ui_dir"] is not None:
            kwargs["ui_dir"] = str(doc["ui_dir"])
        th = {}
        for name in ("min_coverage", "min_distinct", "max_outlier_fraction"):
            if name in doc:
                th[name] = doc[name]
        if th:
            defaults = QualityThresholds()
            kwargs["thresholds"] = QualityThresholds(
                min_coverage=float(th.get("min_coverage", defaults.min_coverage)),
                min_distinct=int(th.get("min_distinct", defaults.min_distinct)),
                max_outlier_fraction=float(th.get("max_outlier_fraction", defaults.max_outlier_fraction)),
            )
        if "data_dir" not in kwargs:
            raise ValidationError("config.data_dir", "config requires data_dir", "data_dir")
        return cls(**kwargs)


def _now() -> str:
    return format_rfc3339(datetime.now(timezone.utc))


def _json(doc: dict, status: int = 200) -> Response:
    return Response(content=dump_json(doc), status_code=status, media_type="application/json")


async def _body_doc(request: Request, schema: str) -> dict:
    raw = await request.body()
    doc = load_json(raw or b"{}", "body")
    return validate_request(schema, doc)


def create_app(config: ServiceConfig) -> FastAPI:
    ctx = ops.AppContext(config.data_dir, config.thresholds)
    app = FastAPI(title="shadowopt service", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.ctx = ctx
    app.state.config = config

    @app.exception_handler(ShadowOptError)
    async def _domain_error(_request, exc: ShadowOptError):
        return _json({"error": exc.to_dict()}, _STATUS_BY_CODE.get(exc.code, 500))

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "validation_error"
        envelope = {
            "code": code if exc.status_code != 500 else "internal_error",
            "key": f"http.{exc.status_code}",
            "message": str(exc.detail),
            "field_path": None,
        }
        return _json({"error": envelope}, exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _request_error(_request, exc: RequestValidationError):
        envelope = {
            "code": "validation_error",
            "key": "request.invalid",
            "message": str(exc.errors()[:1]),
            "field_path": None,
        }
        return _json({"error": envelope}, 400)

    @app.exception_handler(Exception)
    async def _internal_error(_request, exc: Exception):
        envelope = {
            "code": "internal_error",
            "key": "internal.exception",
            "message": f"{type(exc).__name__}: {exc}",
            "field_path": None,
        }
        return _json({"error": envelope}, 500)

    # --- meta ---

    @app.get("/capabilities")
    def get_capabilities():
        return _json(capability_descriptor())

    @app.get("/schemas")
    def get_schemas():
        return _json({"request": REQUEST_SCHEMAS, "response": RESPONSE_SCHEMAS})

    @app.get("/health")
    def get_health():
        return _json({"status": "ok", "data_dir": config.data_dir})

    # --- programs ---

    @app.post("/programs")
    async def post_program(request: Request):
        doc = await _body_doc(request, "program.create")
        doc.pop("idempotency_key", None)
        stored, created = ops.register_program(ctx, doc)
        return _json(stored, 201 if created else 200)

    @app.get("/programs")
    def list_programs():
        return _json({"programs": ctx.store.load_all("programs")})

    @app.get("/programs/{program_id}")
    def get_program(program_id: str):
        return _json(ctx.store.load("programs", program_id))

    # --- executions ---

    @app.post("/executions")
    async def post_executions(request: Request):
        raw = await request.body()
        text = (raw or b"").decode("utf-8")
        key = request.headers.get("idempotency-key")
        cached = ctx.idempotent_response("executions", key)
        if cached is not None:
            return _json(cached)
        docs = []
        try:
            docs.append(load_json(text, "body"))
        except ShadowOptError:
            for i, line in enumerate(text.splitlines()):
                if line.strip():
                    docs.append(load_json(line, f"body[{i}]"))
        if not docs:
            raise ValidationError("executions.empty", "request body contains no execution records", "body")
        records = []
        for i, doc in enumerate(docs):
            validate_request("execution.create", doc)
            records.append(ExecutionRecord.from_dict(doc, f"body[{i}]"))
        return _json(ops.ingest_records(ctx, records, idempotency_key=key), 201)

    @app.get("/executions")
    def list_executions(request: Request):
        params = request.query_params
        filter_doc = {}
        for name in ("time_from", "time_to"):
            if params.get(name):
                filter_doc[name] = params[name]
        tags = {k[4:]: v for k, v in params.items() if k.startswith("tag.")}
        if tags:
            filter_doc["tag_equals"] = tags
        return _json(
            ops.list_executions(
                ctx, filter_doc, params.get("program_id"), limit=int(params.get("limit", "1000"))
            )
        )

    # --- datasets ---

    @app.post("/datasets")
    async def post_dataset(request: Request):
        doc = await _body_doc(request, "dataset.create")
        replay = ctx.idempotent_response("datasets", doc.get("idempotency_key"))
        if replay is not None:
            return _json(replay)
        return _json(ops.create_dataset(ctx, doc), 201)

    @app.get("/datasets")
    def list_datasets():
        return _json({"datasets": [ops.dataset_response(d) for d in ctx.store.load_all("datasets")]})

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        return _json(ops.dataset_response(ctx.store.load("datasets", dataset_id)))

    @app.get("/datasets/{dataset_id}/quality")
    def get_dataset_quality(dataset_id: str):
        return _json(ctx.store.load("datasets", dataset_id)["quality"])

    @app.get("/datasets/{dataset_id}/summary")
    def get_dataset_summary(dataset_id: str):
        return _json(ops.dataset_summary(ctx, dataset_id))

    # --- models ---

    @app.post("/models")
    async def post_model(request: Request):
        doc = await _body_doc(request, "model.create")
        key = doc.pop("idempotency_key", None)
        plan = ops.TrainPlan(ctx, doc)

        def runner(handle):
            def hook(epoch, total, train_loss, val_loss):
                handle.progress(
                    epoch / max(1, total),
                    {"epoch": epoch, "total": total, "train_loss": train_loss, "val_loss": val_loss},
                )

            return ops.execute_training(ctx, plan, progress=hook, should_stop=handle.should_stop)

        job = ctx.jobs.submit("train", [plan.dataset.id], runner, idempotency_key=key)
        return _json(job, 202)

    @app.get("/models")
    def list_models():
        return _json({"models": [ops.model_response(d) for d in ctx.store.load_all("models")]})

    @app.get("/models/base")
    def list_base_models(request: Request):
        signature = request.query_params.get("skill_signature")
        models = []
        for doc in ctx.store.load_all("models"):
            if signature and doc["model"].get("skill_signature") != signature:
                continue
            models.append(ops.model_response(doc))
        return _json({"models": models})

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        return _json(ops.model_response(ctx.store.load("models", model_id)))

    @app.get("/models/{model_id}/diagnostics")
    def get_model_diagnostics(model_id: str):
        doc = ctx.store.load("models", model_id)
        verdict = doc.get("verdict")
        if verdict is None:
            raise NotFoundError("diagnostics", model_id)
        return _json(verdict)

    @app.post("/models/{model_id}/lrp")
    async def post_model_lrp(model_id: str, request: Request):
        doc = await _body_doc(request, "lrp.request")
        return _json(ops.lrp_payload(ctx, model_id, doc))

    @app.post("/models/{model_id}/predict")
    async def post_model_predict(model_id: str, request: Request):
        doc = await _body_doc(request, "predict.request")
        return _json(ops.predict_payload(ctx, model_id, doc))

    # --- jobs ---

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return _json(ctx.jobs.get(job_id))

    @app.post("/jobs/{job_id}/cancel")
    def post_job_cancel(job_id: str):
        return _json(ctx.jobs.cancel(job_id))

    # --- optimizations ---

    @app.post("/optimizations")
    async def post_optimization(request: Request):
        doc = await _body_doc(request, "optimization.create")
        key = doc.pop("idempotency_key", None)
        plan = ops.OptimizationPlan(ctx, doc)

        def runner(handle):
            def hook(iteration, total):
                handle.progress(iteration / max(1, total), {"iteration": iteration, "total": total})

            return ops.execute_optimization(ctx, plan, progress=hook, should_stop=handle.should_stop)

        job = ctx.jobs.submit("optimize", [plan.model.id], runner, idempotency_key=key)
        return _json(job, 202)

    @app.get("/optimizations/{run_id}")
    def get_optimization(run_id: str):
        doc = ctx.store.load("optimizations", run_id)
        return _json(dict(doc["run"], created_at=doc["created_at"]))

    # --- what-if ---

    @app.post("/whatif")
    async def post_whatif(request: Request):
        doc = await _body_doc(request, "whatif.request")
        return _json(ops.whatif_payload(ctx, doc))

    # --- sessions ---

    @app.post("/sessions")
    async def post_session(request: Request):
        doc = await _body_doc(request, "session.create")
        key = doc.pop("idempotency_key", None)
        cached = ctx.idempotent_response("sessions", key)
        if cached is not None:
            return _json(cached)
        ctx.template(doc["program_id"])  # 404 on unknown program
        session = {
            "id": new_id("session"),
            "program_id": doc["program_id"],
            "target_skills": doc.get("target_skills", []),
            "current_step": "dataset",
            "dataset_id": None,
            "model_ids": [],
            "run_ids": [],
            "created_at": _now(),
            "updated_at": _now(),
        }
        ctx.store.save("sessions", session["id"], session)
        ctx.remember_idempotent("sessions", key, session)
        return _json(session, 201)

    @app.get("/sessions")
    def list_sessions():
        return _json({"sessions": ctx.store.load_all("sessions")})

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _json(ctx.store.load("sessions", session_id))

    @app.post("/sessions/{session_id}")
    async def update_session(session_id: str, request: Request):
        doc = await _body_doc(request, "session.update")
        session = ctx.store.load("sessions", session_id)
        if "step" in doc:
            current = SESSION_STEPS.index(session["current_step"])
            target = SESSION_STEPS.index(doc["step"])
            if abs(target - current) > 1:
                raise ConflictError(
                    "session.step",
                    f"cannot jump from {session['current_step']!r} to {doc['step']!r}",
                    "step",
                )
            session["current_step"] = doc["step"]
        if "dataset_id" in doc:
            ctx.store.load("datasets", doc["dataset_id"])
            session["dataset_id"] = doc["dataset_id"]
        if "model_id" in doc:
            ctx.store.load("models", doc["model_id"])
            if doc["model_id"] not in session["model_ids"]:
                session["model_ids"].append(doc["model_id"])
        if "run_id" in doc:
            ctx.store.load("optimizations", doc["run_id"])
            if doc["run_id"] not in session["run_ids"]:
                session["run_ids"].append(doc["run_id"])
        session["updated_at"] = _now()
        ctx.store.save("sessions", session_id, session)
        return _json(session)

    # --- static UI assets ---

    if config.ui_dir and os.path.isdir(config.ui_dir):
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
