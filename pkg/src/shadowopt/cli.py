"""Command line driver for the full workflow.

Every subcommand calls the same ops-layer functions as the HTTP service, so
results match byte for byte at fixed seeds. Results go to stdout as JSON
(--pretty for humans), progress goes to stderr, and the exit code is 0 on
success, 1 on validation errors and 2 on internal failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import ops
from .core import ExecutionRecord, dump_json
from .errors import NotFoundError, ShadowOptError, ValidationError
from .net import TrainHyperparams
from .simulate import SAMPLING_MODES, SimConfig, batch_execute, gearbox_template

DEFAULT_DATA_DIR = "./shadowopt-data"


class _Parser(argparse.ArgumentParser):
    # flag misuse prints usage and exits 1 (argparse default is 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _json_flag(value, flag: str):
    """Parse an inline JSON flag value; '@path' reads the JSON from a file."""
    if value is None:
        return None
    text = value
    if value.startswith("@"):
        path = Path(value[1:])
        if not path.is_file():
            raise ValidationError("cli.json_file", f"{flag}: no such file {str(path)!r}", flag)
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("cli.json", f"{flag} is not valid JSON: {exc}", flag) from None


def _load_config(path):
    if path is None:
        return {}
    doc = _json_flag("@" + path, "--config")
    if not isinstance(doc, dict):
        raise ValidationError("cli.config", "--config must contain a JSON object", "--config")
    return doc


def _resolve_data_dir(args, config: dict) -> str:
    return (
        args.data_dir
        or config.get("data_dir")
        or os.environ.get("SHADOWOPT_DATA_DIR")
        or DEFAULT_DATA_DIR
    )


def _context(args, config: dict) -> ops.AppContext:
    from .service import ServiceConfig

    doc = dict(config)
    doc["data_dir"] = _resolve_data_dir(args, config)
    cfg = ServiceConfig.from_dict(doc)
    return ops.AppContext(cfg.data_dir, cfg.thresholds)


def _emit(doc: dict, pretty: bool) -> None:
    sys.stdout.write(dump_json(doc, pretty=pretty) + "\n")


def _note(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _train_progress(epoch, total, train_loss, val_loss):
    if epoch == total or epoch % max(1, total // 10) == 0:
        _note(f"epoch {epoch}/{total} train {train_loss:.3f} val {val_loss:.3f}")


def _opt_progress(iteration, total):
    if iteration == total or iteration % max(1, total // 10) == 0:
        _note(f"iteration {iteration}/{total}")


# --- subcommands ---


def _cmd_simulate(args, config):
    sim = SimConfig.from_dict(_json_flag(args.sim, "--sim") or {})
    params = _json_flag(args.params, "--params")
    tags = _json_flag(args.tags, "--tags")
    records = batch_execute(args.n, args.sampling, params, sim, seed=args.seed, tags=tags)
    lines = [dump_json(r.to_dict()) for r in records]
    if args.out == "-":
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        Path(args.out).write_text("\n".join(lines) + "\n")
        _emit({"written": len(records), "path": args.out}, args.pretty)
    return 0


def _read_record_lines(path: str) -> list:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    records = []
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        doc = _json_flag(line, f"line {i + 1}")
        records.append(ExecutionRecord.from_dict(doc, f"records[{i}]"))
    if not records:
        raise ValidationError("cli.no_records", f"no execution records in {path!r}", "--in")
    return records


def _cmd_ingest(args, config):
    ctx = _context(args, config)
    records = _read_record_lines(args.infile)
    # the simulator's own program is registered on demand so a fresh data dir
    # can ingest simulator output without a separate registration step
    template = gearbox_template()
    if any(r.program_id == template.id for r in records):
        ops.register_program(ctx, template.to_dict())
    _emit(ops.ingest_records(ctx, records, idempotency_key=args.idempotency_key), args.pretty)
    return 0


def _cmd_dataset(args, config):
    ctx = _context(args, config)
    doc = {
        "program_id": args.program_id,
        "name": args.name,
        "filter": _json_flag(args.filter, "--filter") or {},
        "override": args.override,
    }
    if args.pad_length is not None:
        doc["pad_length"] = args.pad_length
    if args.idempotency_key:
        doc["idempotency_key"] = args.idempotency_key
    created = ops.create_dataset(ctx, doc)
    if args.summary:
        _emit(ops.dataset_summary(ctx, created["id"]), args.pretty)
    else:
        _emit(created, args.pretty)
    return 0


_HP_FLAGS = (
    ("epochs", int),
    ("learning_rate", float),
    ("batch_size", int),
    ("val_fraction", float),
    ("dropout_rate", float),
    ("weight_decay", float),
    ("seed", int),
)


def _cmd_train(args, config):
    ctx = _context(args, config)
    hp_doc = _json_flag(args.hyperparams, "--hyperparams") or {}
    for name, _ in _HP_FLAGS:
        value = getattr(args, name)
        if value is not None:
            hp_doc[name] = value
    if args.hidden_layers is not None:
        text = args.hidden_layers.strip()
        hp_doc["hidden_layers"] = [int(w) for w in text.split(",")] if text else []
    doc = {"dataset_id": args.dataset, "init": args.init, "hyperparams": hp_doc}
    if args.base_id:
        doc["base_id"] = args.base_id
    plan = ops.TrainPlan(ctx, doc)
    model_id = ops.execute_training(ctx, plan, progress=_train_progress)
    _emit(ops.model_response(ctx.store.load("models", model_id)), args.pretty)
    return 0


def _cmd_diagnose(args, config):
    ctx = _context(args, config)
    stored = ctx.store.load("models", args.model)
    verdict = stored.get("verdict")
    if verdict is None:
        raise NotFoundError("diagnostics", args.model)
    _emit(verdict, args.pretty)
    return 0


def _cmd_lrp(args, config):
    ctx = _context(args, config)
    doc = {}
    if args.x:
        doc["x"] = _json_flag(args.x, "--x")
    if args.head:
        doc["head"] = args.head
    _emit(ops.lrp_payload(ctx, args.model, doc), args.pretty)
    return 0


def _cmd_optimize(args, config):
    ctx = _context(args, config)
    hp_doc = _json_flag(args.hyperparams, "--hyperparams") or {}
    if args.step_size is not None:
        hp_doc["step_size"] = args.step_size
    if args.iterations is not None:
        hp_doc["iterations"] = args.iterations
    if args.opt_seed is not None:
        hp_doc["seed"] = args.opt_seed
    doc = {"model_id": args.model, "hyperparams": hp_doc}
    if args.spec:
        doc["spec"] = _json_flag(args.spec, "--spec")
    if args.x_init:
        doc["x_init"] = _json_flag(args.x_init, "--x-init")
    plan = ops.OptimizationPlan(ctx, doc)
    run_id = ops.execute_optimization(ctx, plan, progress=_opt_progress)
    stored = ctx.store.load("optimizations", run_id)
    _emit(dict(stored["run"], created_at=stored["created_at"]), args.pretty)
    return 0


def _cmd_whatif(args, config):
    ctx = _context(args, config)
    doc = {"model_id": args.model, "x": _json_flag(args.x, "--x")}
    if args.spec:
        doc["spec"] = _json_flag(args.spec, "--spec")
    _emit(ops.whatif_payload(ctx, doc), args.pretty)
    return 0


def _cmd_serve(args, config):
    import uvicorn

    from .service import ServiceConfig, create_app

    doc = dict(config)
    doc["data_dir"] = _resolve_data_dir(args, config)
    if args.host is not None:
        doc["host"] = args.host
    if args.port is not None:
        doc["port"] = args.port
    if args.ui_dir is not None:
        doc["ui_dir"] = args.ui_dir
    elif "ui_dir" not in doc and os.path.isdir("frontend/dist"):
        doc["ui_dir"] = "frontend/dist"
    cfg = ServiceConfig.from_dict(doc)
    _note(f"serving on http://{cfg.host}:{cfg.port} (data dir {cfg.data_dir})")
    if cfg.ui_dir:
        _note(f"ui at http://{cfg.host}:{cfg.port}/ui/ (assets from {cfg.ui_dir})")
    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
    return 0


def _cmd_demo(args, config):
    ctx = _context(args, config)
    _emit(ops.run_demo(ctx, args.seed, progress=_note), args.pretty)
    return 0


# --- parser wiring ---


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shadowopt", description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", help=f"state directory (default ${{SHADOWOPT_DATA_DIR}} or {DEFAULT_DATA_DIR})")
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--pretty", action="store_true", help="indent JSON output")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("simulate", help="run seeded workcell executions, emit JSON lines")
    p.add_argument("--n", type=int, required=True, help="number of executions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file for JSON lines ('-' = stdout)")
    p.add_argument("--sampling", choices=SAMPLING_MODES, default="uniform-random")
    p.add_argument("--params", help="JSON parameter ranges/values (or @file)")
    p.add_argument("--sim", help="JSON simulator config overrides (or @file)")
    p.add_argument("--tags", help="JSON string-to-string tags (or @file)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="append execution records from a JSON lines file")
    p.add_argument("--in", dest="infile", required=True, help="JSON lines file ('-' = stdin)")
    p.add_argument("--idempotency-key", help="replay-safe ingestion key")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("dataset", help="build a training dataset from ingested executions")
    p.add_argument("--program-id", default=gearbox_template().id)
    p.add_argument("--name", help="display name (defaults to the dataset id)")
    p.add_argument("--filter", help="JSON record filter (or @file)")
    p.add_argument("--pad-length", type=int, help="trajectory pad length override")
    p.add_argument("--override", action="store_true", help="keep the dataset despite quality findings")
    p.add_argument("--idempotency-key")
    p.add_argument("--summary", action="store_true", help="print the full summary instead of the create response")
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("train", help="train a shadow model on a dataset")
    p.add_argument("--dataset", required=True, help="dataset id")
    p.add_argument("--init", choices=("scratch", "finetune", "as_is"), default="scratch")
    p.add_argument("--base-id", help="base model id for finetune / as_is")
    p.add_argument("--hyperparams", help="JSON hyperparams (or @file); flags below override")
    for name, kind in _HP_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", type=kind, dest=name)
    p.add_argument("--hidden-layers", help="comma-separated widths, e.g. 64,64")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("diagnose", help="print the training-outcome verdict for a model")
    p.add_argument("--model", required=True, help="model id")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("lrp", help="input attributions for a model at a probe point")
    p.add_argument("--model", required=True, help="model id")
    p.add_argument("--x", help="JSON probe parameters (default: dataset mean)")
    p.add_argument("--head", help="restrict to one output head")
    p.set_defaults(func=_cmd_lrp)

    p = sub.add_parser("optimize", help="optimize program parameters against a model")
    p.add_argument("--model", required=True, help="model id")
    p.add_argument("--x-init", help="JSON starting parameters (default: dataset mean)")
    p.add_argument("--spec", help="JSON objective spec (or @file)")
    p.add_argument("--hyperparams", help="JSON optimizer hyperparams (or @file)")
    p.add_argument("--step-size", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--opt-seed", type=int, help="optimizer seed")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("whatif", help="predict outcomes and objectives at one probe point")
    p.add_argument("--model", required=True, help="model id")
    p.add_argument("--x", required=True, help="JSON probe parameters (or @file)")
    p.add_argument("--spec", help="JSON objective spec (or @file)")
    p.set_defaults(func=_cmd_whatif)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--ui-dir", help="static UI assets to serve under /ui")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("demo", help="scripted end-to-end scenario on the gearbox cell")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except ShadowOptError as exc:
        sys.stderr.write(dump_json({"error": exc.to_dict()}) + "\n")
        return 2 if exc.code == "internal_error" else 1
    except Exception as exc:  # pragma: no cover - defensive
        envelope = {"code": "internal_error", "key": "internal.exception", "message": str(exc), "field_path": None}
        sys.stderr.write(dump_json({"error": envelope}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
