"""Crash-safe file store for every service entity.

One JSON document per entity under <data_dir>/<kind>/<id>.json, written via
temp file + atomic rename so concurrent readers never observe partial
documents. Executions are an append-only JSON-lines log; a torn trailing
line from a crash is skipped on load. Jobs that were live when the process
died are marked failed ("interrupted") on startup.
"""

from __future__ import annotations

import os
import re
import threading
from typing import Iterator, Optional

from .core import dump_json, load_json
from .errors import ConflictError, NotFoundError, ValidationError

KINDS = ("programs", "datasets", "models", "optimizations", "jobs", "sessions", "idempotency")

_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


def _check_id(entity_id: str) -> str:
    if not isinstance(entity_id, str) or not _ID_RE.match(entity_id):
        raise ValidationError("store.bad_id", f"invalid entity id {entity_id!r}", "id")
    return entity_id


class Store:
    """Thread-safe entity persistence rooted at one writable directory."""

    def __init__(self, data_dir: str):
        self.data_dir = os.path.abspath(data_dir)
        self._lock = threading.RLock()
        try:
            os.makedirs(self.data_dir, exist_ok=True)
            for kind in KINDS:
                os.makedirs(os.path.join(self.data_dir, kind), exist_ok=True)
            probe = os.path.join(self.data_dir, ".writable")
            with open(probe, "w", encoding="utf-8") as fh:
                fh.write("ok")
            os.remove(probe)
        except OSError as exc:
            raise ValidationError(
                "store.unwritable", f"data directory {self.data_dir!r} is not writable: {exc}", "data_dir"
            ) from exc
        self._recover_jobs()

    # --- entity documents ---

    def _path(self, kind: str, entity_id: str) -> str:
        if kind not in KINDS:
            raise ValidationError("store.kind", f"unknown entity kind {kind!r}", "kind")
        return os.path.join(self.data_dir, kind, f"{_check_id(entity_id)}.json")

    def save(self, kind: str, entity_id: str, doc: dict) -> None:
        path = self._path(kind, entity_id)
        payload = dump_json(doc)
        with self._lock:
            tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)

    def load(self, kind: str, entity_id: str) -> dict:
        path = self._path(kind, entity_id)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return load_json(fh.read(), path=f"{kind}/{entity_id}")
        except FileNotFoundError:
            raise NotFoundError(kind.rstrip("s"), entity_id) from None

    def exists(self, kind: str, entity_id: str) -> bool:
        return os.path.exists(self._path(kind, entity_id))

    def delete(self, kind: str, entity_id: str) -> None:
        try:
            os.remove(self._path(kind, entity_id))
        except FileNotFoundError:
            raise NotFoundError(kind.rstrip("s"), entity_id) from None

    def list_ids(self, kind: str) -> list:
        if kind not in KINDS:
            raise ValidationError("store.kind", f"unknown entity kind {kind!r}", "kind")
        root = os.path.join(self.data_dir, kind)
        ids = [name[:-5] for name in os.listdir(root) if name.endswith(".json")]
        return sorted(ids)

    def load_all(self, kind: str) -> list:
        return [self.load(kind, entity_id) for entity_id in self.list_ids(kind)]

    def create(self, kind: str, entity_id: str, doc: dict) -> None:
        """Save that refuses to overwrite an existing entity."""
        with self._lock:
            if self.exists(kind, entity_id):
                raise ConflictError(f"{kind.rstrip('s')}.exists", f"{kind.rstrip('s')} {entity_id!r} already exists", "id")
            self.save(kind, entity_id, doc)

    # --- append-only execution log ---

    @property
    def executions_path(self) -> str:
        return os.path.join(self.data_dir, "executions.jsonl")

    def append_executions(self, docs) -> int:
        docs = list(docs)
        lines = "".join(dump_json(doc) + "\n" for doc in docs)
        with self._lock:
            exists = os.path.exists(self.executions_path)
            with open(self.executions_path, "r+b" if exists else "wb") as fh:
                if exists:
                    # a trailing record without its newline was never committed
                    # (crash mid-append): drop it so new lines stay well-framed
                    fh.seek(0, os.SEEK_END)
                    if fh.tell() > 0:
                        fh.seek(-1, os.SEEK_END)
                        if fh.read(1) != b"\n":
                            data = open(self.executions_path, "rb").read()
                            fh.seek(data.rfind(b"\n") + 1)
                            fh.truncate()
                fh.write(lines.encode("utf-8"))
                fh.flush()
                os.fsync(fh.fileno())
        return len(docs)

    def iter_executions(self) -> Iterator[dict]:
        """Yields execution docs; a torn trailing line (crash mid-append) is skipped."""
        try:
            with open(self.executions_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            return
        lines = text.split("\n")
        complete = lines[:-1]  # the log is newline-terminated when intact
        trailer = lines[-1]
        for i, line in enumerate(complete):
            if line.strip():
                yield load_json(line, path=f"executions[{i}]")
        if trailer.strip():
            try:
                yield load_json(trailer, path="executions[-1]")
            except Exception:
                pass  # partial write from a crash; recovered data ends here

    def load_executions(self) -> list:
        return list(self.iter_executions())

    # --- startup recovery ---

    def _recover_jobs(self) -> None:
        for job_id in self.list_ids("jobs"):
            doc = self.load("jobs", job_id)
            if doc.get("state") in ("queued", "running"):
                doc["state"] = "failed"
                doc["error"] = {
                    "code": "internal_error",
                    "key": "job.interrupted",
                    "message": "interrupted",
                    "field_path": None,
                }
                self.save("jobs", job_id, doc)


def open_store(data_dir: Optional[str]) -> Store:
    if not data_dir:
        raise ValidationError("store.data_dir", "a data directory is required", "data_dir")
    return Store(data_dir)
