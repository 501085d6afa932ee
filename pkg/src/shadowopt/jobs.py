"""Background job execution for long-running training and optimization.

Jobs run on worker threads and persist every state transition through the
Store, so a restart finds queued/running jobs and marks them failed
("interrupted"). States move one way: queued -> running -> done | failed |
cancelled. Cancellation is cooperative; runners poll ``handle.should_stop()``
between epochs/iterations. Duplicate submissions with the same idempotency
key return the existing job, and an entity (dataset or model) admits at most
one live job at a time.
"""

from __future__ import annotations

import copy
import threading
import time
from datetime import datetime, timezone
from typing import Callable, Optional

from .core import format_rfc3339, new_id
from .errors import ConflictError, ShadowOptError, ValidationError
from .store import Store

JOB_KINDS = ("train", "optimize")
TERMINAL_STATES = ("done", "failed", "cancelled")

# live progress is persisted at most this often; terminal states always are
_PERSIST_INTERVAL_S = 0.2


class JobHandle:
    """What a runner sees: cancellation polling plus progress reporting."""

    def __init__(self, manager: "JobManager", job_id: str):
        self._manager = manager
        self.job_id = job_id

    def should_stop(self) -> bool:
        return self._manager._cancel_requested(self.job_id)

    def progress(self, fraction: float, metrics: Optional[dict] = None) -> None:
        self._manager._report_progress(self.job_id, fraction, metrics)


class JobManager:
    def __init__(self, store: Store):
        self.store = store
        self._lock = threading.RLock()
        self._docs: dict = {}
        self._cancel: dict = {}
        self._threads: dict = {}
        self._runners: dict = {}
        self._busy: dict = {}
        self._idempotency: dict = {}
        self._last_persist: dict = {}
        # restarts keep idempotency working: a duplicate POST after a crash
        # must still return the original job rather than launch a second one
        for doc in store.load_all("jobs"):
            key = doc.get("idempotency_key")
            if key:
                self._idempotency[(doc["kind"], key)] = doc["id"]

    # --- public API ---

    def submit(
        self,
        kind: str,
        subject_ids,
        runner: Callable,
        idempotency_key: Optional[str] = None,
        defer: bool = False,
    ) -> dict:
        """Queues ``runner(handle) -> result_id`` and starts it unless defer.

        subject_ids are the entities this job occupies; submitting while any
        of them already has a live job raises ConflictError.
        """
        if kind not in JOB_KINDS:
            raise ValidationError("job.kind", f"unknown job kind {kind!r}", "kind")
        subject_ids = list(subject_ids)
        with self._lock:
            if idempotency_key:
                existing = self._idempotency.get((kind, idempotency_key))
                if existing is not None:
                    return self.get(existing)
            for sid in subject_ids:
                holder = self._busy.get(sid)
                if holder is not None:
                    raise ConflictError(
                        "job.busy", f"entity {sid!r} already has job {holder!r} in flight", "id"
                    )
            job_id = new_id("job")
            doc = {
                "id": job_id,
                "kind": kind,
                "state": "queued",
                "progress": 0.0,
                "metrics": {},
                "result_id": None,
                "error": None,
                "idempotency_key": idempotency_key,
                "subject_ids": subject_ids,
                "created_at": _now(),
                "updated_at": _now(),
            }
            self._docs[job_id] = doc
            self._cancel[job_id] = threading.Event()
            self._runners[job_id] = runner
            for sid in subject_ids:
                self._busy[sid] = job_id
            if idempotency_key:
                self._idempotency[(kind, idempotency_key)] = job_id
            self._persist(job_id, force=True)
        if not defer:
            self.start(job_id)
        return self.get(job_id)

    def start(self, job_id: str) -> None:
        with self._lock:
            if job_id in self._threads or job_id not in self._runners:
                return
            thread = threading.Thread(target=self._run, args=(job_id,), daemon=True)
            self._threads[job_id] = thread
        thread.start()

    def get(self, job_id: str) -> dict:
        with self._lock:
            doc = self._docs.get(job_id)
            if doc is not None:
                return copy.deepcopy(doc)
        return self.store.load("jobs", job_id)

    def cancel(self, job_id: str) -> dict:
        with self._lock:
            doc = self._docs.get(job_id)
            if doc is None:
                doc = self.store.load("jobs", job_id)
                self._docs[job_id] = doc
            if doc["state"] in TERMINAL_STATES:
                raise ConflictError(
                    "job.already_finished",
                    f"job {job_id!r} is {doc['state']} and cannot be cancelled",
                    "state",
                )
            if doc["state"] == "queued" and job_id not in self._threads:
                self._finish(job_id, "cancelled")
            else:
                self._cancel.setdefault(job_id, threading.Event()).set()
        return self.get(job_id)

    def join(self, job_id: str, timeout: Optional[float] = None) -> dict:
        thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.get(job_id)

    def active_job_for(self, entity_id: str) -> Optional[str]:
        with self._lock:
            return self._busy.get(entity_id)

    # --- worker internals ---

    def _run(self, job_id: str) -> None:
        with self._lock:
            doc = self._docs[job_id]
            if doc["state"] != "queued":
                return
            doc["state"] = "running"
            doc["updated_at"] = _now()
            self._persist(job_id, force=True)
            runner = self._runners[job_id]
        try:
            result_id = runner(JobHandle(self, job_id))
        except ShadowOptError as exc:
            self._finish(job_id, "failed", error=exc.to_dict())
            return
        except Exception as exc:  # noqa: BLE001 - worker boundary
            envelope = {
                "code": "internal_error",
                "key": "job.exception",
                "message": f"{type(exc).__name__}: {exc}",
                "field_path": None,
            }
            self._finish(job_id, "failed", error=envelope)
            return
        if self._cancel_requested(job_id):
            self._finish(job_id, "cancelled", result_id=result_id)
        else:
            self._finish(job_id, "done", result_id=result_id)

    def _finish(self, job_id: str, state: str, result_id=None, error=None) -> None:
        with self._lock:
            doc = self._docs[job_id]
            if doc["state"] in TERMINAL_STATES:
                return
            doc["state"] = state
            doc["result_id"] = result_id
            doc["error"] = error
            if state == "done":
                doc["progress"] = 1.0
            doc["updated_at"] = _now()
            for sid in doc.get("subject_ids", []):
                if self._busy.get(sid) == job_id:
                    del self._busy[sid]
            self._runners.pop(job_id, None)
            self._persist(job_id, force=True)

    def _cancel_requested(self, job_id: str) -> bool:
        event = self._cancel.get(job_id)
        return event is not None and event.is_set()

    def _report_progress(self, job_id: str, fraction: float, metrics: Optional[dict]) -> None:
        with self._lock:
            doc = self._docs.get(job_id)
            if doc is None or doc["state"] in TERMINAL_STATES:
                return
            doc["progress"] = float(min(1.0, max(0.0, fraction)))
            if metrics:
                doc["metrics"].update(metrics)
            doc["updated_at"] = _now()
            self._persist(job_id)

    def _persist(self, job_id: str, force: bool = False) -> None:
        now = time.monotonic()
        if not force and now - self._last_persist.get(job_id, 0.0) < _PERSIST_INTERVAL_S:
            return
        self._last_persist[job_id] = now
        self.store.save("jobs", job_id, self._docs[job_id])


def _now() -> str:
    return format_rfc3339(datetime.now(timezone.utc))
