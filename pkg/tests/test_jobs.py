"""Lifecycle, cancellation, idempotency and recovery of background jobs."""

import threading
import time

import pytest

from shadowopt.errors import ConflictError, ValidationError
from shadowopt.jobs import JobManager
from shadowopt.store import Store


def make_manager(tmp_path):
    return JobManager(Store(str(tmp_path)))


def test_job_runs_to_done_with_progress(tmp_path):
    jobs = make_manager(tmp_path)

    def runner(handle):
        for i in range(4):
            handle.progress((i + 1) / 4, {"step": i + 1})
        return "model-xyz"

    doc = jobs.submit("train", ["ds-1"], runner)
    assert doc["kind"] == "train" and doc["subject_ids"] == ["ds-1"]
    final = jobs.join(doc["id"], timeout=10)
    assert final["state"] == "done"
    assert final["result_id"] == "model-xyz"
    assert final["progress"] == 1.0
    assert final["metrics"]["step"] == 4
    # terminal state is persisted
    assert jobs.store.load("jobs", doc["id"])["state"] == "done"


def test_failure_produces_error_envelope(tmp_path):
    jobs = make_manager(tmp_path)

    def runner(handle):
        raise ValidationError("x.bad", "bad input", "x")

    doc = jobs.submit("train", ["ds-1"], runner)
    final = jobs.join(doc["id"], timeout=10)
    assert final["state"] == "failed"
    assert final["error"]["code"] == "validation_error"
    assert final["error"]["key"] == "x.bad"

    def boom(handle):
        raise RuntimeError("surprise")

    doc2 = jobs.submit("train", ["ds-1"], boom)
    final2 = jobs.join(doc2["id"], timeout=10)
    assert final2["state"] == "failed"
    assert final2["error"]["code"] == "internal_error"
    assert "surprise" in final2["error"]["message"]


def test_cooperative_cancel_running_job(tmp_path):
    jobs = make_manager(tmp_path)
    started = threading.Event()

    def runner(handle):
        started.set()
        for _ in range(2000):
            if handle.should_stop():
                return None
            time.sleep(0.005)
        return "finished"

    doc = jobs.submit("optimize", ["model-1"], runner)
    assert started.wait(5)
    jobs.cancel(doc["id"])
    final = jobs.join(doc["id"], timeout=10)
    assert final["state"] == "cancelled"
    # the subject is free again
    assert jobs.active_job_for("model-1") is None


def test_cancel_queued_job_never_runs(tmp_path):
    jobs = make_manager(tmp_path)
    ran = threading.Event()

    def runner(handle):
        ran.set()
        return "x"

    doc = jobs.submit("train", ["ds-1"], runner, defer=True)
    assert doc["state"] == "queued"
    cancelled = jobs.cancel(doc["id"])
    assert cancelled["state"] == "cancelled"
    jobs.start(doc["id"])  # starting after cancel must be a no-op
    time.sleep(0.05)
    assert not ran.is_set()


def test_cancel_terminal_job_conflicts(tmp_path):
    jobs = make_manager(tmp_path)
    doc = jobs.submit("train", ["ds-1"], lambda handle: "m")
    jobs.join(doc["id"], timeout=10)
    with pytest.raises(ConflictError):
        jobs.cancel(doc["id"])


def test_idempotent_submission_returns_same_job(tmp_path):
    jobs = make_manager(tmp_path)
    calls = []

    def runner(handle):
        calls.append(1)
        return "m"

    first = jobs.submit("train", ["ds-1"], runner, idempotency_key="k1")
    jobs.join(first["id"], timeout=10)
    second = jobs.submit("train", ["ds-1"], runner, idempotency_key="k1")
    assert second["id"] == first["id"]
    assert calls == [1]


def test_busy_subject_rejects_second_job(tmp_path):
    jobs = make_manager(tmp_path)
    release = threading.Event()

    def runner(handle):
        release.wait(10)
        return "m"

    first = jobs.submit("train", ["ds-1"], runner)
    with pytest.raises(ConflictError):
        jobs.submit("train", ["ds-1"], lambda handle: "other")
    release.set()
    jobs.join(first["id"], timeout=10)
    # done → the subject admits new jobs
    second = jobs.submit("train", ["ds-1"], lambda handle: "other")
    assert second["id"] != first["id"]
    jobs.join(second["id"], timeout=10)


def test_unknown_kind_rejected(tmp_path):
    jobs = make_manager(tmp_path)
    with pytest.raises(ValidationError):
        jobs.submit("mystery", ["x"], lambda handle: None)


def test_restart_preserves_idempotency_and_marks_interrupted(tmp_path):
    store = Store(str(tmp_path))
    jobs = JobManager(store)
    block = threading.Event()

    def runner(handle):
        block.wait(10)
        return "m"

    doc = jobs.submit("train", ["ds-1"], runner, idempotency_key="boot")
    # simulate a crash: reopen the directory without finishing the job
    time.sleep(0.05)
    store2 = Store(str(tmp_path))
    jobs2 = JobManager(store2)
    block.set()
    recovered = jobs2.get(doc["id"])
    assert recovered["state"] == "failed"
    assert recovered["error"]["key"] == "job.interrupted"
    # the same idempotency key still maps to the original job
    again = jobs2.submit("train", ["ds-1"], lambda handle: "m2", idempotency_key="boot")
    assert again["id"] == doc["id"]
    assert again["state"] == "failed"
