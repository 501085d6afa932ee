"""Durability and recovery behavior of the file store."""

import json
import os
import threading

import pytest

from shadowopt.errors import ConflictError, NotFoundError, ValidationError
from shadowopt.store import KINDS, Store, open_store


def test_save_load_round_trip_is_byte_identical(tmp_path):
    store = Store(str(tmp_path))
    doc = {"id": "a1", "nested": {"x": [1.5, -2.25e-8, 3]}, "text": "über"}
    store.save("programs", "a1", doc)
    assert store.load("programs", "a1") == doc
    # a second store on the same directory sees the same bytes
    again = Store(str(tmp_path))
    assert again.load("programs", "a1") == doc


def test_load_missing_raises_not_found(tmp_path):
    store = Store(str(tmp_path))
    with pytest.raises(NotFoundError):
        store.load("models", "nope")
    with pytest.raises(NotFoundError):
        store.delete("models", "nope")


def test_bad_ids_and_kinds_rejected(tmp_path):
    store = Store(str(tmp_path))
    with pytest.raises(ValidationError):
        store.save("programs", "../escape", {})
    with pytest.raises(ValidationError):
        store.save("programs", "a/b", {})
    with pytest.raises(ValidationError):
        store.save("not-a-kind", "x", {})


def test_create_refuses_overwrite(tmp_path):
    store = Store(str(tmp_path))
    store.create("sessions", "s1", {"v": 1})
    with pytest.raises(ConflictError):
        store.create("sessions", "s1", {"v": 2})
    assert store.load("sessions", "s1") == {"v": 1}


def test_save_is_atomic_no_partial_file_visible(tmp_path):
    store = Store(str(tmp_path))
    big = {"id": "big", "blob": ["x" * 100] * 500}
    errors = []

    def reader():
        for _ in range(200):
            if store.exists("datasets", "big"):
                try:
                    loaded = store.load("datasets", "big")
                    assert loaded["blob"][-1] == "x" * 100
                except Exception as exc:  # any torn read is a failure
                    errors.append(exc)

    thread = threading.Thread(target=reader)
    thread.start()
    for _ in range(50):
        store.save("datasets", "big", big)
    thread.join()
    assert errors == []
    # no stray temp files survive
    leftovers = [n for n in os.listdir(tmp_path / "datasets") if not n.endswith(".json")]
    assert leftovers == []


def test_list_ids_sorted_and_load_all(tmp_path):
    store = Store(str(tmp_path))
    for name in ("b", "a", "c"):
        store.save("models", name, {"id": name})
    assert store.list_ids("models") == ["a", "b", "c"]
    assert [d["id"] for d in store.load_all("models")] == ["a", "b", "c"]


def test_execution_log_appends_and_reloads(tmp_path):
    store = Store(str(tmp_path))
    docs = [{"i": i} for i in range(5)]
    assert store.append_executions(docs[:3]) == 3
    assert store.append_executions(docs[3:]) == 2
    assert store.load_executions() == docs


def test_torn_trailing_execution_line_is_skipped(tmp_path):
    store = Store(str(tmp_path))
    store.append_executions([{"i": 0}, {"i": 1}])
    with open(store.executions_path, "a", encoding="utf-8") as fh:
        fh.write('{"i": 2, "torn": tru')  # crash mid-write: no newline, bad JSON
    assert store.load_executions() == [{"i": 0}, {"i": 1}]
    # appending afterwards still works and the torn line stays ignored
    store.append_executions([{"i": 3}])
    reloaded = Store(str(tmp_path)).load_executions()
    assert {"i": 3} in reloaded and {"i": 0} in reloaded


def test_interrupted_jobs_marked_failed_on_startup(tmp_path):
    store = Store(str(tmp_path))
    store.save("jobs", "j1", {"id": "j1", "state": "running", "error": None})
    store.save("jobs", "j2", {"id": "j2", "state": "queued", "error": None})
    store.save("jobs", "j3", {"id": "j3", "state": "done", "error": None})
    recovered = Store(str(tmp_path))
    assert recovered.load("jobs", "j1")["state"] == "failed"
    assert recovered.load("jobs", "j1")["error"]["key"] == "job.interrupted"
    assert recovered.load("jobs", "j2")["state"] == "failed"
    assert recovered.load("jobs", "j3")["state"] == "done"


def test_unwritable_dir_raises_with_path_in_message(tmp_path):
    target = tmp_path / "ro"
    target.mkdir()
    os.chmod(target, 0o500)
    try:
        if os.access(target, os.W_OK):  # running as root: chmod is a no-op
            pytest.skip("permissions not enforced for this user")
        with pytest.raises(ValidationError) as err:
            Store(str(target))
        assert "ro" in err.value.message
        assert err.value.key == "store.unwritable"
    finally:
        os.chmod(target, 0o700)


def test_open_store_requires_directory():
    with pytest.raises(ValidationError):
        open_store(None)
    with pytest.raises(ValidationError):
        open_store("")


def test_all_kinds_have_directories(tmp_path):
    Store(str(tmp_path))
    for kind in KINDS:
        assert (tmp_path / kind).is_dir()


def test_stored_files_are_compact_json(tmp_path):
    store = Store(str(tmp_path))
    store.save("programs", "p", {"a": 1, "b": [1, 2]})
    text = (tmp_path / "programs" / "p.json").read_text()
    assert text == json.dumps({"a": 1, "b": [1, 2]}, separators=(",", ":"))
