"""Core domain types: padding, path metrics, serialization round-trips."""

import json
from datetime import datetime, timezone

import numpy as np
import pytest

from shadowopt.core import (
    Dataset,
    DatasetFilter,
    ExecutionRecord,
    Moment,
    ParameterSpec,
    ParameterVector,
    ProgramTemplate,
    Trajectory,
    build_dataset,
    cycle_time,
    default_pad_length,
    dump_json,
    load_json,
    pad_trajectory,
    path_length,
    read_jsonl_records,
)
from shadowopt.errors import DomainRuleError, ParseError, ValidationError

TS = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_traj(positions, forces=None, dt=0.01, success=True, skills=None, tags=None):
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if forces is None:
        forces = np.ones(n)
    if skills is None:
        skills = ["approach"] * n
    return Trajectory(dt, positions, forces, success, skills, tags or {}, TS)


def make_template():
    return ProgramTemplate(
        id="prog-1",
        skill_sequence=("approach", "spiral_search", "insert"),
        parameter_specs=(
            ParameterSpec("approach_velocity", "mm/s", 5.0, 100.0, "approach"),
            ParameterSpec("search_velocity", "mm/s", 1.0, 40.0, "spiral_search"),
            ParameterSpec("search_radius", "mm", 0.5, 6.0, "spiral_search"),
            ParameterSpec("insert_velocity", "mm/s", 1.0, 30.0, "insert"),
        ),
    )


def random_record(rng, template, n_samples=None):
    lo, hi = template.bounds_arrays()
    params = ParameterVector.from_array(template.parameter_names, rng.uniform(lo, hi))
    n = n_samples if n_samples is not None else int(rng.integers(2, 40))
    traj = Trajectory(
        dt=0.01,
        positions=rng.normal(size=(n, 3)),
        forces=np.abs(rng.normal(size=n)),
        success=bool(rng.integers(0, 2)),
        skills=[("approach", "spiral_search", "insert")[int(rng.integers(0, 3))] for _ in range(n)],
        tags={"cell": "a"},
        timestamp=TS,
    )
    return ExecutionRecord(template.id, params, traj)


# -- padding ----------------------------------------------------------------


class TestPadTrajectory:
    def test_identity_when_length_matches(self):
        traj = make_traj([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
        assert pad_trajectory(traj, 3) == traj

    def test_extends_with_last_position_and_zero_force(self):
        traj = make_traj([[1, 2, 3], [4, 5, 6]], forces=[2.0, 3.0])
        padded = pad_trajectory(traj, 4)
        assert len(padded) == 4
        np.testing.assert_array_equal(
            padded.positions, [[1, 2, 3], [4, 5, 6], [4, 5, 6], [4, 5, 6]]
        )
        np.testing.assert_array_equal(padded.forces, [2.0, 3.0, 0.0, 0.0])
        assert padded.success == traj.success

    def test_truncates_to_prefix(self):
        traj = make_traj([[i, 0, 0] for i in range(5)], forces=np.arange(5.0))
        padded = pad_trajectory(traj, 2)
        np.testing.assert_array_equal(padded.positions, [[0, 0, 0], [1, 0, 0]])
        np.testing.assert_array_equal(padded.forces, [0.0, 1.0])

    def test_padding_preserves_path_length(self):
        traj = make_traj([[0, 0, 0], [3, 4, 0]])
        assert path_length(pad_trajectory(traj, 10)) == path_length(traj)

    def test_idempotent(self):
        traj = make_traj([[0, 0, 0], [1, 1, 1]])
        once = pad_trajectory(traj, 7)
        assert pad_trajectory(once, 7) == once

    def test_rejects_non_positive_target(self):
        with pytest.raises(ValidationError):
            pad_trajectory(make_traj([[0, 0, 0]]), 0)


# -- metrics ----------------------------------------------------------------


class TestPathLength:
    def test_collinear_sum(self):
        traj = make_traj([[0, 0, 0], [0, 0, 10], [0, 0, 10]])
        assert path_length(traj) == pytest.approx(10.0)

    def test_single_sample_is_zero(self):
        assert path_length(make_traj([[3, 2, 1]])) == 0.0

    def test_unit_square_loop(self):
        traj = make_traj([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 0]])
        assert path_length(traj) == pytest.approx(4.0)

    def test_translation_invariant(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(20, 3))
        a = path_length(make_traj(pts))
        b = path_length(make_traj(pts + np.array([10.0, -4.0, 2.5])))
        assert a == pytest.approx(b, rel=1e-12)


class TestCycleTime:
    def test_101_samples(self):
        traj = make_traj(np.zeros((101, 3)), dt=0.01)
        assert cycle_time(traj) == pytest.approx(1.0)

    def test_single_sample(self):
        assert cycle_time(make_traj([[0, 0, 0]])) == 0.0

    def test_50_samples_dt_002(self):
        traj = make_traj(np.zeros((50, 3)), dt=0.02)
        assert cycle_time(traj) == pytest.approx(0.98)


# -- validation -------------------------------------------------------------


class TestValidation:
    def test_trajectory_rejects_negative_force(self):
        with pytest.raises(ValidationError):
            make_traj([[0, 0, 0]], forces=[-1.0])

    def test_trajectory_rejects_bad_shape(self):
        with pytest.raises(ValidationError):
            Trajectory(0.01, np.zeros((3, 2)), np.zeros(3), True, ["a"] * 3, {}, TS)

    def test_trajectory_rejects_nonpositive_dt(self):
        with pytest.raises(ValidationError):
            make_traj([[0, 0, 0]], dt=0.0)

    def test_trajectory_arrays_readonly(self):
        traj = make_traj([[0, 0, 0], [1, 0, 0]])
        with pytest.raises(ValueError):
            traj.positions[0, 0] = 9.0

    def test_parameter_spec_rejects_inverted_bounds(self):
        with pytest.raises(ValidationError):
            ParameterSpec("v", "mm/s", 10.0, 5.0, "approach")

    def test_template_rejects_duplicate_parameter_names(self):
        with pytest.raises(ValidationError):
            ProgramTemplate(
                id="p",
                skill_sequence=("approach",),
                parameter_specs=(
                    ParameterSpec("v", "mm/s", 0.0, 1.0, "approach"),
                    ParameterSpec("v", "mm/s", 0.0, 2.0, "approach"),
                ),
            )

    def test_template_flags_out_of_bounds_vector(self):
        template = make_template()
        vec = ParameterVector(
            {"approach_velocity": 200.0, "search_velocity": 5.0, "search_radius": 2.0, "insert_velocity": 5.0}
        )
        with pytest.raises(ValidationError) as err:
            template.validate_vector(vec)
        assert "approach_velocity" in str(err.value)

    def test_template_flags_key_mismatch(self):
        template = make_template()
        with pytest.raises(ValidationError):
            template.validate_vector(ParameterVector({"approach_velocity": 10.0}))

    def test_parameter_vector_rejects_nan(self):
        with pytest.raises(ValidationError):
            ParameterVector({"v": float("nan")})


# -- serialization ----------------------------------------------------------


class TestSerialization:
    def test_trajectory_round_trip(self):
        rng = np.random.default_rng(11)
        traj = make_traj(rng.normal(size=(9, 3)), forces=np.abs(rng.normal(size=9)), tags={"cell": "b"})
        again = Trajectory.from_dict(load_json(dump_json(traj.to_dict())))
        assert again == traj

    def test_round_trip_preserves_float_bits(self):
        # repr-based JSON floats are exact for binary64 values
        values = [0.1, 1 / 3, 1e-17, 123456.789012345]
        traj = make_traj([[v, 2 * v, -v] for v in values], forces=[abs(v) for v in values])
        again = Trajectory.from_dict(json.loads(dump_json(traj.to_dict())))
        assert np.array_equal(again.positions, traj.positions)
        assert np.array_equal(again.forces, traj.forces)

    def test_record_round_trip_property(self):
        rng = np.random.default_rng(5)
        template = make_template()
        for _ in range(10):
            record = random_record(rng, template)
            assert ExecutionRecord.from_dict(record.to_dict()) == record

    def test_dataset_round_trip(self):
        rng = np.random.default_rng(7)
        template = make_template()
        records = [random_record(rng, template) for _ in range(8)]
        ds = build_dataset("d-1", "demo", template, records)
        again = Dataset.from_dict(ds.to_dict())
        assert again.id == ds.id
        assert again.pad_length == ds.pad_length
        assert again.records == ds.records
        assert again.norm_stats.to_dict() == ds.norm_stats.to_dict()

    def test_truncated_document_names_missing_field(self):
        doc = make_traj([[0, 0, 0]]).to_dict()
        del doc["dt"]
        with pytest.raises(ParseError) as err:
            Trajectory.from_dict(doc, "trajectory")
        assert "dt" in (err.value.field_path or "")

    def test_unknown_extra_field_ignored(self):
        doc = make_traj([[0, 0, 0], [1, 0, 0]]).to_dict()
        doc["vendor_extension"] = {"anything": 1}
        traj = Trajectory.from_dict(doc)
        assert len(traj) == 2

    def test_timestamp_rendered_as_utc_z(self):
        doc = make_traj([[0, 0, 0]]).to_dict()
        assert doc["ts"].endswith("Z")

    def test_rejects_naive_timestamp(self):
        doc = make_traj([[0, 0, 0]]).to_dict()
        doc["ts"] = "2024-03-01T12:00:00"
        with pytest.raises(ParseError):
            Trajectory.from_dict(doc)

    def test_rejects_string_where_number_expected(self):
        doc = make_traj([[0, 0, 0]]).to_dict()
        doc["dt"] = "0.01"
        with pytest.raises(ParseError):
            Trajectory.from_dict(doc)

    def test_jsonl_round_trip_with_blank_lines(self):
        rng = np.random.default_rng(13)
        template = make_template()
        records = [random_record(rng, template) for _ in range(3)]
        text = "\n".join(r.to_json_line() for r in records) + "\n\n"
        assert read_jsonl_records(text) == records


# -- datasets ---------------------------------------------------------------


class TestDataset:
    def test_filter_by_time_window(self):
        template = make_template()
        rng = np.random.default_rng(1)
        records = [random_record(rng, template) for _ in range(4)]
        flt = DatasetFilter(time_from=TS, time_to=TS)
        assert all(flt.matches(r) for r in records)
        flt = DatasetFilter(time_to=datetime(2020, 1, 1, tzinfo=timezone.utc))
        assert not any(flt.matches(r) for r in records)

    def test_filter_by_tag(self):
        template = make_template()
        rng = np.random.default_rng(2)
        record = random_record(rng, template)
        assert DatasetFilter(tag_equals={"cell": "a"}).matches(record)
        assert not DatasetFilter(tag_equals={"cell": "z"}).matches(record)

    def test_empty_selection_is_domain_error(self):
        template = make_template()
        rng = np.random.default_rng(4)
        records = [random_record(rng, template)]
        with pytest.raises(DomainRuleError):
            build_dataset("d", "x", template, records, DatasetFilter(tag_equals={"cell": "nope"}))

    def test_mixed_dt_rejected(self):
        template = make_template()
        rng = np.random.default_rng(6)
        a = random_record(rng, template)
        b = random_record(rng, template)
        slow = ExecutionRecord(
            b.program_id,
            b.parameters,
            Trajectory(0.02, b.trajectory.positions, b.trajectory.forces, True, b.trajectory.skills, {}, TS),
        )
        with pytest.raises(DomainRuleError):
            build_dataset("d", "x", template, [a, slow])

    def test_default_pad_length_is_p95_ceiling(self):
        lengths = list(range(1, 101))
        assert default_pad_length(lengths) == int(np.ceil(np.quantile(np.asarray(lengths, float), 0.95)))

    def test_norm_stats_cover_channels_and_cycle_time(self):
        template = make_template()
        rng = np.random.default_rng(8)
        ds = build_dataset("d", "x", template, [random_record(rng, template) for _ in range(6)])
        for c in ("x", "y", "z", "force"):
            assert c in ds.norm_stats.channels
        assert ds.norm_stats.cycle_time.stddev >= 0

    def test_degenerate_moment_flagged_not_divided(self):
        m = Moment.of(np.array([2.0, 2.0, 2.0]))
        assert m.degenerate
        assert m.safe_std == 1.0

    def test_padded_channels_shape(self):
        template = make_template()
        rng = np.random.default_rng(9)
        ds = build_dataset("d", "x", template, [random_record(rng, template) for _ in range(5)], pad_length=12)
        assert ds.padded_channels().shape == (5, 12, 4)
