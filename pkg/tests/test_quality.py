"""Quality rules against hand-computed IQR fences and constructed datasets."""

import math

import numpy as np
import pytest

from shadowopt.core import (
    ExecutionRecord,
    ParameterSpec,
    ParameterVector,
    ProgramTemplate,
    Trajectory,
    build_dataset,
    path_length,
    peak_force,
)
from shadowopt.quality import QualityThresholds, analyze, distribution_summary, iqr_fences
from shadowopt.simulate import SimConfig, batch_execute, gearbox_template

FIXED = {"search_velocity": 10.0, "max_spiral_radius": 4.0, "insert_velocity": 10.0}


def sim_dataset(n=40, seed=3, **range_overrides):
    ranges = {k: [v, v + 1e-9] for k, v in FIXED.items()}
    ranges["approach_velocity"] = [5.0, 100.0]
    ranges.update(range_overrides)
    records = batch_execute(n, "uniform-random", ranges, SimConfig(), seed=seed)
    return build_dataset("d-q", "quality", gearbox_template(), records)


# -- independent quantile/fence oracle ---------------------------------------


def manual_quantile(values, q):
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    frac = pos - lo
    return s[lo] + (s[hi] - s[lo]) * frac


def manual_fences(values):
    q1 = manual_quantile(values, 0.25)
    q3 = manual_quantile(values, 0.75)
    return q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)


class TestFences:
    def test_fences_match_manual_recomputation(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            values = rng.normal(size=int(rng.integers(4, 60)))
            lo, hi = iqr_fences(values)
            mlo, mhi = manual_fences(values.tolist())
            assert lo == pytest.approx(mlo, rel=1e-12)
            assert hi == pytest.approx(mhi, rel=1e-12)


class TestAnalyze:
    def test_constant_parameter_insufficient(self):
        ds = sim_dataset(approach_velocity=[20.0, 20.0 + 1e-12])
        report = analyze(ds)
        entry = report.parameter("approach_velocity")
        assert entry.coverage_ratio == pytest.approx(0.0, abs=1e-10)
        assert not entry.sufficient
        assert entry.message_key == "quality.low_coverage"
        assert not report.overall_ok

    def test_full_range_uniform_sufficient(self):
        ds = sim_dataset(n=100)
        entry = analyze(ds).parameter("approach_velocity")
        assert entry.sufficient
        assert entry.coverage_ratio > 0.8
        assert entry.message_key == "quality.variance_sufficient"

    def test_injected_force_spike_flagged(self):
        ds = sim_dataset(n=30)
        victim = 7
        spiked = []
        for i, r in enumerate(ds.records):
            t = r.trajectory
            if i == victim:
                t = Trajectory(t.dt, t.positions, t.forces * 10.0, t.success, t.skills, t.tags, t.timestamp)
            spiked.append(ExecutionRecord(r.program_id, r.parameters, t))
        ds2 = build_dataset("d-s", "spiked", gearbox_template(), spiked)
        report = analyze(ds2)
        assert victim in report.outlier_indices
        # manual recomputation of the fences over both summary stats
        lengths = [path_length(r.trajectory) for r in ds2.records]
        peaks = [peak_force(r.trajectory) for r in ds2.records]
        lo_l, hi_l = manual_fences(lengths)
        lo_p, hi_p = manual_fences(peaks)
        expected = sorted(
            i
            for i in range(len(ds2))
            if not (lo_l <= lengths[i] <= hi_l) or not (lo_p <= peaks[i] <= hi_p)
        )
        assert list(report.outlier_indices) == expected

    def test_permutation_invariant(self):
        ds = sim_dataset(n=25)
        rng = np.random.default_rng(5)
        perm = rng.permutation(len(ds))
        shuffled = build_dataset(
            "d-p", "perm", gearbox_template(), [ds.records[i] for i in perm], pad_length=ds.pad_length
        )
        a, b = analyze(ds), analyze(shuffled)
        for name in gearbox_template().parameter_names:
            pa, pb = a.parameter(name), b.parameter(name)
            assert pa.sufficient == pb.sufficient
            assert pa.coverage_ratio == pytest.approx(pb.coverage_ratio)
        remapped = sorted(int(np.nonzero(perm == i)[0][0]) for i in a.outlier_indices)
        assert list(b.outlier_indices) == remapped

    def test_scale_invariance_of_sufficiency(self):
        # same values and bounds, both scaled by c: verdict unchanged
        def make(scale):
            template = ProgramTemplate(
                id="p-scale",
                skill_sequence=("approach",),
                parameter_specs=(ParameterSpec("v", "mm/s", 1.0 * scale, 11.0 * scale, "approach"),),
            )
            rng = np.random.default_rng(2)
            records = []
            for _ in range(20):
                v = rng.uniform(4.0, 7.0) * scale
                traj = Trajectory(0.01, rng.normal(size=(6, 3)), np.ones(6), True, ["approach"] * 6)
                records.append(ExecutionRecord("p-scale", ParameterVector({"v": v}), traj))
            return analyze(build_dataset("d", "s", template, records), template)

        a, b = make(1.0), make(37.5)
        pa, pb = a.parameter("v"), b.parameter("v")
        assert pa.sufficient == pb.sufficient
        assert pa.coverage_ratio == pytest.approx(pb.coverage_ratio)
        assert pa.distinct_values == pb.distinct_values

    def test_overall_ok_needs_both_outcomes(self):
        config = SimConfig(hole_offset_sigma=0.0, noise_amp=0.0)
        records = batch_execute(60, "uniform-random", {"approach_velocity": [5.0, 45.0]}, config, seed=9)
        ds = build_dataset("d-ok", "allwin", gearbox_template(), records)
        report = analyze(ds)
        assert report.fail_count == 0
        assert not report.overall_ok

    def test_thresholds_validated(self):
        with pytest.raises(Exception):
            QualityThresholds(min_coverage=1.5)


class TestDistributionSummary:
    def test_identical_trajectories_collapse_envelope(self):
        template = gearbox_template()
        records = batch_execute(
            4, "fixed",
            {"approach_velocity": 20.0, **FIXED},
            SimConfig(hole_offset_sigma=0.0, noise_amp=0.0),
            seed=1,
        )
        ds = build_dataset("d-e", "env", template, records)
        summary = distribution_summary(ds)
        env = summary["envelopes"]["success"]["channels"]
        for channel in ("x", "y", "z", "force"):
            assert env[channel]["min"] == env[channel]["mean"] == env[channel]["max"]

    def test_all_success_failure_group_empty(self):
        records = batch_execute(
            5, "uniform-random", {"approach_velocity": [5.0, 45.0]},
            SimConfig(hole_offset_sigma=0.0, noise_amp=0.0), seed=2,
        )
        ds = build_dataset("d-e2", "env", gearbox_template(), records)
        summary = distribution_summary(ds)
        assert summary["envelopes"]["failure"]["count"] == 0
        assert summary["envelopes"]["failure"]["channels"] is None
        assert summary["envelopes"]["success"]["count"] == 5

    def test_mean_envelope_of_f_and_3f(self):
        template = ProgramTemplate(
            id="p-env",
            skill_sequence=("approach",),
            parameter_specs=(ParameterSpec("v", "mm/s", 0.0, 10.0, "approach"),),
        )
        base = np.array([1.0, 2.0, 3.0, 4.0])
        recs = []
        for scale in (1.0, 3.0):
            traj = Trajectory(0.01, np.zeros((4, 3)), base * scale, True, ["approach"] * 4)
            recs.append(ExecutionRecord("p-env", ParameterVector({"v": 5.0}), traj))
        ds = build_dataset("d-e3", "env", template, recs, pad_length=4)
        summary = distribution_summary(ds, template)
        mean = summary["envelopes"]["success"]["channels"]["force"]["mean"]
        np.testing.assert_allclose(mean, base * 2.0)

    def test_envelope_lengths_match_pad_length(self):
        ds = sim_dataset(n=10)
        summary = distribution_summary(ds)
        env = summary["envelopes"]["success"]["channels"] or summary["envelopes"]["failure"]["channels"]
        assert len(env["x"]["min"]) == ds.pad_length
