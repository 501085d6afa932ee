"""Domain types shared by every other module.

Program parameters, trajectories, execution records, datasets and their
canonical JSON representation. All types are immutable values after
construction and safe to share between threads.

Wire format (UTF-8 JSON): a trajectory is
``{"dt": 0.01, "samples": [{"p": [x, y, z], "f": F}, ...], "success": true,
"skills": [...], "tags": {...}, "ts": "RFC3339"}``; execution logs are stored
one JSON document per line (append-only ingestion file).
"""

from __future__ import annotations

import json
import math
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import DomainRuleError, ParseError, ValidationError

SKILL_KINDS = ("approach", "spiral_search", "insert")

#: Trajectory channels, in storage order.
CHANNELS = ("x", "y", "z", "force")

#: Timestamp used for synthetic trajectories (model predictions) so that
#: identical inputs serialize byte-identically.
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:10]}"


# ---------------------------------------------------------------------------
# parse helpers


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict):
        raise ParseError("parse.object_expected", f"expected object at {path}", path)
    if key not in doc:
        raise ParseError("parse.missing_field", f"missing field {path}.{key}", f"{path}.{key}")
    return doc[key]


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("parse.number_expected", f"expected number at {path}", path)
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("parse.integer_expected", f"expected integer at {path}", path)
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ParseError("parse.string_expected", f"expected string at {path}", path)
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ParseError("parse.boolean_expected", f"expected boolean at {path}", path)
    return value


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ParseError("parse.array_expected", f"expected array at {path}", path)
    return value


def _as_str_map(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError("parse.object_expected", f"expected object at {path}", path)
    out = {}
    for k, v in value.items():
        out[_as_str(k, path)] = _as_str(v, f"{path}.{k}")
    return out


def format_rfc3339(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_rfc3339(value, path: str) -> datetime:
    raw = _as_str(value, path)
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise ParseError("parse.timestamp", f"invalid RFC3339 timestamp at {path}", path) from None
    if ts.tzinfo is None:
        raise ParseError("parse.timestamp_naive", f"timestamp at {path} lacks a timezone", path)
    return ts.astimezone(timezone.utc)


def dump_json(doc: dict, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(doc, indent=2, ensure_ascii=False)
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def load_json(text: str | bytes, path: str = "$") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("parse.invalid_json", f"invalid JSON: {exc}", path) from None
    if not isinstance(doc, dict):
        raise ParseError("parse.object_expected", f"expected object at {path}", path)
    return doc


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ParameterSpec:
    """One named, bounded, unit-carrying program parameter of a skill."""

    name: str
    unit: str
    lower_bound: float
    upper_bound: float
    skill: str
    expert_only: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValidationError("parameter_spec.name_empty", "parameter name must be non-empty", "name")
        if not (math.isfinite(self.lower_bound) and math.isfinite(self.upper_bound)):
            raise ValidationError(
                "parameter_spec.bounds_finite", f"bounds of {self.name!r} must be finite", "lower_bound"
            )
        if not self.lower_bound < self.upper_bound:
            raise ValidationError(
                "parameter_spec.bounds_order",
                f"lower_bound must be < upper_bound for {self.name!r}",
                "lower_bound",
            )
        if self.skill not in SKILL_KINDS:
            raise ValidationError(
                "parameter_spec.unknown_skill", f"unknown skill {self.skill!r} for {self.name!r}", "skill"
            )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "unit": self.unit,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "skill": self.skill,
            "expert_only": self.expert_only,
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "parameter_spec") -> "ParameterSpec":
        return cls(
            name=_as_str(_require(doc, "name", path), f"{path}.name"),
            unit=_as_str(_require(doc, "unit", path), f"{path}.unit"),
            lower_bound=_as_float(_require(doc, "lower_bound", path), f"{path}.lower_bound"),
            upper_bound=_as_float(_require(doc, "upper_bound", path), f"{path}.upper_bound"),
            skill=_as_str(_require(doc, "skill", path), f"{path}.skill"),
            expert_only=_as_bool(doc.get("expert_only", False), f"{path}.expert_only"),
        )


@dataclass(frozen=True)
class ProgramTemplate:
    """A parameterized program: an ordered skill sequence plus its parameters."""

    id: str
    skill_sequence: tuple[str, ...]
    parameter_specs: tuple[ParameterSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "skill_sequence", tuple(self.skill_sequence))
        object.__setattr__(self, "parameter_specs", tuple(self.parameter_specs))
        if not self.id:
            raise ValidationError("program.id_empty", "program id must be non-empty", "id")
        if not self.skill_sequence:
            raise ValidationError("program.no_skills", "skill_sequence must be non-empty", "skill_sequence")
        for s in self.skill_sequence:
            if s not in SKILL_KINDS:
                raise ValidationError("program.unknown_skill", f"unknown skill kind {s!r}", "skill_sequence")
        names = [p.name for p in self.parameter_specs]
        if len(set(names)) != len(names):
            raise ValidationError("program.duplicate_parameter", "parameter names must be unique", "parameter_specs")
        for p in self.parameter_specs:
            if p.skill not in self.skill_sequence:
                raise ValidationError(
                    "program.parameter_skill",
                    f"parameter {p.name!r} references skill {p.skill!r} not in the sequence",
                    "parameter_specs",
                )

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameter_specs)

    def spec_of(self, name: str) -> ParameterSpec:
        for p in self.parameter_specs:
            if p.name == name:
                return p
        raise ValidationError("program.unknown_parameter", f"unknown parameter {name!r}", "name")

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([p.lower_bound for p in self.parameter_specs], dtype=float)
        hi = np.array([p.upper_bound for p in self.parameter_specs], dtype=float)
        return lo, hi

    def skill_signature(self) -> str:
        """Canonical signature used to match pretrained base models."""
        skills = ",".join(self.skill_sequence)
        params = ";".join(
            f"{p.name}:{p.unit}:{p.skill}:{p.lower_bound:g}:{p.upper_bound:g}" for p in self.parameter_specs
        )
        return f"{skills}|{params}"

    def validate_vector(self, vector: "ParameterVector") -> None:
        names = list(vector.values.keys())
        if names != list(self.parameter_names):
            raise ValidationError(
                "parameters.key_mismatch",
                f"expected parameters {list(self.parameter_names)}, got {names}",
                "parameters",
            )
        offending = [
            n
            for n, v in vector.values.items()
            if not (self.spec_of(n).lower_bound <= v <= self.spec_of(n).upper_bound)
        ]
        if offending:
            detail = "; ".join(
                f"{n}={vector.values[n]:g} outside [{self.spec_of(n).lower_bound:g},"
                f" {self.spec_of(n).upper_bound:g}]"
                for n in offending
            )
            raise ValidationError(
                "parameters.out_of_bounds",
                f"parameters out of bounds: {detail}",
                f"parameters.{offending[0]}",
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "skill_sequence": list(self.skill_sequence),
            "parameter_specs": [p.to_dict() for p in self.parameter_specs],
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "program") -> "ProgramTemplate":
        specs = [
            ParameterSpec.from_dict(p, f"{path}.parameter_specs[{i}]")
            for i, p in enumerate(_as_list(_require(doc, "parameter_specs", path), f"{path}.parameter_specs"))
        ]
        return cls(
            id=_as_str(_require(doc, "id", path), f"{path}.id"),
            skill_sequence=tuple(
                _as_str(s, f"{path}.skill_sequence[{i}]")
                for i, s in enumerate(_as_list(_require(doc, "skill_sequence", path), f"{path}.skill_sequence"))
            ),
            parameter_specs=tuple(specs),
        )


class ParameterVector:
    """Ordered name -> value mapping matching a template's parameter specs."""

    __slots__ = ("values",)

    def __init__(self, values: dict[str, float]):
        clean: dict[str, float] = {}
        for name, value in values.items():
            v = float(value)
            if not math.isfinite(v):
                raise ValidationError("parameters.not_finite", f"parameter {name!r} is not finite", f"parameters.{name}")
            clean[str(name)] = v
        object.__setattr__(self, "values", clean)

    def __setattr__(self, *args):
        raise AttributeError("ParameterVector is immutable")

    def __eq__(self, other):
        return isinstance(other, ParameterVector) and list(self.values.items()) == list(other.values.items())

    def __hash__(self):
        return hash(tuple(self.values.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}={v:g}" for k, v in self.values.items())
        return f"ParameterVector({inner})"

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def to_array(self) -> np.ndarray:
        return np.array(list(self.values.values()), dtype=float)

    @classmethod
    def from_array(cls, names, values) -> "ParameterVector":
        return cls({n: float(v) for n, v in zip(names, values)})

    def to_dict(self) -> dict:
        return dict(self.values)

    @classmethod
    def from_dict(cls, doc, path: str = "parameters") -> "ParameterVector":
        if not isinstance(doc, dict):
            raise ParseError("parse.object_expected", f"expected object at {path}", path)
        return cls({k: _as_float(v, f"{path}.{k}") for k, v in doc.items()})


# ---------------------------------------------------------------------------
# trajectories


class Trajectory:
    """Fixed-rate time series of end-effector position (mm) and force magnitude (N).

    ``positions`` is an (n, 3) array, ``forces`` an (n,) array; both are
    read-only. ``skills`` annotates each sample with the skill that produced it.
    """

    __slots__ = ("dt", "positions", "forces", "success", "skills", "tags", "timestamp")

    def __init__(self, dt, positions, forces, success, skills, tags=None, timestamp=EPOCH):
        positions = np.asarray(positions, dtype=float)
        forces = np.asarray(forces, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValidationError("trajectory.positions_shape", "positions must be an (n, 3) array", "samples")
        n = positions.shape[0]
        if n < 1:
            raise ValidationError("trajectory.empty", "trajectory must have at least one sample", "samples")
        if forces.shape != (n,):
            raise ValidationError("trajectory.forces_shape", "forces must match sample count", "samples")
        if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt > 0):
            raise ValidationError("trajectory.dt", "dt must be a positive number", "dt")
        if not np.all(np.isfinite(positions)):
            raise ValidationError("trajectory.positions_finite", "positions must be finite", "samples")
        if not np.all(np.isfinite(forces)) or np.any(forces < 0):
            raise ValidationError("trajectory.force_negative", "forces must be finite and >= 0", "samples")
        skills = tuple(str(s) for s in skills)
        if len(skills) != n:
            raise ValidationError(
                "trajectory.skills_length", "skill annotations must match sample count", "skills"
            )
        if timestamp.tzinfo is None:
            raise ValidationError("trajectory.timestamp_naive", "timestamp must be timezone-aware", "ts")
        positions.setflags(write=False)
        forces.setflags(write=False)
        object.__setattr__(self, "dt", float(dt))
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "forces", forces)
        object.__setattr__(self, "success", bool(success))
        object.__setattr__(self, "skills", skills)
        object.__setattr__(self, "tags", dict(tags or {}))
        object.__setattr__(self, "timestamp", timestamp.astimezone(timezone.utc))

    def __setattr__(self, *args):
        raise AttributeError("Trajectory is immutable")

    def __len__(self):
        return self.positions.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, Trajectory)
            and self.dt == other.dt
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.forces, other.forces)
            and self.success == other.success
            and self.skills == other.skills
            and self.tags == other.tags
            and self.timestamp == other.timestamp
        )

    def __repr__(self):
        return f"Trajectory(n={len(self)}, dt={self.dt}, success={self.success})"

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "samples": [
                {"p": [float(p[0]), float(p[1]), float(p[2])], "f": float(f)}
                for p, f in zip(self.positions, self.forces)
            ],
            "success": self.success,
            "skills": list(self.skills),
            "tags": dict(self.tags),
            "ts": format_rfc3339(self.timestamp),
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "trajectory") -> "Trajectory":
        samples = _as_list(_require(doc, "samples", path), f"{path}.samples")
        positions = np.empty((len(samples), 3), dtype=float)
        forces = np.empty(len(samples), dtype=float)
        for i, s in enumerate(samples):
            spath = f"{path}.samples[{i}]"
            p = _as_list(_require(s, "p", spath), f"{spath}.p")
            if len(p) != 3:
                raise ParseError("parse.position_shape", f"expected 3 coordinates at {spath}.p", f"{spath}.p")
            positions[i] = [_as_float(c, f"{spath}.p[{j}]") for j, c in enumerate(p)]
            forces[i] = _as_float(_require(s, "f", spath), f"{spath}.f")
        return cls(
            dt=_as_float(_require(doc, "dt", path), f"{path}.dt"),
            positions=positions,
            forces=forces,
            success=_as_bool(_require(doc, "success", path), f"{path}.success"),
            skills=[
                _as_str(s, f"{path}.skills[{i}]")
                for i, s in enumerate(_as_list(_require(doc, "skills", path), f"{path}.skills"))
            ],
            tags=_as_str_map(doc.get("tags", {}), f"{path}.tags"),
            timestamp=parse_rfc3339(_require(doc, "ts", path), f"{path}.ts"),
        )


def pad_trajectory(traj: Trajectory, target_len: int) -> Trajectory:
    """Pad or truncate to exactly ``target_len`` samples.

    Shorter trajectories repeat the last position with zero force (so padding
    never changes the path length); longer ones keep the first ``target_len``
    samples. The success flag, tags and timestamp are preserved.
    """
    if target_len < 1:
        raise ValidationError("pad.target_length", "pad length must be >= 1", "pad_length")
    n = len(traj)
    if n == target_len:
        return traj
    if n > target_len:
        positions = traj.positions[:target_len]
        forces = traj.forces[:target_len]
        skills = traj.skills[:target_len]
    else:
        extra = target_len - n
        positions = np.vstack([traj.positions, np.repeat(traj.positions[-1:], extra, axis=0)])
        forces = np.concatenate([traj.forces, np.zeros(extra)])
        skills = traj.skills + (traj.skills[-1],) * extra
    return Trajectory(traj.dt, positions, forces, traj.success, skills, traj.tags, traj.timestamp)


def path_length(traj: Trajectory) -> float:
    """Sum of Euclidean norms of consecutive position differences, in mm."""
    if len(traj) < 2:
        return 0.0
    deltas = np.diff(traj.positions, axis=0)
    return float(np.sum(np.linalg.norm(deltas, axis=1)))


def cycle_time(traj: Trajectory) -> float:
    """Duration covered by the samples: (n - 1) * dt, in seconds."""
    return (len(traj) - 1) * traj.dt


def peak_force(traj: Trajectory) -> float:
    return float(np.max(traj.forces))


# ---------------------------------------------------------------------------
# execution records


@dataclass(frozen=True)
class ExecutionRecord:
    """One (parameters, trajectory) pair from an execution of a program."""

    program_id: str
    parameters: ParameterVector
    trajectory: Trajectory

    def to_dict(self) -> dict:
        return {
            "program_id": self.program_id,
            "parameters": self.parameters.to_dict(),
            "trajectory": self.trajectory.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "record") -> "ExecutionRecord":
        return cls(
            program_id=_as_str(_require(doc, "program_id", path), f"{path}.program_id"),
            parameters=ParameterVector.from_dict(_require(doc, "parameters", path), f"{path}.parameters"),
            trajectory=Trajectory.from_dict(_require(doc, "trajectory", path), f"{path}.trajectory"),
        )

    def to_json_line(self) -> str:
        return dump_json(self.to_dict())


def read_jsonl_records(text: str, path: str = "records") -> list[ExecutionRecord]:
    """Parse newline-delimited ExecutionRecord documents (blank lines skipped)."""
    records = []
    for i, line in enumerate(text.splitlines()):
        if line.strip():
            records.append(ExecutionRecord.from_dict(load_json(line, f"{path}[{i}]"), f"{path}[{i}]"))
    return records


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class DatasetFilter:
    """Record selection by time window and exact tag matches."""

    time_from: datetime | None = None
    time_to: datetime | None = None
    tag_equals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.time_from is not None and self.time_to is not None and self.time_from > self.time_to:
            raise ValidationError("filter.time_order", "time_from must be <= time_to", "time_from")

    def matches(self, record: ExecutionRecord) -> bool:
        ts = record.trajectory.timestamp
        if self.time_from is not None and ts < self.time_from:
            return False
        if self.time_to is not None and ts > self.time_to:
            return False
        return all(record.trajectory.tags.get(k) == v for k, v in self.tag_equals.items())

    def to_dict(self) -> dict:
        return {
            "time_from": format_rfc3339(self.time_from) if self.time_from else None,
            "time_to": format_rfc3339(self.time_to) if self.time_to else None,
            "tag_equals": dict(self.tag_equals),
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "filter") -> "DatasetFilter":
        tf = doc.get("time_from")
        tt = doc.get("time_to")
        return cls(
            time_from=parse_rfc3339(tf, f"{path}.time_from") if tf is not None else None,
            time_to=parse_rfc3339(tt, f"{path}.time_to") if tt is not None else None,
            tag_equals=_as_str_map(doc.get("tag_equals", {}), f"{path}.tag_equals"),
        )


@dataclass(frozen=True)
class Moment:
    """Mean / standard deviation pair; a zero stddev is flagged, never divided by."""

    mean: float
    stddev: float

    def __post_init__(self):
        if self.stddev < 0:
            raise ValidationError("norm_stats.negative_stddev", "stddev must be >= 0", "stddev")

    @property
    def degenerate(self) -> bool:
        return self.stddev == 0.0

    @property
    def safe_std(self) -> float:
        return self.stddev if self.stddev > 0 else 1.0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stddev": self.stddev}

    @classmethod
    def from_dict(cls, doc: dict, path: str = "moment") -> "Moment":
        return cls(
            mean=_as_float(_require(doc, "mean", path), f"{path}.mean"),
            stddev=_as_float(_require(doc, "stddev", path), f"{path}.stddev"),
        )

    @classmethod
    def of(cls, values: np.ndarray) -> "Moment":
        return cls(mean=float(np.mean(values)), stddev=float(np.std(values)))


@dataclass(frozen=True)
class NormStats:
    """Z-score statistics: per parameter, per trajectory channel, and for cycle time.

    Channel statistics are computed over padded trajectories because those are
    the arrays the surrogate trains on; cycle time statistics come from the
    raw (unpadded) durations.
    """

    params: dict
    channels: dict
    cycle_time: Moment

    def __post_init__(self):
        missing = [c for c in CHANNELS if c not in self.channels]
        if missing:
            raise ValidationError("norm_stats.channels", f"missing channel stats: {missing}", "channels")

    def param_arrays(self, names) -> tuple[np.ndarray, np.ndarray]:
        mu = np.array([self.params[n].mean for n in names])
        sd = np.array([self.params[n].safe_std for n in names])
        return mu, sd

    def channel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        mu = np.array([self.channels[c].mean for c in CHANNELS])
        sd = np.array([self.channels[c].safe_std for c in CHANNELS])
        return mu, sd

    def to_dict(self) -> dict:
        return {
            "params": {k: m.to_dict() for k, m in self.params.items()},
            "channels": {k: m.to_dict() for k, m in self.channels.items()},
            "cycle_time": self.cycle_time.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "norm_stats") -> "NormStats":
        params_doc = _require(doc, "params", path)
        channels_doc = _require(doc, "channels", path)
        return cls(
            params={k: Moment.from_dict(v, f"{path}.params.{k}") for k, v in params_doc.items()},
            channels={k: Moment.from_dict(v, f"{path}.channels.{k}") for k, v in channels_doc.items()},
            cycle_time=Moment.from_dict(_require(doc, "cycle_time", path), f"{path}.cycle_time"),
        )


@dataclass(frozen=True)
class Dataset:
    """A filtered, padded collection of execution records plus normalization stats."""

    id: str
    name: str
    program_id: str
    records: tuple[ExecutionRecord, ...]
    pad_length: int
    filter: DatasetFilter
    norm_stats: NormStats

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise ValidationError("dataset.empty", "dataset must contain at least one record", "records")
        if self.pad_length < 1:
            raise ValidationError("dataset.pad_length", "pad_length must be >= 1", "pad_length")
        for i, r in enumerate(self.records):
            if r.program_id != self.program_id:
                raise ValidationError(
                    "dataset.program_mismatch",
                    f"record {i} belongs to program {r.program_id!r}, dataset to {self.program_id!r}",
                    f"records[{i}].program_id",
                )
        dts = {r.trajectory.dt for r in self.records}
        if len(dts) > 1:
            raise DomainRuleError("dataset.mixed_dt", f"records have mixed sampling periods: {sorted(dts)}")

    def __len__(self):
        return len(self.records)

    @property
    def dt(self) -> float:
        return self.records[0].trajectory.dt

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(self.records[0].parameters.values.keys())

    def parameter_matrix(self) -> np.ndarray:
        return np.stack([r.parameters.to_array() for r in self.records])

    def padded_channels(self) -> np.ndarray:
        """(n_records, pad_length, 4) array of padded x, y, z, force channels."""
        out = np.empty((len(self.records), self.pad_length, 4))
        for i, r in enumerate(self.records):
            padded = pad_trajectory(r.trajectory, self.pad_length)
            out[i, :, :3] = padded.positions
            out[i, :, 3] = padded.forces
        return out

    def cycle_times(self) -> np.ndarray:
        return np.array([cycle_time(r.trajectory) for r in self.records])

    def success_flags(self) -> np.ndarray:
        return np.array([r.trajectory.success for r in self.records], dtype=float)

    def mean_parameters(self) -> ParameterVector:
        return ParameterVector.from_array(self.parameter_names, self.parameter_matrix().mean(axis=0))

    def to_dict(self, include_records: bool = True) -> dict:
        doc = {
            "id": self.id,
            "name": self.name,
            "program_id": self.program_id,
            "record_count": len(self.records),
            "pad_length": self.pad_length,
            "filter": self.filter.to_dict(),
            "norm_stats": self.norm_stats.to_dict(),
        }
        if include_records:
            doc["records"] = [r.to_dict() for r in self.records]
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path: str = "dataset") -> "Dataset":
        return cls(
            id=_as_str(_require(doc, "id", path), f"{path}.id"),
            name=_as_str(_require(doc, "name", path), f"{path}.name"),
            program_id=_as_str(_require(doc, "program_id", path), f"{path}.program_id"),
            records=tuple(
                ExecutionRecord.from_dict(r, f"{path}.records[{i}]")
                for i, r in enumerate(_as_list(_require(doc, "records", path), f"{path}.records"))
            ),
            pad_length=_as_int(_require(doc, "pad_length", path), f"{path}.pad_length"),
            filter=DatasetFilter.from_dict(_require(doc, "filter", path), f"{path}.filter"),
            norm_stats=NormStats.from_dict(_require(doc, "norm_stats", path), f"{path}.norm_stats"),
        )


def default_pad_length(lengths) -> int:
    """Default padding: the 95th percentile of observed sample counts.

    Keeps the label arrays compact when a few executions ran much longer than
    the rest; experts can override per dataset.
    """
    return max(1, int(math.ceil(float(np.quantile(np.asarray(lengths, dtype=float), 0.95)))))


def build_dataset(
    dataset_id: str,
    name: str,
    template: ProgramTemplate,
    records,
    dataset_filter: DatasetFilter | None = None,
    pad_length: int | None = None,
) -> Dataset:
    """Filter, validate and assemble records into a Dataset with norm stats.

    Records with a dt differing from the first selected record are rejected
    (mixed sampling rates are not supported).
    """
    dataset_filter = dataset_filter or DatasetFilter()
    selected = [r for r in records if r.program_id == template.id and dataset_filter.matches(r)]
    if not selected:
        raise DomainRuleError("dataset.empty", "filter selected no executions")
    for i, r in enumerate(selected):
        template.validate_vector(r.parameters)
    if pad_length is None:
        pad_length = default_pad_length([len(r.trajectory) for r in selected])
    elif pad_length < 1:
        raise ValidationError("dataset.pad_length", "pad_length must be >= 1", "pad_length")

    x = np.stack([r.parameters.to_array() for r in selected])
    params = {n: Moment.of(x[:, i]) for i, n in enumerate(template.parameter_names)}

    stacked = np.empty((len(selected), pad_length, 4))
    for i, r in enumerate(selected):
        padded = pad_trajectory(r.trajectory, pad_length)
        stacked[i, :, :3] = padded.positions
        stacked[i, :, 3] = padded.forces
    channels = {c: Moment.of(stacked[:, :, k].ravel()) for k, c in enumerate(CHANNELS)}
    times = np.array([cycle_time(r.trajectory) for r in selected])

    return Dataset(
        id=dataset_id,
        name=name,
        program_id=template.id,
        records=tuple(selected),
        pad_length=pad_length,
        filter=dataset_filter,
        norm_stats=NormStats(params=params, channels=channels, cycle_time=Moment.of(times)),
    )
