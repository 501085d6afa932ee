"""Seeded synthetic executor of the gearbox-insertion program.

Stands in for the physical cell: generates training data and serves as the
ground-truth oracle in tests. Three phases, sampled on a fixed dt grid:

1. approach: straight line from (0, 0, D_a) down to the contact plane at
   v_a; zero force until contact, then a peak of k * v_a plus seeded noise
   decaying linearly to a 1 N hold over 5 samples,
2. spiral search: Archimedean spiral r(phi) = pitch * phi / 2pi traversed at
   v_s until the radius reaches the (seeded) hole offset, capped at
   max_spiral_radius,
3. insert: straight push to depth d at v_i under a constant 2 N sliding
   force.

The insert phase always runs; a failed search or an excessive contact force
only flips the success flag. All physics are simple closed forms on purpose.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from datetime import datetime, timedelta, timezone

import numpy as np

from .core import ExecutionRecord, ParameterSpec, ParameterVector, ProgramTemplate, Trajectory
from .errors import ValidationError

#: Timestamp of record 0 in any batch; record i is stamped BASE_TS + i seconds.
BASE_TS = datetime(2024, 1, 1, tzinfo=timezone.utc)

#: Quadrature step for the spiral arc length, radians.
ARC_STEP = 1e-3

SAMPLING_MODES = ("fixed", "uniform-random", "grid")

PROGRAM_ID = "gearbox-insert"


def gearbox_template() -> ProgramTemplate:
    """The insertion program this cell runs: skill sequence plus bounded parameters."""
    return ProgramTemplate(
        id=PROGRAM_ID,
        skill_sequence=("approach", "spiral_search", "insert"),
        parameter_specs=(
            ParameterSpec("approach_velocity", "mm/s", 5.0, 100.0, "approach"),
            ParameterSpec("search_velocity", "mm/s", 2.0, 50.0, "spiral_search"),
            ParameterSpec("max_spiral_radius", "mm", 0.5, 8.0, "spiral_search"),
            ParameterSpec("insert_velocity", "mm/s", 1.0, 30.0, "insert"),
        ),
    )


@dataclass(frozen=True)
class SimConfig:
    """Workcell constants. Defaults describe the reference cell."""

    approach_distance: float = 40.0  # mm
    insert_depth: float = 8.0  # mm
    stiffness: float = 0.5  # N per mm/s of approach velocity
    hole_offset_sigma: float = 1.5  # mm
    break_force: float = 25.0  # N
    spiral_pitch: float = 0.5  # mm per revolution
    noise_amp: float = 0.2  # N, uniform contact-force noise half-width
    dt: float = 0.01  # s
    rng_seed: int = 0

    def __post_init__(self):
        # noise scales may be zero (a noiseless cell is meaningful); the
        # geometric and dynamic constants must stay strictly positive.
        for f in fields(self):
            if f.name in ("rng_seed", "noise_amp", "hole_offset_sigma"):
                continue
            if getattr(self, f.name) <= 0:
                raise ValidationError("sim_config.positive", f"{f.name} must be > 0", f.name)
        if self.noise_amp < 0:
            raise ValidationError("sim_config.noise_amp", "noise_amp must be >= 0", "noise_amp")
        if self.hole_offset_sigma < 0:
            raise ValidationError("sim_config.sigma", "hole_offset_sigma must be >= 0", "hole_offset_sigma")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict, path: str = "config") -> "SimConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in doc.items():
            if key not in known:
                continue
            if key == "rng_seed":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValidationError("sim_config.seed", "rng_seed must be an integer", f"{path}.rng_seed")
                kwargs[key] = value
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValidationError("sim_config.number", f"{key} must be a number", f"{path}.{key}")
                kwargs[key] = float(value)
        return cls(**kwargs)


def spiral_arc_length(phi_end: float, pitch: float, step: float = ARC_STEP) -> float:
    """Arc length of r(phi) = a*phi from 0 to phi_end by trapezoid quadrature."""
    if phi_end <= 0:
        return 0.0
    a = pitch / (2 * math.pi)
    grid = np.linspace(0.0, phi_end, max(2, int(math.ceil(phi_end / step)) + 1))
    return float(np.trapezoid(a * np.sqrt(1.0 + grid * grid), grid))


def _spiral_tables(phi_end: float, pitch: float) -> tuple[np.ndarray, np.ndarray]:
    """(phi grid, cumulative arc length) tables for inverting s -> phi."""
    a = pitch / (2 * math.pi)
    grid = np.linspace(0.0, phi_end, max(2, int(math.ceil(phi_end / ARC_STEP)) + 1))
    integrand = a * np.sqrt(1.0 + grid * grid)
    segments = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(grid)
    arc = np.concatenate([[0.0], np.cumsum(segments)])
    return grid, arc


def record_seed(batch_seed: int, index: int) -> np.random.SeedSequence:
    """Per-record RNG stream; independent of batch size and execution order."""
    return np.random.SeedSequence((batch_seed, index, 0))


def _param_draw_seed(batch_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((batch_seed, index, 1))


def execute(
    params: ParameterVector,
    config: SimConfig = SimConfig(),
    seed=None,
    tags=None,
    timestamp: datetime = BASE_TS,
) -> ExecutionRecord:
    """Run the program once. Deterministic given (params, config, seed)."""
    template = gearbox_template()
    template.validate_vector(params)
    if seed is None:
        seed = config.rng_seed
    rng = np.random.default_rng(seed)

    v_a = params["approach_velocity"]
    v_s = params["search_velocity"]
    r_max = params["max_spiral_radius"]
    v_i = params["insert_velocity"]
    dt = config.dt

    # Draw order is part of the determinism contract: offset first, then noise.
    offset = rng.normal(0.0, config.hole_offset_sigma, size=2)
    noise = rng.uniform(-config.noise_amp, config.noise_amp)
    rho = float(np.hypot(offset[0], offset[1]))
    f_peak = max(0.0, config.stiffness * v_a + noise)

    t_contact = config.approach_distance / v_a
    k_contact = int(math.ceil(t_contact / dt - 1e-9))
    t_search0 = (k_contact + 5) * dt

    rho_eff = min(rho, r_max)
    a = config.spiral_pitch / (2 * math.pi)
    phi_end = rho_eff / a
    if phi_end > 0:
        phi_grid, arc_grid = _spiral_tables(phi_end, config.spiral_pitch)
        t_search = float(arc_grid[-1]) / v_s
    else:
        phi_grid, arc_grid = None, None
        t_search = 0.0
    t_insert0 = t_search0 + t_search
    t_end = t_insert0 + config.insert_depth / v_i

    n = int(math.ceil(t_end / dt - 1e-9)) + 1
    t = np.arange(n) * dt
    positions = np.zeros((n, 3))
    forces = np.zeros(n)
    skills = np.empty(n, dtype=object)

    approach = np.arange(n) < k_contact
    decay = (np.arange(n) >= k_contact) & (np.arange(n) <= k_contact + 5)
    search = (np.arange(n) > k_contact + 5) & (t < t_insert0 - 1e-12)
    insert = ~(approach | decay | search)

    positions[approach, 2] = np.maximum(0.0, config.approach_distance - v_a * t[approach])
    skills[approach] = "approach"

    decay_steps = np.arange(n)[decay] - k_contact
    forces[decay] = f_peak + (1.0 - f_peak) * decay_steps / 5.0
    skills[decay] = "approach"

    if np.any(search):
        s = v_s * (t[search] - t_search0)
        phi = np.interp(s, arc_grid, phi_grid)
        r = a * phi
        positions[search, 0] = r * np.cos(phi)
        positions[search, 1] = r * np.sin(phi)
        forces[search] = 1.0
    skills[search] = "spiral_search"

    end_x = rho_eff * math.cos(phi_end)
    end_y = rho_eff * math.sin(phi_end)
    depth = np.minimum(config.insert_depth, v_i * np.maximum(0.0, t[insert] - t_insert0))
    positions[insert, 0] = end_x
    positions[insert, 1] = end_y
    positions[insert, 2] = -depth
    forces[insert] = 2.0
    skills[insert] = "insert"

    success = (rho <= r_max) and (f_peak <= config.break_force)
    trajectory = Trajectory(
        dt=dt,
        positions=positions,
        forces=forces,
        success=success,
        skills=list(skills),
        tags=tags or {},
        timestamp=timestamp,
    )
    return ExecutionRecord(PROGRAM_ID, params, trajectory)


def _normalize_ranges(template: ProgramTemplate, params_range, mode: str) -> dict:
    params_range = dict(params_range or {})
    unknown = [n for n in params_range if n not in template.parameter_names]
    if unknown:
        raise ValidationError("batch.unknown_parameter", f"unknown parameters: {unknown}", "params_range")
    out = {}
    for spec in template.parameter_specs:
        value = params_range.get(spec.name)
        if mode == "fixed":
            if value is None:
                raise ValidationError("batch.missing_parameter", f"fixed sampling needs {spec.name!r}", "params_range")
            out[spec.name] = float(value)
        elif mode == "uniform-random":
            if value is None:
                lo, hi = spec.lower_bound, spec.upper_bound
            else:
                lo, hi = (float(value[0]), float(value[1])) if len(value) == 2 else (None, None)
                if lo is None:
                    raise ValidationError("batch.range_shape", f"{spec.name!r} range must be [lo, hi]", "params_range")
            if not lo < hi:
                raise ValidationError("batch.empty_range", f"empty range for {spec.name!r}", "params_range")
            out[spec.name] = (lo, hi)
        else:  # grid
            if value is None:
                raise ValidationError("batch.missing_parameter", f"grid sampling needs {spec.name!r}", "params_range")
            values = [float(v) for v in (value if isinstance(value, (list, tuple)) else [value])]
            if not values:
                raise ValidationError("batch.empty_range", f"empty value list for {spec.name!r}", "params_range")
            out[spec.name] = values
    return out


def batch_execute(
    n: int,
    sampling: str,
    params_range,
    config: SimConfig = SimConfig(),
    seed: int = 0,
    tags=None,
) -> list:
    """Run n seeded executions; per-record streams derive from (seed, index).

    fixed: every record uses the same ParameterVector (params_range is
    name -> value). uniform-random: each parameter drawn independently per
    record (name -> [lo, hi], omitted names cover full bounds). grid: cross
    product of per-name value lists in template order; n must equal its size.
    """
    if n < 1:
        raise ValidationError("batch.count", "n must be >= 1", "n")
    if sampling not in SAMPLING_MODES:
        raise ValidationError("batch.sampling", f"sampling must be one of {SAMPLING_MODES}", "sampling")
    template = gearbox_template()
    ranges = _normalize_ranges(template, params_range, sampling)
    names = template.parameter_names

    vectors: list[ParameterVector] = []
    if sampling == "fixed":
        vec = ParameterVector({n_: ranges[n_] for n_ in names})
        template.validate_vector(vec)
        vectors = [vec] * n
    elif sampling == "uniform-random":
        for i in range(n):
            rng = np.random.default_rng(_param_draw_seed(seed, i))
            vectors.append(
                ParameterVector({n_: rng.uniform(ranges[n_][0], ranges[n_][1]) for n_ in names})
            )
        for vec in vectors:
            template.validate_vector(vec)
    else:
        combos = list(itertools.product(*(ranges[n_] for n_ in names)))
        if len(combos) != n:
            raise ValidationError(
                "batch.grid_count", f"grid has {len(combos)} points but n={n}", "n"
            )
        vectors = [ParameterVector(dict(zip(names, combo))) for combo in combos]
        for vec in vectors:
            template.validate_vector(vec)

    records = []
    for i, vec in enumerate(vectors):
        records.append(
            execute(
                vec,
                config,
                seed=record_seed(seed, i),
                tags=tags,
                timestamp=BASE_TS + timedelta(seconds=i),
            )
        )
    return records
