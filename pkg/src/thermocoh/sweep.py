"""Parameter sweeps, figure presets and result serialization.

A :class:`ScenarioConfig` names one swept parameter (the *axis*), the values
it takes, and optionally several *variants* (parameter overrides applied to
every point, e.g. with and without the QID term). Each (variant, value) pair
is an independent evolution; :func:`run_scenario` evaluates them in a
process pool and restores the input order, so results do not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy import constants

from . import __version__, dynamics, kernels
from .config import Located, load, parse_axis_values, parse_frequency_hz, parse_params
from .errors import ConfigError, ThermocohError, UsageError, ValidationError
from .hilbert import bose_einstein, initial_state, n_q_from_p_ee
from .model import SystemParams, hamiltonian

AXES = ("n_m", "n_q", "T_equal", "theta", "g0", "delta", "gamma_m", "gamma_q1", "g_m")
BACKENDS = ("unitary", "lindblad")
OUTPUTS = ("peaks", "trajectory", "both")

#: Reference angular frequency for ``T_equal`` when none is configured:
#: ``k_B / hbar`` makes the axis value the reduced temperature ``k_B T / (hbar omega_m)``.
REDUCED_TEMPERATURE_REF = constants.k / constants.hbar

CSV_COLUMNS = ("t", "sx", "sy", "xm", "pm", "cq", "cm", "trace_err", "tail_mass")
PEAK_COLUMNS = ("variant", "axis_value", "cq_max", "cq_time", "cm_max", "cm_time", "status", "error")


@dataclass(frozen=True)
class Variant:
    name: str = ""
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))


@dataclass(frozen=True)
class ScenarioConfig:
    """A sweep over one parameter axis.

    ``omega_m_si`` is the mechanical angular frequency in rad/s used only to
    convert ``T_equal`` temperatures (kelvin) into occupations; the default
    makes the axis a reduced temperature ``k_B T / (hbar omega_m)``.
    """

    base: SystemParams
    axis: str
    values: tuple[float, ...]
    horizon: float = dynamics.DEFAULT_HORIZON
    samples: int = dynamics.DEFAULT_SAMPLES
    backend: str = "unitary"
    outputs: str = "peaks"
    variants: tuple[Variant, ...] = (Variant(),)
    omega_m_si: float = REDUCED_TEMPERATURE_REF
    name: str = "custom"
    refine: bool = True
    check_states: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "variants", tuple(self.variants) or (Variant(),))
        if self.axis not in AXES:
            raise ConfigError(f"unknown axis {self.axis!r} (expected one of {', '.join(AXES)})")
        if not self.values:
            raise ConfigError("axis values must not be empty")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.outputs not in OUTPUTS:
            raise ConfigError(f"outputs must be one of {OUTPUTS}, got {self.outputs!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ConfigError(f"samples must be an integer >= 2, got {self.samples!r}")
        object.__setattr__(self, "samples", int(self.samples))
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ConfigError(f"variant names must be unique, got {names}")
        # every point must map to valid parameters before anything runs
        for variant in self.variants:
            for value in self.values:
                try:
                    point_params(self, variant, value)
                except ThermocohError as exc:
                    raise ConfigError(
                        f"axis {self.axis}={value!r} (variant {variant.name!r}): {exc}"
                    ) from exc

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def echo(self) -> dict:
        """Plain-data description of the configuration."""
        return {
            "name": self.name,
            "base": dataclasses.asdict(self.base),
            "axis": self.axis,
            "values": list(self.values),
            "horizon": self.horizon,
            "samples": self.samples,
            "backend": self.backend,
            "outputs": self.outputs,
            "variants": [{"name": v.name, "overrides": dict(v.overrides)} for v in self.variants],
            "omega_m_si": self.omega_m_si,
            "refine": self.refine,
        }


def point_params(cfg: ScenarioConfig, variant: Variant, value: float) -> SystemParams:
    """Parameters of one sweep point: base, then variant overrides, then the axis value."""
    p = cfg.base.replace(**_resolve(cfg.base, variant.overrides))
    if cfg.axis == "delta":
        if value < -p.omega_m:
            raise ValidationError(f"detuning {value} is below -omega_m")
        return p.replace(omega_q=p.omega_m + value)
    if cfg.axis == "T_equal":
        if value < 0:
            raise ValidationError(f"temperature must be >= 0, got {value}")
        n_m = bose_einstein(cfg.omega_m_si * p.omega_m, value)
        n_q = bose_einstein(cfg.omega_m_si * p.omega_q, value) if p.omega_q > 0 else 0.0
        return p.replace(n_m=n_m, n_q=n_q)
    return p.replace(**{cfg.axis: value})


def _resolve(base: SystemParams, overrides: Mapping[str, float]) -> dict:
    """Map convenience keys (``delta``, ``p_ee``) onto model fields."""
    out = dict(overrides)
    if "delta" in out:
        if "omega_q" in out:
            raise ValidationError("give either delta or omega_q, not both")
        out["omega_q"] = out.get("omega_m", base.omega_m) + out.pop("delta")
    if "p_ee" in out:
        if "n_q" in out:
            raise ValidationError("give either p_ee or n_q, not both")
        out["n_q"] = n_q_from_p_ee(out.pop("p_ee"))
    return out


@dataclass(frozen=True)
class PeakRow:
    variant: str
    index: int
    axis_value: float
    cq_max: float | None
    cq_time: float | None
    cm_max: float | None
    cm_time: float | None
    status: str
    error: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "axis_value": self.axis_value,
            "cq_max": self.cq_max,
            "cq_time": self.cq_time,
            "cm_max": self.cm_max,
            "cm_time": self.cm_time,
            "status": self.status,
            "error": self.error,
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: ScenarioConfig
    rows: tuple[PeakRow, ...]
    trajectories: Mapping[tuple[str, int], dynamics.Trajectory]
    provenance: dict

    @property
    def complete(self) -> bool:
        return all(r.ok for r in self.rows)

    def peaks(self, variant: str = "") -> list[PeakRow]:
        return [r for r in self.rows if r.variant == variant]

    def data(self) -> dict:
        """Deterministic data section (no timestamps)."""
        return {
            "scenario": self.config.name,
            "axis": self.config.axis,
            "results": [r.as_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        doc = self.data()
        doc["provenance"] = self.provenance
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"

    def peaks_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PEAK_COLUMNS)
        for r in self.rows:
            d = r.as_dict()
            w.writerow([
                d["variant"], _fmt(d["axis_value"]), _fmt(d["cq_max"]), _fmt(d["cq_time"]),
                _fmt(d["cm_max"]), _fmt(d["cm_time"]), d["status"],
                "" if d["error"] is None else json.dumps(d["error"], sort_keys=True),
            ])
        return buf.getvalue()

    def write(self, out_dir: str | Path, fmt: str = "json") -> list[Path]:
        """Write the peak table (``fmt``) and any trajectories (CSV) into ``out_dir``."""
        if fmt not in ("json", "csv"):
            raise UsageError(f"format must be 'json' or 'csv', got {fmt!r}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        stem = self.config.name
        if self.config.outputs in ("peaks", "both"):
            path = out / f"{stem}_peaks.{fmt}"
            text = self.to_json() if fmt == "json" else self.peaks_csv()
            path.write_text(text, encoding="utf-8", newline="\n")
            written.append(path)
            if fmt == "csv":
                prov = out / f"{stem}_provenance.json"
                prov.write_text(json.dumps(self.provenance, indent=2) + "\n", encoding="utf-8", newline="\n")
                written.append(prov)
        for (variant, index), traj in sorted(self.trajectories.items()):
            tag = f"_{variant}" if variant else ""
            path = out / f"{stem}{tag}_{self.config.axis}_{index:03d}.csv"
            path.write_text(trajectory_csv(traj), encoding="utf-8", newline="\n")
            written.append(path)
        return written


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def trajectory_csv(traj: dynamics.Trajectory) -> str:
    """Trajectory as CSV with 17 significant digits and LF line endings."""
    cols = [traj.times, traj.sx, traj.sy, traj.xm, traj.pm, traj.cq, traj.cm, traj.trace_err, traj.tail_mass]
    lines = [",".join(CSV_COLUMNS)]
    for row in zip(*cols):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def _evolve(p: SystemParams, cfg: ScenarioConfig) -> dynamics.Trajectory:
    times = dynamics.default_times(cfg.horizon, cfg.samples)
    rho0 = initial_state(p.thermal, p.n_max)
    if cfg.backend == "unitary":
        return dynamics.evolve_unitary(hamiltonian(p), rho0, times, check_states=cfg.check_states)
    return dynamics.evolve_lindblad(p, rho0, times)


def _run_point(task) -> tuple[PeakRow, dynamics.Trajectory | None]:
    cfg, variant, index, value = task
    try:
        p = point_params(cfg, variant, value)
        traj = _evolve(p, cfg)
        cq = dynamics.find_peak(traj, "cq", refine=cfg.refine)
        cm = dynamics.find_peak(traj, "cm", refine=cfg.refine)
        row = PeakRow(variant.name, index, value, cq.value, cq.time, cm.value, cm.time, traj.status)
        keep = traj.without_refiner() if cfg.outputs in ("trajectory", "both") else None
        return row, keep
    except ThermocohError as exc:
        payload = {"type": type(exc).__name__, "message": str(exc)}
        diag = getattr(exc, "diagnostics", None)
        if diag:
            payload["diagnostics"] = {k: (float(v) if isinstance(v, (int, float, np.floating)) else str(v))
                                      for k, v in diag.items()}
        return PeakRow(variant.name, index, value, None, None, None, None, "error", payload), None


def default_workers() -> int:
    env = os.environ.get("THERMOCOH_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"THERMOCOH_WORKERS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"THERMOCOH_WORKERS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def run_scenario(cfg: ScenarioConfig, workers: int | None = None) -> SweepResult:
    """Evaluate every (variant, value) point; per-point failures become error rows."""
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise UsageError(f"workers must be >= 1, got {workers}")
    tasks = [(cfg, v, i, x) for v in cfg.variants for i, x in enumerate(cfg.values)]
    started = time.time()
    if workers == 1 or len(tasks) == 1:
        results = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_run_point, tasks, chunksize=1))
    rows = tuple(r for r, _ in results)
    trajs = {(r.variant, r.index): t for r, t in results if t is not None}
    provenance = {
        "config": cfg.echo(),
        "code_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "integrator": {
            "unitary": "spectral decomposition of H",
            "lindblad": "classical RK4",
            "steps_per_period": dynamics.STEPS_PER_PERIOD,
            "convergence_tol": dynamics.CONVERGENCE_TOL,
            "max_halvings": dynamics.MAX_HALVINGS,
            "peak_refinement": "10x local grid + golden section" if cfg.refine else "none",
        },
        "python": platform.python_version(),
        "numpy": np.__version__,
        "workers": workers,
        "started_unix": started,
        "elapsed_s": time.time() - started,
    }
    return SweepResult(cfg, rows, trajs, provenance)


# Presets ---------------------------------------------------------------------

_BASE = SystemParams(omega_m=1.0, omega_q=1.0, g0=0.1, theta=math.pi / 4, n_m=0.5, n_q=0.0)
_DISPERSIVE = _BASE.replace(omega_q=11.0)
_P_EE = (0.0, 0.1, 0.25, 0.4)
_N_M = (0.0, 0.5, 1.0, 2.0, 5.0)
_THETA = tuple(k * math.pi / 16 for k in range(17))
_G0 = (0.01, 0.025, 0.05, 0.075, 0.1, 0.15, 0.2)
_DELTA = (-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0)
_T_REDUCED = (0.25, 0.5, 1.0, 2.0, 4.0)


def _presets() -> dict[str, ScenarioConfig]:
    nq = tuple(n_q_from_p_ee(x) for x in _P_EE)
    return {
        "fig2a": ScenarioConfig(_BASE.replace(n_q=0.0), "n_m", _N_M, name="fig2a"),
        "fig2b": ScenarioConfig(_BASE, "n_q", nq, name="fig2b"),
        "fig2c": ScenarioConfig(_BASE, "T_equal", _T_REDUCED, name="fig2c"),
        "fig2d": ScenarioConfig(_DISPERSIVE.replace(n_q=0.0), "n_m", _N_M, name="fig2d"),
        "fig2e": ScenarioConfig(_DISPERSIVE, "n_q", nq, name="fig2e"),
        "fig2f": ScenarioConfig(_DISPERSIVE, "T_equal", _T_REDUCED, name="fig2f"),
        "fig3ab": ScenarioConfig(_BASE, "theta", _THETA, outputs="both", name="fig3ab"),
        "fig3de": ScenarioConfig(_DISPERSIVE, "theta", _THETA, outputs="both", name="fig3de"),
        "fig3cf": ScenarioConfig(
            _BASE, "g0", _G0, name="fig3cf",
            variants=(Variant("resonant", {"delta": 0.0}), Variant("dispersive", {"delta": 10.0})),
        ),
        "fig4a": ScenarioConfig(_BASE, "delta", _DELTA, name="fig4a"),
        "fig4bc": ScenarioConfig(_BASE, "delta", (-0.5, 0.0, 0.5, 10.0), outputs="both", name="fig4bc"),
        "fig5a": ScenarioConfig(
            _BASE.replace(gamma_q1=0.0), "gamma_m", (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2),
            backend="lindblad", outputs="both", name="fig5a",
        ),
        "fig5b": ScenarioConfig(
            _BASE.replace(gamma_m=1e-6), "gamma_q1", (0.0, 1e-4, 1e-3, 1e-2),
            backend="lindblad", outputs="both", name="fig5b",
        ),
        "figA2": ScenarioConfig(
            _BASE, "n_m", (0.0, 0.5, 1.0, 2.0, 5.0), name="figA2",
            variants=(Variant("no_qid", {"g_m": 0.0}), Variant("qid", {"g_m": 0.01})),
        ),
    }


PRESET_NAMES = ("fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f", "fig3ab", "fig3cf",
                "fig3de", "fig4a", "fig4bc", "fig5a", "fig5b", "figA2")


def preset(name: str) -> ScenarioConfig:
    """Scenario reproducing one figure panel group."""
    table = _presets()
    if name not in table:
        raise UsageError(f"unknown preset {name!r} (known: {', '.join(PRESET_NAMES)})")
    return table[name]


# Config files ----------------------------------------------------------------

_SCENARIO_KEYS = ("preset", "name", "axis", "values", "horizon", "samples", "backend", "outputs",
                  "mechanical_frequency", "refine")


def scenario_from_config(path: str | Path, preset_name: str | None = None) -> ScenarioConfig:
    """Read a scenario file; a preset (from the file or ``preset_name``) supplies defaults."""
    data, loc = load(path)
    return scenario_from_data(data, loc, preset_name)


def scenario_from_data(data: dict, loc: Located, preset_name: str | None = None) -> ScenarioConfig:
    unknown = set(data) - {"scenario", "params", "variants"}
    if unknown:
        raise loc.error(f"unknown top-level table(s): {', '.join(sorted(unknown))}")
    sc = data.get("scenario", {})
    if not isinstance(sc, dict):
        raise loc.error("[scenario] must be a table")
    for key in sc:
        if key not in _SCENARIO_KEYS:
            raise loc.error(f"unknown key (expected one of {', '.join(_SCENARIO_KEYS)})", key, "scenario")
    name = preset_name or sc.get("preset")
    try:
        cfg = preset(name) if name else None
    except UsageError as exc:
        raise loc.error(str(exc), "preset", "scenario") from exc

    params = parse_params(data.get("params", {}), loc)
    base = cfg.base if cfg else SystemParams()
    try:
        base = base.replace(**_resolve(base, params))
    except (ThermocohError, TypeError) as exc:
        raise loc.error(f"invalid parameters: {exc}") from exc

    axis = sc.get("axis", cfg.axis if cfg else None)
    if axis is None:
        raise loc.error("missing 'axis' (or a preset)", None)
    if axis not in AXES:
        raise loc.error(f"unknown axis {axis!r} (expected one of {', '.join(AXES)})", "axis", "scenario")
    if "values" in sc:
        values = parse_axis_values(axis, sc["values"], loc)
    elif cfg is not None and axis == cfg.axis:
        values = cfg.values
    else:
        raise loc.error("missing 'values'", "axis", "scenario")

    variants = cfg.variants if cfg else (Variant(),)
    if "variants" in data:
        raw = data["variants"]
        if not isinstance(raw, list):
            raise loc.error("variants must be an array of tables ([[variants]])")
        variants = []
        for i, item in enumerate(raw):
            item = dict(item)
            vname = str(item.pop("name", f"v{i}"))
            variants.append(Variant(vname, parse_params(item, loc, "variants")))
        variants = tuple(variants)

    kw: dict[str, Any] = {
        "base": base, "axis": axis, "values": values, "variants": variants,
        "name": str(sc.get("name", cfg.name if cfg else "custom")),
    }
    for key in ("horizon", "samples", "backend", "outputs", "refine"):
        if key in sc:
            kw[key] = sc[key]
        elif cfg is not None:
            kw[key] = getattr(cfg, key)
    for key in ("horizon", "samples"):
        if key in kw and (isinstance(kw[key], bool) or not isinstance(kw[key], (int, float))):
            raise loc.error("must be a number", key, "scenario")
    if "mechanical_frequency" in sc:
        kw["omega_m_si"] = 2 * math.pi * parse_frequency_hz(sc["mechanical_frequency"], loc,
                                                             "mechanical_frequency", "scenario")
    try:
        return ScenarioConfig(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{loc.source}: {exc}") from exc
