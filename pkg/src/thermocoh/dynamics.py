"""Time evolution, observables and coherence peaks.

Two propagators are provided:

* :func:`evolve_unitary` diagonalizes the Hamiltonian once and evaluates
  observables directly in the eigenbasis, so the cost per output time is
  ``O(d^2)`` per observable and the result is exact up to round-off.
* :func:`evolve_lindblad` integrates the master equation with classical RK4
  on the density matrix. The step is halved until two successive step sizes
  agree on every observable.

Both return a :class:`Trajectory` that carries state-health diagnostics and
a refiner used by :func:`find_peak` to re-evaluate the dynamics near a peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigvalsh

from . import kernels
from .errors import NumericError, ValidationError
from .hilbert import DensityMatrix, initial_state, pauli, quadratures
from .linalg import as_matrix, hermitian_eigen, hermiticity_residual, kron
from .model import SystemParams, collapse_channels, hamiltonian

__all__ = [
    "DensityMatrix",
    "Trajectory",
    "CoherencePeak",
    "SpectralPropagator",
    "evolve_unitary",
    "evolve_master",
    "evolve_lindblad",
    "observables",
    "coherence",
    "displacement",
    "find_peak",
    "default_times",
    "default_dt",
]

#: Default horizon in units of ``1 / omega_m`` and number of output samples.
DEFAULT_HORIZON = 30.0
DEFAULT_SAMPLES = 3000
#: Steps per period of the fastest frequency in the default RK4 step.
STEPS_PER_PERIOD = 400
#: Max-abs observable change accepted between successive step halvings.
CONVERGENCE_TOL = 1e-8
MAX_HALVINGS = 3
#: Health thresholds.
TRACE_DRIFT_TOL = 1e-6
TAIL_MASS_TOL = 1e-4
MIN_DT = 1e-12
IMAG_ERROR = 1e-6
#: Number of top Fock levels whose population is reported as ``tail_mass``.
TAIL_LEVELS = 3

_SERIES = ("sx", "sy", "xm", "pm")


def default_times(horizon: float = DEFAULT_HORIZON, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """``samples`` equally spaced times on ``[0, horizon]``."""
    if not horizon > 0 or int(samples) < 2:
        raise ValidationError("horizon must be positive and samples >= 2")
    return np.linspace(0.0, float(horizon), int(samples))


def default_dt(p: SystemParams) -> float:
    """``(2 pi / omega_fast) / 400`` with ``omega_fast = max(w_q, w_m, w_q + w_m)``."""
    fast = max(p.omega_q, p.omega_m, p.omega_q + p.omega_m)
    return 2.0 * math.pi / fast / STEPS_PER_PERIOD


def coherence(sx, sy):
    """Qubit coherence ``sqrt(sx^2 + sy^2)``."""
    return np.hypot(sx, sy)


def displacement(xm, pm):
    """Oscillator coherent displacement ``sqrt(xm^2 + pm^2)``."""
    return np.hypot(xm, pm)


def _real(value: complex, name: str) -> float:
    if abs(value.imag) > IMAG_ERROR:
        raise NumericError(f"<{name}> has imaginary part {value.imag:.3e}", {"observable": name})
    return float(value.real)


def _reduced(rho: np.ndarray, n: int):
    r4 = rho.reshape(2, n, 2, n)
    return np.einsum("ikjk->ij", r4), np.einsum("kikj->ij", r4)


def _observables_raw(rho: np.ndarray, n: int, x: np.ndarray, p: np.ndarray) -> tuple[complex, ...]:
    rq, rm = _reduced(rho, n)
    sx = rq[0, 1] + rq[1, 0]
    sy = 1j * (rq[0, 1] - rq[1, 0])
    xm = np.sum(rm * x.T)
    pm = np.sum(rm * p.T)
    return sx, sy, xm, pm


def observables(rho) -> tuple[float, float, float, float]:
    """``(<sigma_x>, <sigma_y>, <X_m>, <P_m>)`` of a joint state.

    Imaginary parts up to 1e-9 are discarded; larger than 1e-6 raises
    :class:`NumericError`.
    """
    if not isinstance(rho, DensityMatrix):
        raise ValidationError("observables expects a DensityMatrix")
    n = rho.dims[1]
    x, p = quadratures(n - 1)
    vals = _observables_raw(rho.matrix, n, x, p)
    return tuple(_real(complex(v), name) for v, name in zip(vals, _SERIES))


@dataclass(frozen=True)
class CoherencePeak:
    """Maximum of ``C_q`` or ``C_m``.

    ``value``/``time`` include the local refinement when one was possible;
    ``grid_value``/``grid_time`` are the raw maximum over the output grid
    (earliest sample on ties).
    """

    value: float
    time: float
    grid_value: float
    grid_time: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Observable time series plus per-sample health diagnostics."""

    times: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    xm: np.ndarray
    pm: np.ndarray
    trace_err: np.ndarray
    tail_mass: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    method: str
    dt: float | None = None
    halvings: int = 0
    converged: bool = True
    convergence_error: float = 0.0
    flags: tuple[str, ...] = ()
    refiner: object | None = field(default=None, repr=False)
    cq: np.ndarray = field(init=False)
    cm: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("times", "sx", "sy", "xm", "pm", "trace_err", "tail_mass", "herm_err", "min_eig"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        cq = coherence(self.sx, self.sy)
        cm = displacement(self.xm, self.pm)
        cq.setflags(write=False)
        cm.setflags(write=False)
        object.__setattr__(self, "cq", cq)
        object.__setattr__(self, "cm", cm)
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def valid(self) -> bool:
        return not self.flags

    @property
    def status(self) -> str:
        return "ok" if self.valid else "invalid: " + ", ".join(self.flags)

    def series(self, name: str) -> np.ndarray:
        if name not in ("sx", "sy", "xm", "pm", "cq", "cm", "trace_err", "tail_mass"):
            raise ValidationError(f"unknown series {name!r}")
        return getattr(self, name)

    def without_refiner(self) -> "Trajectory":
        """Copy without the refiner, e.g. before sending across processes."""
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__ if f not in ("cq", "cm")}
        kw["refiner"] = None
        return Trajectory(**kw)


def _tail_projector(n: int) -> np.ndarray:
    w = np.zeros(n)
    w[max(0, n - TAIL_LEVELS):] = 1.0
    return w


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValidationError("times must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(t)) or t[0] < 0 or np.any(np.diff(t) < 0):
        raise ValidationError("times must be finite, non-negative and sorted")
    return t


def _flags(trace_err, tail_mass, min_eig) -> list[str]:
    flags = []
    if np.max(trace_err) > TRACE_DRIFT_TOL:
        flags.append("trace_drift")
    if np.max(tail_mass) >= TAIL_MASS_TOL:
        flags.append("tail_mass")
    worst = float(np.min(min_eig))
    if worst < DensityMatrix.EIGEN_FLOOR:
        raise NumericError(
            f"density matrix lost positivity (min eigenvalue {worst:.3e})",
            {"min_eigenvalue": worst, "index": int(np.argmin(min_eig))},
        )
    return flags


class SpectralPropagator:
    """Exact closed-system evolution ``rho(t) = e^{-iHt} rho0 e^{iHt}``.

    With ``H = V diag(E) V^dagger`` and ``u(t) = exp(-iEt)``, any expectation
    is ``u^T M conj(u)`` with ``M = rho~ * O~^T`` in the eigenbasis, which
    avoids forming ``rho(t)``.
    """

    def __init__(self, h, rho0: DensityMatrix):
        h = as_matrix(h)
        if h.shape != rho0.matrix.shape:
            raise ValidationError(f"Hamiltonian shape {h.shape} does not match state {rho0.matrix.shape}")
        try:
            eig = hermitian_eigen(h)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise NumericError(f"eigendecomposition failed: {exc}") from exc
        self.energies = eig.eigenvalues
        self.vectors = eig.eigenvectors
        self.rho0 = rho0
        self.dims = rho0.dims
        v = self.vectors
        self._rho_e = v.conj().T @ rho0.matrix @ v
        self.unitarity_defect = float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0]))))
        n = self.dims[1]
        x, p = quadratures(n - 1)
        eye2 = np.eye(2, dtype=np.complex128)
        eyen = np.eye(n, dtype=np.complex128)
        self._ops = {
            "sx": kron(pauli("x"), eyen),
            "sy": kron(pauli("y"), eyen),
            "xm": kron(eye2, x),
            "pm": kron(eye2, p),
            "tail": kron(eye2, np.diag(_tail_projector(n)).astype(np.complex128)),
        }
        self._weights = {k: self._weight(op) for k, op in self._ops.items()}
        self._rho0_min_eig = rho0.min_eigenvalue

    def _weight(self, op: np.ndarray) -> np.ndarray:
        v = self.vectors
        return self._rho_e * (v.conj().T @ op @ v).T

    def _phases(self, times: np.ndarray) -> np.ndarray:
        return np.exp(-1j * np.outer(times, self.energies))

    def expect(self, op, times) -> np.ndarray:
        """Complex ``Tr(rho(t) op)`` for each time."""
        t = _check_times(times)
        u = self._phases(t)
        return np.sum((u @ self._weight(as_matrix(op))) * u.conj(), axis=1)

    def state(self, t: float) -> np.ndarray:
        u = np.exp(-1j * self.energies * float(t))
        v = self.vectors
        return (v * u) @ self._rho_e @ (v * u).conj().T

    def _series(self, t: np.ndarray) -> dict[str, np.ndarray]:
        u = self._phases(t)
        uc = u.conj()
        out = {}
        for name, w in self._weights.items():
            vals = np.sum((u @ w) * uc, axis=1)
            imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
            if imag > IMAG_ERROR:
                raise NumericError(f"<{name}> has imaginary part {imag:.3e}", {"observable": name})
            out[name] = vals.real.copy()
        return out

    def evaluate(self, times) -> tuple[np.ndarray, np.ndarray]:
        """``(C_q, C_m)`` at arbitrary times, used for peak refinement."""
        s = self._series(_check_times(times))
        return coherence(s["sx"], s["sy"]), displacement(s["xm"], s["pm"])

    def trajectory(self, times, check_states: bool = False) -> Trajectory:
        t = _check_times(times)
        s = self._series(t)
        k = t.size
        if check_states:
            trace_err = np.empty(k)
            herm = np.empty(k)
            mins = np.empty(k)
            for i, ti in enumerate(t):
                r = self.state(ti)
                trace_err[i] = abs(complex(np.trace(r)) - 1.0)
                herm[i] = hermiticity_residual(r)
                mins[i] = _min_eig(r)
        else:
            # rho(t) is a unitary similarity of rho0 up to the defect of V
            bound = 4.0 * self.unitarity_defect + 1e-15
            trace_err = np.full(k, self.rho0.trace_error + bound)
            herm = np.full(k, self.rho0.hermiticity + bound)
            mins = np.full(k, self._rho0_min_eig - bound)
        flags = _flags(trace_err, s["tail"], mins)
        return Trajectory(
            times=t, sx=s["sx"], sy=s["sy"], xm=s["xm"], pm=s["pm"],
            trace_err=trace_err, tail_mass=s["tail"], herm_err=herm, min_eig=mins,
            method="unitary", flags=flags, refiner=self,
        )


def _min_eig(r: np.ndarray) -> float:
    h = 0.5 * (r + r.conj().T)
    return float(eigvalsh(h, subset_by_index=[0, 0], check_finite=False)[0])


def evolve_unitary(h, rho0: DensityMatrix, times, check_states: bool = False) -> Trajectory:
    """Closed-system evolution sampled at ``times``.

    With ``check_states`` every sampled ``rho(t)`` is rebuilt to measure trace,
    Hermiticity and minimum eigenvalue; otherwise these are bounded from the
    initial state and the unitarity defect of the eigenvector matrix.
    """
    return SpectralPropagator(h, rho0).trajectory(times, check_states=check_states)


class _MasterRun:
    """One fixed-step RK4 integration over the output grid."""

    def __init__(self, gen, n, dt, backend):
        self.gen = gen
        self.n = n
        self.dt = dt
        self.backend = backend
        self.x, self.p = quadratures(n - 1)
        self.tail_w = _tail_projector(n)

    def advance(self, rho: np.ndarray, span: float) -> None:
        if span <= 0:
            return
        steps = max(1, math.ceil(span / self.dt - 1e-9))
        kernels.rk4_inplace(self.gen, rho, span / steps, steps, self.backend)

    def measure(self, rho: np.ndarray) -> tuple:
        vals = [_real(complex(v), name) for v, name in zip(_observables_raw(rho, self.n, self.x, self.p), _SERIES)]
        diag = np.real(np.diagonal(rho)).reshape(2, self.n).sum(axis=0)
        tail = float(diag @ self.tail_w)
        return vals, tail

    def run(self, rho0: np.ndarray, times: np.ndarray, health: bool):
        k = times.size
        data = {name: np.empty(k) for name in _SERIES}
        tail = np.empty(k)
        trace_err = np.empty(k)
        herm = np.full(k, np.nan)
        mins = np.full(k, np.nan)
        # checkpoints: state at the sample preceding each new running maximum
        best = {"cq": -1.0, "cm": -1.0}
        checkpoints = {"cq": (times[0], rho0.copy()), "cm": (times[0], rho0.copy())}
        rho = np.ascontiguousarray(rho0.copy())
        self.advance(rho, times[0])
        prev_t, prev = times[0], rho.copy()
        for i in range(k):
            if i:
                prev_t, prev = times[i - 1], rho.copy()
                self.advance(rho, times[i] - times[i - 1])
            if not np.all(np.isfinite(rho)):
                raise NumericError("non-finite entries in the density matrix", {"time": float(times[i])})
            (sx, sy, xm, pm), tail[i] = self.measure(rho)
            data["sx"][i], data["sy"][i], data["xm"][i], data["pm"][i] = sx, sy, xm, pm
            trace_err[i] = abs(complex(np.trace(rho)) - 1.0)
            if health:
                herm[i] = hermiticity_residual(rho)
                mins[i] = _min_eig(rho)
            for key, val in (("cq", math.hypot(sx, sy)), ("cm", math.hypot(xm, pm))):
                if val > best[key]:
                    best[key] = val
                    checkpoints[key] = (prev_t, prev) if i else (times[0], rho.copy())
        return data, tail, trace_err, herm, mins, checkpoints


class _MasterRefiner:
    """Re-integrates from a stored checkpoint to evaluate ``C_q``/``C_m`` near a peak."""

    def __init__(self, run: _MasterRun, checkpoints):
        self.run = run
        self.checkpoints = checkpoints

    def evaluate(self, times, which: str = "cq") -> tuple[np.ndarray, np.ndarray]:
        t = _check_times(times)
        t0, r0 = self.checkpoints[which]
        if t[0] < t0 - 1e-12:
            raise ValidationError(f"refinement time {t[0]} precedes checkpoint {t0}")
        rho = np.ascontiguousarray(r0.copy())
        cq = np.empty(t.size)
        cm = np.empty(t.size)
        last = t0
        for i, ti in enumerate(t):
            self.run.advance(rho, ti - last)
            last = ti
            (sx, sy, xm, pm), _ = self.run.measure(rho)
            cq[i] = math.hypot(sx, sy)
            cm[i] = math.hypot(xm, pm)
        return cq, cm


def evolve_master(
    h,
    jumps: Sequence[np.ndarray],
    rho0: DensityMatrix,
    times,
    dt: float,
    max_halvings: int = MAX_HALVINGS,
    tol: float = CONVERGENCE_TOL,
    check_convergence: bool = True,
    backend: str | None = None,
    health: bool = True,
) -> Trajectory:
    """RK4 integration of ``drho/dt = -i[H, rho] + sum D[A] rho``.

    ``jumps`` are collapse operators with the rate folded in (``sqrt(rate) O``).
    Operators must have the qubit ⊗ oscillator band structure of the model
    (see :func:`thermocoh.kernels.banded_generator`).

    The integration is repeated with the step halved until successive runs
    agree within ``tol`` on every observable, at most ``max_halvings`` times;
    the finer run is returned. ``health`` controls the per-sample Hermiticity
    and minimum-eigenvalue checks.
    """
    t = _check_times(times)
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    n = rho0.dims[1]
    gen = kernels.banded_generator(as_matrix(h), [as_matrix(a) for a in jumps], n)
    rho_init = np.array(rho0.matrix, dtype=np.complex128)

    def attempt(step):
        if step < MIN_DT:
            raise NumericError(f"step-size underflow (dt = {step:.3e})", {"dt": step})
        run = _MasterRun(gen, n, step, backend)
        return run, run.run(rho_init, t, health)

    halvings = 0
    run, result = attempt(dt)
    err = 0.0
    converged = not check_convergence
    if check_convergence:
        while True:
            fine_run, fine = attempt(run.dt / 2.0)
            halvings += 1
            err = max(float(np.max(np.abs(result[0][s] - fine[0][s]))) for s in _SERIES)
            run, result = fine_run, fine
            if err < tol:
                converged = True
                break
            if halvings >= max_halvings:
                break

    data, tail, trace_err, herm, mins, checkpoints = result
    flags = [] if not health else _flags(trace_err, tail, mins)
    if not health:
        if np.max(trace_err) > TRACE_DRIFT_TOL:
            flags.append("trace_drift")
        if np.max(tail) >= TAIL_MASS_TOL:
            flags.append("tail_mass")
    if not converged:
        flags.append("not_converged")
    return Trajectory(
        times=t, sx=data["sx"], sy=data["sy"], xm=data["xm"], pm=data["pm"],
        trace_err=trace_err, tail_mass=tail, herm_err=herm, min_eig=mins,
        method="lindblad", dt=run.dt, halvings=halvings, converged=converged,
        convergence_error=err, flags=flags, refiner=_MasterRefiner(run, checkpoints),
    )


def evolve_lindblad(
    p: SystemParams,
    rho0: DensityMatrix | None = None,
    times=None,
    dt: float | None = None,
    **kw,
) -> Trajectory:
    """Master-equation evolution for the model defined by ``p``.

    Defaults: thermal initial state from ``p``, the standard output grid and
    :func:`default_dt`. Extra keywords go to :func:`evolve_master`.
    """
    if rho0 is None:
        rho0 = initial_state(p.thermal, p.n_max)
    if rho0.dims != p.dims:
        raise ValidationError(f"state dims {rho0.dims} do not match parameters {p.dims}")
    times = default_times() if times is None else times
    jumps = [c.jump for c in collapse_channels(p)]
    return evolve_master(hamiltonian(p), jumps, rho0, times, dt or default_dt(p), **kw)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _refine_eval(refiner, which: str, times: np.ndarray) -> np.ndarray:
    if isinstance(refiner, _MasterRefiner):
        cq, cm = refiner.evaluate(times, which)
    else:
        cq, cm = refiner.evaluate(times)
    return cq if which == "cq" else cm


def find_peak(traj: Trajectory, which: str = "cq", refine: bool = True,
              iterations: int = 40) -> CoherencePeak:
    """Maximum of ``traj.cq`` or ``traj.cm``.

    The grid maximum (earliest sample on ties) is refined by evaluating the
    evolution on a 10x finer grid over the two neighbouring intervals and
    then running golden-section search around the best fine point. The
    refined value replaces the grid value only if it is larger.
    """
    if which not in ("cq", "cm"):
        raise ValidationError(f"which must be 'cq' or 'cm', got {which!r}")
    if traj.times.size == 0:
        raise ValidationError("empty trajectory")
    values = traj.series(which)
    i = int(np.argmax(values))
    gv, gt = float(values[i]), float(traj.times[i])
    peak = CoherencePeak(gv, gt, gv, gt)
    if not refine or traj.refiner is None or traj.times.size < 2 or gv == 0.0:
        return peak
    lo = float(traj.times[max(i - 1, 0)])
    hi = float(traj.times[min(i + 1, traj.times.size - 1)])
    if hi <= lo:
        return peak
    fine_t = np.linspace(lo, hi, 21)
    fine_v = _refine_eval(traj.refiner, which, fine_t)
    j = int(np.argmax(fine_v))
    a = fine_t[max(j - 1, 0)]
    b = fine_t[min(j + 1, fine_t.size - 1)]
    best_t, best_v = float(fine_t[j]), float(fine_v[j])
    f = lambda s: float(_refine_eval(traj.refiner, which, np.array([s]))[0])  # noqa: E731
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if b - a <= 1e-9 * max(1.0, abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    for tv, vv in ((c, fc), (d, fd)):
        if vv > best_v:
            best_t, best_v = float(tv), vv
    if best_v > gv:
        return CoherencePeak(best_v, best_t, gv, gt)
    return peak
