"""Operators and thermal states on the qubit ⊗ truncated-oscillator space.

Basis conventions
-----------------
* Qubit: index 0 is the excited state ``|e>``, index 1 the ground state
  ``|g>``, so ``sigma_z = diag(+1, -1)`` and ``(omega_q / 2) sigma_z`` puts
  ``|e>`` above ``|g>``.
* Oscillator: Fock states ``|0> .. |n_max>``.
* Joint space: ``kron(qubit, oscillator)``; the joint index of ``|q, k>`` is
  ``q * (n_max + 1) + k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import constants

from .errors import NumericError, TruncationError, ValidationError
from .linalg import hermiticity_residual, kron

#: Thermal weight that the automatic cutoff may leave above ``n_max``.
CUTOFF_TAIL = 1e-8
#: Extra Fock levels kept above the thermal cutoff for interaction-driven spreading.
CUTOFF_HEADROOM = 10
#: Largest discarded thermal weight tolerated before raising.
TAIL_TOL = 1e-6

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli(axis: str) -> np.ndarray:
    """Pauli matrix for ``axis`` in {"x", "y", "z"}."""
    try:
        return _PAULI[axis.lower()].copy()
    except (KeyError, AttributeError):
        raise ValidationError(f"unknown Pauli axis {axis!r}") from None


def sigma_plus() -> np.ndarray:
    """Raising operator ``|e><g|``."""
    return np.array([[0, 1], [0, 0]], dtype=np.complex128)


def sigma_minus() -> np.ndarray:
    """Lowering operator ``|g><e|``."""
    return np.array([[0, 0], [1, 0]], dtype=np.complex128)


def _check_nmax(n_max: int, minimum: int = 1) -> int:
    if int(n_max) != n_max or n_max < minimum:
        raise ValidationError(f"Fock cutoff must be an integer >= {minimum}, got {n_max!r}")
    return int(n_max)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated ladder operator with ``a|k> = sqrt(k)|k-1>``."""
    n_max = _check_nmax(n_max)
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(np.complex128)


def number(n_max: int) -> np.ndarray:
    return np.diag(np.arange(_check_nmax(n_max) + 1, dtype=float)).astype(np.complex128)


def quadratures(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Dimensionless ``X = (a + a†)/√2`` and ``P = (a - a†)/(i√2)``."""
    a = annihilation(n_max)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2.0)
    # -1j * z is exact in floating point, unlike division by 1j
    p = -1j * (a - ad) / math.sqrt(2.0)
    return x, p


@dataclass(frozen=True)
class ThermalSpec:
    """Bath occupations of the oscillator (``n_m``) and the qubit (``n_q``)."""

    n_m: float
    n_q: float = 0.0

    def __post_init__(self):
        for name in ("n_m", "n_q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def p_ee(self) -> float:
        """Excited-state population ``n_q / (2 n_q + 1)``."""
        return self.n_q / (2.0 * self.n_q + 1.0)

    @property
    def inversion(self) -> float:
        """``2 P_ee - 1``, identically ``-1 / (2 n_q + 1)``."""
        return -1.0 / (2.0 * self.n_q + 1.0)


def n_q_from_p_ee(p_ee: float) -> float:
    """Invert ``P_ee = n_q / (2 n_q + 1)`` for ``0 <= P_ee < 1/2``."""
    if not 0.0 <= p_ee < 0.5:
        raise ValidationError(f"P_ee must lie in [0, 1/2), got {p_ee!r}")
    return p_ee / (1.0 - 2.0 * p_ee)


def bose_einstein(omega: float, temperature: float) -> float:
    """Mean occupation ``1 / (exp(ħω / k_B T) - 1)``.

    ``omega`` is an angular frequency in rad/s and ``temperature`` is in
    kelvin. ``T = 0`` returns exactly 0.
    """
    if not omega > 0:
        raise ValidationError(f"omega must be positive, got {omega!r}")
    if not temperature >= 0:
        raise ValidationError(f"temperature must be >= 0, got {temperature!r}")
    if temperature == 0:
        return 0.0
    x = constants.hbar * omega / (constants.k * temperature)
    return 1.0 / math.expm1(x)


def thermal_tail(n_m: float, n_max: int) -> float:
    """Thermal weight above ``n_max``: ``(n_m / (1 + n_m)) ** (n_max + 1)``."""
    if n_m == 0:
        return 0.0
    return math.exp((n_max + 1) * math.log(n_m / (1.0 + n_m)))


def thermal_weights(n_m: float, n_max: int) -> np.ndarray:
    """Unnormalized Fock weights ``n_m^k / (1 + n_m)^(k+1)`` for ``k <= n_max``."""
    k = np.arange(n_max + 1, dtype=float)
    if n_m == 0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(n_m / (1.0 + n_m)) - math.log1p(n_m))


def default_cutoff(n_m: float) -> int:
    """Smallest ``N`` with thermal tail below :data:`CUTOFF_TAIL`, plus headroom."""
    if n_m < 0:
        raise ValidationError(f"n_m must be >= 0, got {n_m!r}")
    n = 0
    if n_m > 0:
        ratio = math.log(n_m / (1.0 + n_m))
        n = max(0, math.ceil(math.log(CUTOFF_TAIL) / ratio) - 1)
        while thermal_tail(n_m, n) >= CUTOFF_TAIL:
            n += 1
    return max(1, n + CUTOFF_HEADROOM)


def thermal_oscillator(spec: ThermalSpec, n_max: int, tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Truncated thermal state of the oscillator, renormalized to unit trace.

    Raises :class:`TruncationError` when the discarded weight exceeds ``tail_tol``.
    """
    n_max = _check_nmax(n_max)
    tail = thermal_tail(spec.n_m, n_max)
    if tail > tail_tol:
        raise TruncationError(
            f"cutoff n_max={n_max} discards thermal weight {tail:.3e} > {tail_tol:.1e} "
            f"for n_m={spec.n_m}"
        )
    w = thermal_weights(spec.n_m, n_max)
    return np.diag(w / w.sum()).astype(np.complex128)


def thermal_qubit(spec: ThermalSpec) -> np.ndarray:
    p = spec.p_ee
    return np.diag([p, 1.0 - p]).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Joint state on ``C^2 ⊗ C^(n_max+1)``."""

    matrix: np.ndarray
    dims: tuple[int, int]

    HERMITIAN_TOL = 1e-9
    TRACE_TOL = 1e-9
    EIGEN_FLOOR = -1e-8

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = self.dims[0] * self.dims[1]
        if m.shape != (d, d):
            raise ValidationError(f"matrix shape {m.shape} does not match dims {self.dims}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @property
    def n_max(self) -> int:
        return self.dims[1] - 1

    @property
    def trace_error(self) -> float:
        return abs(complex(np.trace(self.matrix)) - 1.0)

    @property
    def hermiticity(self) -> float:
        return hermiticity_residual(self.matrix)

    @cached_property
    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(self.matrix * self.matrix.T)))

    def validate(self) -> "DensityMatrix":
        """Raise :class:`NumericError` if any state invariant is violated."""
        diag = {
            "trace_error": self.trace_error,
            "hermiticity": self.hermiticity,
            "min_eigenvalue": self.min_eigenvalue,
        }
        if (
            diag["trace_error"] > self.TRACE_TOL
            or diag["hermiticity"] > self.HERMITIAN_TOL
            or diag["min_eigenvalue"] < self.EIGEN_FLOOR
        ):
            raise NumericError("density matrix invariants violated", diag)
        return self


def initial_state(spec: ThermalSpec, n_max: int) -> DensityMatrix:
    """Product of the thermal qubit and the thermal oscillator."""
    rho = kron(thermal_qubit(spec), thermal_oscillator(spec, n_max))
    return DensityMatrix(rho, (2, n_max + 1))
