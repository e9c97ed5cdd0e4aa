"""Hamiltonian and dissipation channels of the qubit-oscillator model.

All frequencies and rates are in units of the mechanical frequency, so
``omega_m`` is normally 1 and times are measured in ``1 / omega_m``.
"""

from __future__ import annotations

import dataclasses
import math
import numbers
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .hilbert import (
    ThermalSpec,
    annihilation,
    default_cutoff,
    pauli,
    quadratures,
    sigma_minus,
    sigma_plus,
)
from .linalg import kron


@dataclass(frozen=True)
class SystemParams:
    """Model constants.

    ``cutoff`` is the highest retained Fock level; ``None`` selects
    :func:`~thermocoh.hilbert.default_cutoff` for the current ``n_m``.
    """

    omega_m: float = 1.0
    omega_q: float = 1.0
    g0: float = 0.1
    theta: float = math.pi / 4
    phi: float = 0.0
    n_m: float = 0.5
    n_q: float = 0.0
    gamma_m: float = 0.0
    gamma_q1: float = 0.0
    g_m: float = 0.0
    cutoff: int | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "cutoff":
                continue
            if not isinstance(v, numbers.Real) or not math.isfinite(v):
                raise ValidationError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.omega_m <= 0:
            raise ValidationError(f"omega_m must be positive, got {self.omega_m}")
        if self.omega_q < 0:
            raise ValidationError(
                f"omega_q must be >= 0 (detuning >= -omega_m), got {self.omega_q}"
            )
        for name in ("g0", "n_m", "n_q", "gamma_m", "gamma_q1"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.cutoff is not None and (int(self.cutoff) != self.cutoff or self.cutoff < 1):
            raise ValidationError(f"cutoff must be an integer >= 1, got {self.cutoff!r}")
        if self.cutoff is not None:
            object.__setattr__(self, "cutoff", int(self.cutoff))

    @classmethod
    def from_detuning(cls, delta: float, omega_m: float = 1.0, **kw) -> "SystemParams":
        return cls(omega_m=omega_m, omega_q=omega_m + delta, **kw)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def delta(self) -> float:
        return self.omega_q - self.omega_m

    @property
    def g_x(self) -> float:
        return self.g0 * math.sin(self.theta) * math.cos(self.phi)

    @property
    def g_y(self) -> float:
        return self.g0 * math.sin(self.theta) * math.sin(self.phi)

    @property
    def g_z(self) -> float:
        return self.g0 * math.cos(self.theta)

    @property
    def thermal(self) -> ThermalSpec:
        return ThermalSpec(self.n_m, self.n_q)

    @property
    def p_ee(self) -> float:
        return self.thermal.p_ee

    @property
    def n_max(self) -> int:
        return int(self.cutoff) if self.cutoff is not None else default_cutoff(self.n_m)

    @property
    def dims(self) -> tuple[int, int]:
        return (2, self.n_max + 1)


class LindbladChannel(NamedTuple):
    """Dissipator ``(rate / 2) * (2 O rho O† - {O† O, rho})``."""

    operator: np.ndarray
    rate: float
    label: str = ""

    @property
    def jump(self) -> np.ndarray:
        """Collapse operator with the rate folded in, ``sqrt(rate) * O``."""
        return math.sqrt(self.rate) * self.operator


def _embed(p: SystemParams):
    n = p.n_max + 1
    return np.eye(2, dtype=np.complex128), np.eye(n, dtype=np.complex128)


def free_hamiltonian(p: SystemParams) -> np.ndarray:
    """``(omega_q/2) sigma_z + omega_m (a†a + 1/2)``.

    The oscillator term is the normal-ordered form of
    ``(omega_m/2)(X^2 + P^2)``. On the truncated space the literal quadrature
    product differs from it only in the top Fock level, where ``a a†`` is cut.
    """
    i2, im = _embed(p)
    levels = np.arange(p.n_max + 1, dtype=float) + 0.5
    h_m = p.omega_m * np.diag(levels).astype(np.complex128)
    return 0.5 * p.omega_q * kron(pauli("z"), im) + kron(i2, h_m)


def interaction_hamiltonian(p: SystemParams) -> np.ndarray:
    """``sqrt(2) X_m (g_x σx + g_y σy + g_z σz + g_m)``."""
    i2, _ = _embed(p)
    x, _ = quadratures(p.n_max)
    qubit_part = p.g_x * pauli("x") + p.g_y * pauli("y") + p.g_z * pauli("z") + p.g_m * i2
    return math.sqrt(2.0) * kron(qubit_part, x)


def hamiltonian(p: SystemParams) -> np.ndarray:
    """Full Hamiltonian, a Hermitian matrix of dimension ``2 (n_max + 1)``."""
    return free_hamiltonian(p) + interaction_hamiltonian(p)


def collapse_channels(p: SystemParams) -> list[LindbladChannel]:
    """Mechanical and qubit relaxation channels; zero-rate channels are dropped."""
    i2, im = _embed(p)
    a = annihilation(p.n_max)
    candidates = [
        (kron(i2, a), p.gamma_m * (p.n_m + 1.0), "a"),
        (kron(i2, a.conj().T), p.gamma_m * p.n_m, "a_dag"),
        (kron(sigma_minus(), im), p.gamma_q1 * (p.n_q + 1.0), "sigma_minus"),
        (kron(sigma_plus(), im), p.gamma_q1 * p.n_q, "sigma_plus"),
    ]
    return [LindbladChannel(op, rate, label) for op, rate, label in candidates if rate > 0]


def interaction_picture_hamiltonian(p: SystemParams, t: float) -> np.ndarray:
    """Interaction-picture coupling ``e^{iH0 t} (H - H0) e^{-iH0 t}``, written out.

    Rotating terms oscillate at the detuning, counter-rotating ones at
    ``omega_q + omega_m`` and the longitudinal (and QID) terms at ``omega_m``.
    Diagnostic only; the evolution routines work in the lab frame.
    """
    i2, _ = _embed(p)
    a = annihilation(p.n_max)
    ad = a.conj().T
    sp, sm, sz = sigma_plus(), sigma_minus(), pauli("z")
    delta = p.omega_q - p.omega_m
    sigma = p.omega_q + p.omega_m
    wm = p.omega_m
    # sigma_x-like coupling with complex amplitude g_x - i g_y on sigma_+ (phi != 0)
    gp = p.g_x - 1j * p.g_y
    gm_ = p.g_x + 1j * p.g_y
    rotating = gm_ * np.exp(-1j * delta * t) * kron(sm, ad) + gp * np.exp(1j * delta * t) * kron(sp, a)
    counter = gp * np.exp(1j * sigma * t) * kron(sp, ad) + gm_ * np.exp(-1j * sigma * t) * kron(sm, a)
    displacement = kron(p.g_z * sz + p.g_m * i2, ad * np.exp(1j * wm * t) + a * np.exp(-1j * wm * t))
    return rotating + counter + displacement
