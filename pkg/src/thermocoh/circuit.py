"""From circuit elements to qubit-oscillator coupling constants.

A charge qubit is biased through a pair of mechanically modulated plate
capacitors ``C_m^{+-}(x) = C_m0 / (1 +- x/x_0)`` in a bridge with two fixed
capacitors ``C_0``. Displacement ``x`` changes the gate voltage and hence the
offset charge, which couples the plate motion to the qubit.

All inputs are SI (joule, farad, metre, volt). Couplings and the qubit
frequency are returned as angular frequencies (rad/s), i.e. energies divided
by ``hbar``; :meth:`DerivedCouplings.to_system_params` rescales them by the
mechanical frequency.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import asdict, dataclass

from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import hbar as HBAR

from .errors import DomainError, ValidationError
from .model import SystemParams

#: ``|n_g - 1/2|`` below which the bias is flagged as near degeneracy.
DEGENERACY_WINDOW = 0.05


@dataclass(frozen=True)
class CircuitParams:
    E_c: float
    E_J: float
    C_0: float
    C_m0: float
    x_0: float
    x_zpf: float
    V_dc: float
    n_g: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("E_J", "C_0", "C_m0", "x_0", "x_zpf"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.E_c < 0:
            raise ValidationError(f"E_c must be >= 0, got {self.E_c}")

    @property
    def near_degenerate(self) -> bool:
        return abs(self.n_g - 0.5) < DEGENERACY_WINDOW

    @property
    def series_capacitance(self) -> float:
        """``C_m0 C_0 / (C_0 + C_m0)``."""
        return self.C_m0 * self.C_0 / (self.C_0 + self.C_m0)


def _check_x(x: float, c: CircuitParams) -> float:
    if not abs(x) < c.x_0:
        raise DomainError(f"|x| = {abs(x):.3e} m reaches the plate separation x_0 = {c.x_0:.3e} m")
    return float(x)


def plate_capacitances(x: float, c: CircuitParams) -> tuple[float, float]:
    """``(C_m^+(x), C_m^-(x))``."""
    x = _check_x(x, c)
    u = x / c.x_0
    return c.C_m0 / (1.0 + u), c.C_m0 / (1.0 - u)


def gate_voltage(x: float, c: CircuitParams, mode: str = "exact") -> float:
    """Bridge voltage across the junction for displacement ``x`` (volt)."""
    x = _check_x(x, c)
    if mode == "exact":
        cp, cm = plate_capacitances(x, c)
        return c.V_dc * (cm / (cm + c.C_0) - cp / (cp + c.C_0))
    if mode == "linear":
        return 2.0 * c.V_dc * c.C_m0 * c.C_0 / (c.C_m0 + c.C_0) ** 2 * (x / c.x_0)
    raise ValidationError(f"mode must be 'exact' or 'linear', got {mode!r}")


def gate_capacitance(x: float, c: CircuitParams, mode: str = "exact") -> float:
    """Equivalent gate capacitance with the DC source shorted (farad)."""
    x = _check_x(x, c)
    if mode == "exact":
        cp, cm = plate_capacitances(x, c)
        return 1.0 / (1.0 / (c.C_0 + cm) + 1.0 / (c.C_0 + cp))
    if mode == "constant":
        return 0.5 * (c.C_0 + c.C_m0)
    raise ValidationError(f"mode must be 'exact' or 'constant', got {mode!r}")


def offset_charge_slope(c: CircuitParams) -> float:
    """``d n_g / d x = V_dc C_m0 C_0 / (2 e x_0 (C_0 + C_m0))`` (1/m)."""
    return c.V_dc * c.series_capacitance / (2.0 * ELEMENTARY_CHARGE * c.x_0)


def offset_charge(x: float, c: CircuitParams, mode: str = "linear") -> float:
    """Motion-induced offset charge, linearized or as ``C_g V_g / 2e``."""
    x = _check_x(x, c)
    if mode == "linear":
        return offset_charge_slope(c) * x
    if mode == "exact":
        return gate_capacitance(x, c) * gate_voltage(x, c) / (2.0 * ELEMENTARY_CHARGE)
    raise ValidationError(f"mode must be 'linear' or 'exact', got {mode!r}")


def qubit_spectrum(n_g: float, E_c: float, E_J: float) -> tuple[float, float, float]:
    """``(omega_q, lambda_+, lambda_-)`` of the lowest charge doublet, in energy units.

    ``lambda_+ - lambda_- = omega_q`` for every ``n_g``.
    """
    if not E_J > 0:
        raise ValidationError(f"E_J must be positive, got {E_J!r}")
    gap = math.hypot(E_J, 4.0 * E_c * (1.0 - 2.0 * n_g))
    base = 4.0 * E_c * n_g * n_g - 4.0 * E_c * n_g + 2.0 * E_c
    return gap, base + 0.5 * gap, base - 0.5 * gap


@dataclass(frozen=True)
class DerivedCouplings:
    """Coupling constants in rad/s and mixing angles in rad."""

    g0: float
    theta0: float
    theta: float
    g_x: float
    g_z: float
    g_m: float
    omega_q: float

    def to_system_params(self, omega_m: float, **kw) -> SystemParams:
        """Model parameters in units of the mechanical angular frequency ``omega_m`` (rad/s)."""
        if not omega_m > 0:
            raise ValidationError(f"omega_m must be positive, got {omega_m!r}")
        return SystemParams(
            omega_m=1.0,
            omega_q=self.omega_q / omega_m,
            g0=self.g0 / omega_m,
            theta=self.theta,
            phi=0.0,
            g_m=self.g_m / omega_m,
            **kw,
        )


def derive_couplings(c: CircuitParams) -> DerivedCouplings:
    """Coupling magnitude, mixing angle and components for a circuit."""
    g0_energy = (4.0 * c.E_c / (2.0 * ELEMENTARY_CHARGE)) * c.series_capacitance * (c.x_zpf / c.x_0) * c.V_dc
    g0 = g0_energy / HBAR
    theta0 = math.atan(4.0 * c.E_c * (1.0 - 2.0 * c.n_g) / c.E_J)
    omega_q, _, _ = qubit_spectrum(c.n_g, c.E_c, c.E_J)
    return DerivedCouplings(
        g0=g0,
        theta0=theta0,
        theta=theta0 + math.pi / 2.0,
        g_x=g0 * math.cos(theta0),
        g_z=-g0 * math.sin(theta0) + 0.0,  # avoid -0.0 at degeneracy
        g_m=g0 * (1.0 - 2.0 * c.n_g),
        omega_q=omega_q / HBAR,
    )
