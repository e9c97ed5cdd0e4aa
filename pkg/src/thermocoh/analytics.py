"""Short-time closed forms used as independent checks on the evolution."""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np

from .dynamics import Trajectory
from .errors import UsageError
from .hilbert import DensityMatrix
from .linalg import as_matrix, commutator
from .model import SystemParams

#: ``t * ||h||_2`` above which the second-order expansion is flagged.
SECOND_ORDER_LIMIT = 0.2
DEFAULT_FIT_WINDOW = (0.005, 0.05)
MIN_FIT_SAMPLES = 20


class ShortTimeMeans(NamedTuple):
    xm: float
    pm: float
    sx: float
    sy: float


class FitCoefficient(NamedTuple):
    """Coefficient ``c`` of the model ``C_q(t) = c t^2``."""

    value: float
    samples: int
    rms_residual: float


def second_order_state(h, rho0: DensityMatrix, t: float) -> np.ndarray:
    """``rho0 - i t [h, rho0] + t^2 h rho0 h``.

    This truncation omits the ``-(t^2/2){h^2, rho0}`` term of the full
    second-order expansion, so it is not trace preserving at ``O(t^2)``.
    It is kept in this literal form to cross-check the closed forms below.
    """
    h = as_matrix(h)
    r = rho0.matrix
    norm = float(np.linalg.norm(h, 2))
    if abs(t) * norm >= SECOND_ORDER_LIMIT:
        warnings.warn(
            f"t * ||h|| = {abs(t) * norm:.3g} is not small; the expansion is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return r - 1j * t * commutator(h, r) + (t * t) * (h @ r @ h)


def short_time_means(p: SystemParams, t: float) -> ShortTimeMeans:
    """Leading-order ``<X_m>, <P_m>, <sigma_x>, <sigma_y>`` at small ``t``.

    Evaluates the reference closed forms, including the ``g_m`` terms; at
    ``g_m = 0`` they reduce to the QID-free expressions.
    """
    gx, gz, gm = p.g_x, p.g_z, p.g_m
    nm = p.n_m
    inv = p.thermal.inversion  # 2 P_ee - 1
    wm, wq = p.omega_m, p.omega_q
    s2 = math.sqrt(2.0)
    t2 = t * t
    xm = s2 * t2 * (
        gz * (wm * inv * nm * (4 * nm + 3) + wq * (nm + 0.5))
        + gm * (wm * nm * (4 * nm + 3) + wq * inv * (nm + 0.5))
    )
    pm = -s2 * gz * t * inv
    sx = 2.0 * gx * t2 * (2 * nm + 1) * (gz * inv + gm)
    return ShortTimeMeans(xm=xm, pm=pm, sx=sx, sy=0.0)


def quadratic_coefficient(p: SystemParams) -> float:
    """``|2 g_x (2 n_m + 1)(g_z (2 P_ee - 1) + g_m)|``."""
    return abs(2.0 * p.g_x * (2 * p.n_m + 1) * (p.g_z * p.thermal.inversion + p.g_m))


def fit_quadratic(traj: Trajectory, window: tuple[float, float] = DEFAULT_FIT_WINDOW) -> FitCoefficient:
    """Least-squares ``c`` in ``C_q(t) ~ c t^2`` over ``window``.

    Needs at least 20 samples inside the window.
    """
    lo, hi = window
    if not 0 <= lo < hi:
        raise UsageError(f"invalid fit window {window!r}")
    mask = (traj.times >= lo) & (traj.times <= hi)
    k = int(np.count_nonzero(mask))
    if k < MIN_FIT_SAMPLES:
        raise UsageError(f"fit window {window} holds {k} samples, need >= {MIN_FIT_SAMPLES}")
    t2 = traj.times[mask] ** 2
    y = traj.cq[mask]
    c = float(np.dot(y, t2) / np.dot(t2, t2))
    resid = float(np.sqrt(np.mean((y - c * t2) ** 2)))
    return FitCoefficient(value=c, samples=k, rms_residual=resid)
