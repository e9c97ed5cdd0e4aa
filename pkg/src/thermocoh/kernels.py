"""Backend selection for the Lindblad RK4 hot loop.

The compiled core (``_rk4core``) is used when it imports; otherwise the
pure numpy fallback (``_rk4py``) is used. Setting ``THERMOCOH_PURE_PYTHON``
to a non-empty value forces the fallback. Both are importable through
:func:`get_backend` for benchmarking and equivalence checks.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from types import ModuleType
from typing import Sequence

import numpy as np

from . import _rk4py
from .errors import ValidationError

try:
    from . import _rk4core as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None
BACKEND = "compiled" if COMPILED_AVAILABLE and not os.environ.get("THERMOCOH_PURE_PYTHON") else "python"

# Relative size of an entry outside the band that is still treated as zero.
_BAND_TOL = 1e-13


def get_backend(name: str | None = None) -> ModuleType:
    """Kernel module for ``name`` in {"compiled", "python", None (default)}."""
    name = BACKEND if name is None else name
    if name == "python":
        return _rk4py
    if name == "compiled":
        if _compiled is None:
            raise ValidationError("compiled kernel backend is not available in this build")
        return _compiled
    raise ValidationError(f"unknown kernel backend {name!r}")


@dataclass(frozen=True, eq=False)
class BandedGenerator:
    """Lindblad generator in the block-tridiagonal layout the kernels consume."""

    gd: np.ndarray
    gu: np.ndarray
    gl: np.ndarray
    qj: np.ndarray
    oc: np.ndarray
    osh: np.ndarray

    @property
    def levels(self) -> int:
        return self.gd.shape[0]

    @property
    def args(self) -> tuple:
        return (self.gd, self.gu, self.gl, self.qj, self.oc, self.osh)


def _split_jump(a: np.ndarray, n: int):
    """Classify a jump as ``S ⊗ I`` or ``I ⊗ B`` with ``B`` a single off-diagonal."""
    a4 = a.reshape(2, n, 2, n)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    # qubit-only: every oscillator block is proportional to the identity
    s = a4[:, 0, :, 0]
    if np.allclose(a, np.kron(s, np.eye(n)), rtol=0, atol=_BAND_TOL * scale):
        return "qubit", s.copy()
    b = a4[0, :, 0, :]
    if np.allclose(a, np.kron(np.eye(2), b), rtol=0, atol=_BAND_TOL * scale):
        for shift in (1, -1):
            coef = np.array(
                [b[k + shift, k] if 0 <= k + shift < n else 0.0 for k in range(n)],
                dtype=np.complex128,
            )
            if np.allclose(b, np.diag(np.diagonal(b, -shift), -shift), rtol=0, atol=_BAND_TOL * scale):
                return "osc", (coef, shift)
    raise ValidationError("jump operator is neither S ⊗ I nor a single-shift I ⊗ B")


def banded_generator(h: np.ndarray, jumps: Sequence[np.ndarray], n: int) -> BandedGenerator:
    """Build the generator for Hamiltonian ``h`` and collapse operators ``jumps``.

    ``jumps`` already carry ``sqrt(rate)``. ``n`` is the number of oscillator
    levels. Raises :class:`ValidationError` when ``h`` or the effective
    Hamiltonian couples Fock levels more than one apart.
    """
    d = 2 * n
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (d, d):
        raise ValidationError(f"Hamiltonian shape {h.shape} does not match 2 x {n} levels")
    heff = h.copy()
    for a in jumps:
        heff -= 0.5j * (a.conj().T @ a)
    g = -1j * heff
    g4 = g.reshape(2, n, 2, n)
    k = np.arange(n)
    gd = np.ascontiguousarray(g4[:, k, :, k])
    gu = np.ascontiguousarray(g4[:, k[:-1], :, k[1:]])
    gl = np.ascontiguousarray(g4[:, k[1:], :, k[:-1]])
    if n == 1:
        gu = np.zeros((0, 2, 2), dtype=np.complex128)
        gl = np.zeros((0, 2, 2), dtype=np.complex128)

    rebuilt = np.zeros_like(g4)
    rebuilt[:, k, :, k] = gd
    if n > 1:
        rebuilt[:, k[:-1], :, k[1:]] = gu
        rebuilt[:, k[1:], :, k[:-1]] = gl
    scale = max(float(np.max(np.abs(g))), 1e-300)
    resid = float(np.max(np.abs(rebuilt - g4)))
    if resid > _BAND_TOL * scale:
        raise ValidationError(f"generator is not block-tridiagonal (off-band residual {resid:.3e})")

    qj, oc, osh = [], [], []
    for a in jumps:
        kind, payload = _split_jump(np.asarray(a, dtype=np.complex128), n)
        if kind == "qubit":
            qj.append(payload)
        else:
            oc.append(payload[0])
            osh.append(payload[1])
    return BandedGenerator(
        gd=gd,
        gu=gu,
        gl=gl,
        qj=np.ascontiguousarray(np.array(qj, dtype=np.complex128).reshape(-1, 2, 2)),
        oc=np.ascontiguousarray(np.array(oc, dtype=np.complex128).reshape(-1, n)),
        osh=np.ascontiguousarray(np.array(osh, dtype=np.int_).reshape(-1)),
    )


def rhs(gen: BandedGenerator, rho: np.ndarray, backend: str | None = None) -> np.ndarray:
    """``drho/dt`` for the generator."""
    return get_backend(backend).rhs(*gen.args, np.ascontiguousarray(rho, dtype=np.complex128))


def rk4_inplace(gen: BandedGenerator, rho: np.ndarray, h: float, nsteps: int,
                backend: str | None = None) -> None:
    """Advance the C-contiguous complex128 array ``rho`` by ``nsteps`` RK4 steps."""
    if rho.dtype != np.complex128 or not rho.flags.c_contiguous or not rho.flags.writeable:
        raise ValidationError("rho must be a writeable C-contiguous complex128 array")
    get_backend(backend).rk4_inplace(*gen.args, rho, float(h), int(nsteps))
