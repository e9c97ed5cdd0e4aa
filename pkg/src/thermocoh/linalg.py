"""Dense complex linear-algebra helpers.

Operators and states are plain ``numpy.ndarray`` objects of dtype
``complex128``. The functions here add the shape checks and tolerances
the rest of the package relies on.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericError, SizingError, ValidationError

#: Maximum absolute off-symmetry residual accepted as "Hermitian".
HERMITIAN_TOL = 1e-10

# Refuse to allocate Kronecker products above this many entries (~4 GiB).
_MAX_ENTRIES = 2**28


class HermitianEigen(NamedTuple):
    """Spectral decomposition ``h = V diag(w) V^dagger``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex128 array, validating shape and finiteness."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise SizingError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix contains NaN or Inf entries")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > _MAX_ENTRIES:
        raise SizingError(f"Kronecker product of size {rows}x{cols} is too large")
    return np.kron(a, b)


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def hermiticity_residual(h) -> float:
    """Largest absolute entry of ``h - h^dagger``."""
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def hermitian_eigen(h) -> HermitianEigen:
    """Eigen-decompose a Hermitian matrix.

    The input is symmetrized as ``(h + h^dagger) / 2`` before calling LAPACK
    so that round-off asymmetry does not leak into the eigenvectors.

    Raises
    ------
    SizingError
        If ``h`` is not square.
    ValidationError
        If the off-symmetry residual exceeds :data:`HERMITIAN_TOL`.
    """
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise SizingError(f"hermitian_eigen needs a square matrix, got {h.shape}")
    resid = hermiticity_residual(h)
    if resid > HERMITIAN_TOL:
        raise ValidationError(f"matrix is not Hermitian (residual {resid:.3e})")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return HermitianEigen(w, v)


def expm_hermitian(h, t: float = 1.0) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via its spectral decomposition."""
    w, v = hermitian_eigen(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def partial_trace(rho, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced matrix of one factor of a bipartite operator.

    Parameters
    ----------
    rho : array_like
        Square operator on a space of dimension ``dims[0] * dims[1]``.
    dims : (int, int)
        Factor dimensions, first factor slowest-varying (``kron`` order).
    keep : {0, 1}
        Index of the factor that is kept.
    """
    rho = as_matrix(rho)
    d0, d1 = (int(x) for x in dims)
    if d0 < 1 or d1 < 1 or rho.shape != (d0 * d1, d0 * d1):
        raise SizingError(f"operator of shape {rho.shape} does not match dims {dims}")
    r = rho.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValidationError(f"keep must be 0 or 1, got {keep!r}")


def expectation(rho, op) -> complex:
    """``Tr(rho @ op)`` without forming the product."""
    return complex(np.sum(np.asarray(rho) * np.asarray(op).T))
