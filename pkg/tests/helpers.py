"""Shared test utilities: random matrices and an independent Liouvillian oracle."""

import numpy as np
from scipy.linalg import expm


def random_hermitian(d, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_density(d, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = a @ a.conj().T
    return r / np.trace(r)


def liouvillian(h, jumps):
    """Column-stacking superoperator of -i[h, .] + sum D[A]."""
    d = h.shape[0]
    eye = np.eye(d)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for a in jumps:
        ada = a.conj().T @ a
        lv += np.kron(a.conj(), a) - 0.5 * np.kron(eye, ada) - 0.5 * np.kron(ada.T, eye)
    return lv


def liouville_evolve(h, jumps, rho0, times):
    """States at ``times`` from the matrix exponential of the Liouvillian."""
    lv = liouvillian(h, jumps)
    d = h.shape[0]
    vec = rho0.reshape(-1, order="F")
    return [(expm(lv * t) @ vec).reshape(d, d, order="F") for t in times]
