"""Pure numpy fallback for the compiled RK4 core.

Same call signatures as ``_rk4core``; the banded generator is expanded to
dense matrices once per call and products go through BLAS.
"""

import numpy as np


def _dense(gd, gu, gl, qj, oc, osh):
    n = gd.shape[0]
    d = 2 * n
    g = np.zeros((d, d), dtype=np.complex128)
    g4 = g.reshape(2, n, 2, n)
    k = np.arange(n)
    g4[:, k, :, k] = gd
    g4[:, k[:-1], :, k[1:]] = gu
    g4[:, k[1:], :, k[:-1]] = gl
    eye_n = np.eye(n, dtype=np.complex128)
    jumps = [np.kron(s, eye_n) for s in qj]
    for coef, shift in zip(oc, osh):
        b = np.zeros((n, n), dtype=np.complex128)
        src = np.arange(n)
        dst = src + shift
        ok = (dst >= 0) & (dst < n)
        b[dst[ok], src[ok]] = coef[ok]
        jumps.append(np.kron(np.eye(2, dtype=np.complex128), b))
    return g, jumps


def _rhs_dense(g, jumps, rho):
    m = g @ rho
    out = m + m.conj().T
    for a in jumps:
        out += (a @ rho) @ a.conj().T
    return out


def rhs(gd, gu, gl, qj, oc, osh, rho):
    g, jumps = _dense(gd, gu, gl, qj, oc, osh)
    return _rhs_dense(g, jumps, np.asarray(rho))


def rk4_inplace(gd, gu, gl, qj, oc, osh, rho, h, nsteps):
    g, jumps = _dense(gd, gu, gl, qj, oc, osh)
    for _ in range(int(nsteps)):
        k1 = _rhs_dense(g, jumps, rho)
        k2 = _rhs_dense(g, jumps, rho + (0.5 * h) * k1)
        k3 = _rhs_dense(g, jumps, rho + (0.5 * h) * k2)
        k4 = _rhs_dense(g, jumps, rho + h * k3)
        rho += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
