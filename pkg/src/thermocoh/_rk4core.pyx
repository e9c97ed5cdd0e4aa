# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lindblad right-hand side and RK4 stepper.

Operates on the block-tridiagonal generator produced by
:func:`thermocoh.kernels.banded_generator`. Joint index of ``|q, k>`` is
``q * n + k`` with ``n`` oscillator levels.

Generator layout
----------------
gd[k]  : 2x2 block of G at (k, k)
gu[k]  : 2x2 block of G at (k, k+1)
gl[k]  : 2x2 block of G at (k+1, k)
qj[j]  : 2x2 qubit jump S_j, acting as S_j ⊗ I
oc[j]  : oscillator jump coefficients, B_j |k> = oc[j, k] |k + osh[j]>
osh[j] : +1 or -1

with ``G = -i H_eff`` and ``H_eff = H - (i/2) sum A† A``, so that
``drho/dt = G rho + (G rho)† + sum A rho A†``.
"""

import numpy as np

ctypedef double complex cplx


cdef inline void _apply_g(const cplx[:, :, ::1] gd, const cplx[:, :, ::1] gu,
                          const cplx[:, :, ::1] gl, const cplx[:, ::1] rho,
                          cplx[:, ::1] work, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t d = 2 * n
    cdef Py_ssize_t p, q, k, j, r, s
    cdef cplx c
    for p in range(2):
        for k in range(n):
            r = p * n + k
            for j in range(d):
                work[r, j] = 0
            for q in range(2):
                c = gd[k, p, q]
                if c != 0:
                    s = q * n + k
                    for j in range(d):
                        work[r, j] = work[r, j] + c * rho[s, j]
                if k + 1 < n:
                    c = gu[k, p, q]
                    if c != 0:
                        s = q * n + k + 1
                        for j in range(d):
                            work[r, j] = work[r, j] + c * rho[s, j]
                if k > 0:
                    c = gl[k - 1, p, q]
                    if c != 0:
                        s = q * n + k - 1
                        for j in range(d):
                            work[r, j] = work[r, j] + c * rho[s, j]


cdef void _rhs(const cplx[:, :, ::1] gd, const cplx[:, :, ::1] gu, const cplx[:, :, ::1] gl,
               const cplx[:, :, ::1] qj, const cplx[:, ::1] oc, const long[::1] osh,
               const cplx[:, ::1] rho, cplx[:, ::1] out, cplx[:, ::1] work,
               Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t d = 2 * n
    cdef Py_ssize_t i, j, jj, p, pp, q, qq, m, mp, k, kp, s
    cdef cplx c, cm

    _apply_g(gd, gu, gl, rho, work, n)
    for i in range(d):
        for j in range(d):
            out[i, j] = work[i, j] + work[j, i].conjugate()

    for jj in range(qj.shape[0]):
        for p in range(2):
            for pp in range(2):
                for q in range(2):
                    for qq in range(2):
                        c = qj[jj, p, q] * qj[jj, pp, qq].conjugate()
                        if c == 0:
                            continue
                        for m in range(n):
                            for mp in range(n):
                                out[p * n + m, pp * n + mp] = (
                                    out[p * n + m, pp * n + mp] + c * rho[q * n + m, qq * n + mp]
                                )

    for jj in range(oc.shape[0]):
        s = osh[jj]
        for p in range(2):
            for pp in range(2):
                for m in range(n):
                    k = m - s
                    if k < 0 or k >= n:
                        continue
                    cm = oc[jj, k]
                    if cm == 0:
                        continue
                    for mp in range(n):
                        kp = mp - s
                        if kp < 0 or kp >= n:
                            continue
                        out[p * n + m, pp * n + mp] = (
                            out[p * n + m, pp * n + mp]
                            + cm * oc[jj, kp].conjugate() * rho[p * n + k, pp * n + kp]
                        )


def rhs(const cplx[:, :, ::1] gd, const cplx[:, :, ::1] gu, const cplx[:, :, ::1] gl,
        const cplx[:, :, ::1] qj, const cplx[:, ::1] oc, const long[::1] osh,
        const cplx[:, ::1] rho):
    """Return ``drho/dt`` for the banded generator."""
    cdef Py_ssize_t n = gd.shape[0]
    out = np.empty((2 * n, 2 * n), dtype=np.complex128)
    work = np.empty_like(out)
    cdef cplx[:, ::1] out_v = out
    cdef cplx[:, ::1] work_v = work
    with nogil:
        _rhs(gd, gu, gl, qj, oc, osh, rho, out_v, work_v, n)
    return out


def rk4_inplace(const cplx[:, :, ::1] gd, const cplx[:, :, ::1] gu, const cplx[:, :, ::1] gl,
                const cplx[:, :, ::1] qj, const cplx[:, ::1] oc, const long[::1] osh,
                cplx[:, ::1] rho, double h, Py_ssize_t nsteps):
    """Advance ``rho`` in place by ``nsteps`` classical RK4 steps of size ``h``."""
    cdef Py_ssize_t n = gd.shape[0]
    cdef Py_ssize_t d = 2 * n
    cdef Py_ssize_t step, i, j
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    kbuf = np.empty((d, d), dtype=np.complex128)
    acc = np.empty_like(kbuf)
    tmp = np.empty_like(kbuf)
    work = np.empty_like(kbuf)
    cdef cplx[:, ::1] kv = kbuf
    cdef cplx[:, ::1] av = acc
    cdef cplx[:, ::1] tv = tmp
    cdef cplx[:, ::1] wv = work

    with nogil:
        for step in range(nsteps):
            _rhs(gd, gu, gl, qj, oc, osh, rho, kv, wv, n)
            for i in range(d):
                for j in range(d):
                    av[i, j] = kv[i, j]
                    tv[i, j] = rho[i, j] + h2 * kv[i, j]
            _rhs(gd, gu, gl, qj, oc, osh, tv, kv, wv, n)
            for i in range(d):
                for j in range(d):
                    av[i, j] = av[i, j] + 2.0 * kv[i, j]
                    tv[i, j] = rho[i, j] + h2 * kv[i, j]
            _rhs(gd, gu, gl, qj, oc, osh, tv, kv, wv, n)
            for i in range(d):
                for j in range(d):
                    av[i, j] = av[i, j] + 2.0 * kv[i, j]
                    tv[i, j] = rho[i, j] + h * kv[i, j]
            _rhs(gd, gu, gl, qj, oc, osh, tv, kv, wv, n)
            for i in range(d):
                for j in range(d):
                    rho[i, j] = rho[i, j] + h6 * (av[i, j] + kv[i, j])
