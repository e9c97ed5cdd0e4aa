import math

import numpy as np
import pytest

from thermocoh import kernels
from thermocoh.errors import ValidationError
from thermocoh.hilbert import ThermalSpec, initial_state
from thermocoh.linalg import kron
from thermocoh.model import SystemParams, collapse_channels, hamiltonian

from .helpers import liouvillian, liouville_evolve, random_density

BACKENDS = ["python"] + (["compiled"] if kernels.COMPILED_AVAILABLE else [])


def _system(cutoff=6, **kw):
    base = dict(theta=0.7, phi=0.4, g0=0.2, g_m=0.05, n_m=0.3, n_q=0.2,
                gamma_m=0.05, gamma_q1=0.08, cutoff=cutoff)
    base.update(kw)
    p = SystemParams(**base)
    return p, hamiltonian(p), [c.jump for c in collapse_channels(p)]


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert kernels.get_backend("python").__name__.endswith("_rk4py")
    with pytest.raises(ValidationError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
def test_rhs_matches_liouvillian(backend):
    p, h, jumps = _system()
    n = p.n_max + 1
    gen = kernels.banded_generator(h, jumps, n)
    rho = random_density(2 * n, seed=11)
    got = kernels.rhs(gen, rho, backend)
    want = (liouvillian(h, jumps) @ rho.reshape(-1, order="F")).reshape(2 * n, 2 * n, order="F")
    assert np.max(np.abs(got - want)) < 1e-13


def test_backends_agree_after_many_steps():
    if not kernels.COMPILED_AVAILABLE:
        pytest.skip("compiled backend not built")
    p, h, jumps = _system(cutoff=12)
    n = p.n_max + 1
    gen = kernels.banded_generator(h, jumps, n)
    a = np.ascontiguousarray(random_density(2 * n, seed=3))
    b = a.copy()
    kernels.rk4_inplace(gen, a, 0.01, 300, "python")
    kernels.rk4_inplace(gen, b, 0.01, 300, "compiled")
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("backend", BACKENDS)
def test_rk4_matches_matrix_exponential(backend):
    p, h, jumps = _system()
    n = p.n_max + 1
    gen = kernels.banded_generator(h, jumps, n)
    rho0 = random_density(2 * n, seed=5)
    (want,) = liouville_evolve(h, jumps, rho0, [1.0])
    errs = []
    for steps in (250, 500):
        rho = np.ascontiguousarray(rho0.copy())
        kernels.rk4_inplace(gen, rho, 1.0 / steps, steps, backend)
        errs.append(np.max(np.abs(rho - want)))
    assert errs[1] < 1e-10
    # fourth-order global error
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_qubit_decay_rate(backend):
    gamma = 0.3
    p = SystemParams(g0=0.0, gamma_q1=gamma, cutoff=3)
    n = p.n_max + 1
    gen = kernels.banded_generator(hamiltonian(p), [c.jump for c in collapse_channels(p)], n)
    rho = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    rho[0, 0] = 1.0  # |e, 0>
    kernels.rk4_inplace(gen, rho, 0.01, 200, backend)
    assert rho[0, 0].real == pytest.approx(math.exp(-gamma * 2.0), rel=1e-9)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-13)


def test_oscillator_decay_of_number():
    gamma = 0.2
    p = SystemParams(g0=0.0, gamma_m=gamma, n_m=0.0, cutoff=8)
    n = p.n_max + 1
    gen = kernels.banded_generator(hamiltonian(p), [c.jump for c in collapse_channels(p)], n)
    rho = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    rho[n + 3, n + 3] = 1.0  # |g, 3>
    kernels.rk4_inplace(gen, rho, 0.01, 100)
    occ = np.real(np.diagonal(rho)[n:]) @ np.arange(n)
    assert occ == pytest.approx(3 * math.exp(-gamma), rel=1e-9)


def test_generator_layout():
    p, h, jumps = _system(cutoff=4)
    gen = kernels.banded_generator(h, jumps, 5)
    assert gen.levels == 5
    assert gen.gd.shape == (5, 2, 2) and gen.gu.shape == (4, 2, 2) and gen.gl.shape == (4, 2, 2)
    assert gen.qj.shape == (2, 2, 2)
    assert gen.oc.shape == (2, 5)
    assert list(gen.osh) == [-1, 1]  # a lowers, a_dag raises


def test_generator_rejects_off_band_terms():
    n = 4
    h = np.zeros((2 * n, 2 * n))
    h[0, 2] = h[2, 0] = 1.0  # couples Fock levels 0 and 2
    with pytest.raises(ValidationError):
        kernels.banded_generator(h, [], n)
    bad_jump = kron(np.eye(2), np.diag(np.ones(2), 2))
    with pytest.raises(ValidationError):
        kernels.banded_generator(np.zeros((2 * n, 2 * n)), [bad_jump], n)
    with pytest.raises(ValidationError):
        kernels.banded_generator(np.zeros((3, 3)), [], n)


def test_rk4_rejects_non_contiguous_state():
    p, h, jumps = _system(cutoff=3)
    gen = kernels.banded_generator(h, jumps, 4)
    rho = initial_state(ThermalSpec(0.0, 0.2), 3).matrix
    with pytest.raises(ValidationError):
        kernels.rk4_inplace(gen, rho, 0.01, 1)  # read-only
    with pytest.raises(ValidationError):
        kernels.rk4_inplace(gen, np.asfortranarray(np.eye(8, dtype=complex)[:, ::-1]), 0.01, 1)
