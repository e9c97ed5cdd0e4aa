import math

import numpy as np
import pytest
from scipy.linalg import expm

from thermocoh import model
from thermocoh.errors import ValidationError
from thermocoh.hilbert import annihilation, pauli, quadratures, sigma_minus, sigma_plus
from thermocoh.linalg import hermiticity_residual, kron
from thermocoh.model import SystemParams


def _index(p, q, k):
    return q * (p.n_max + 1) + k


def test_params_defaults_and_derived():
    p = SystemParams()
    assert p.delta == 0.0
    assert p.g_x == pytest.approx(0.1 / math.sqrt(2))
    assert p.g_z == pytest.approx(0.1 / math.sqrt(2))
    assert p.g_x**2 + p.g_z**2 == pytest.approx(p.g0**2, rel=1e-14)
    assert p.dims == (2, p.n_max + 1)


def test_params_validation():
    with pytest.raises(ValidationError):
        SystemParams(omega_m=0)
    with pytest.raises(ValidationError):
        SystemParams(omega_q=-0.1)
    with pytest.raises(ValidationError):
        SystemParams(gamma_m=-1)
    with pytest.raises(ValidationError):
        SystemParams(n_m=float("inf"))
    with pytest.raises(ValidationError):
        SystemParams(cutoff=0)
    assert SystemParams(n_m=np.float64(0.5), cutoff=np.int64(12)).cutoff == 12


def test_from_detuning_floor():
    assert SystemParams.from_detuning(-1.0).omega_q == 0.0
    with pytest.raises(ValidationError):
        SystemParams.from_detuning(-1.5)


def test_decoupled_hamiltonian_commutes_with_number_and_sigma_z():
    p = SystemParams(g0=0.0, cutoff=8)
    h = model.hamiltonian(p)
    n = p.n_max + 1
    sz = kron(pauli("z"), np.eye(n))
    num = kron(np.eye(2), np.diag(np.arange(n)))
    assert np.allclose(h @ sz, sz @ h)
    assert np.allclose(h @ num, num @ h)


def test_hamiltonian_hermitian_for_random_params():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = SystemParams(
            omega_q=rng.uniform(0, 5), g0=rng.uniform(0, 0.5), theta=rng.uniform(0, math.pi),
            phi=rng.uniform(0, 2 * math.pi), n_m=rng.uniform(0, 2), g_m=rng.uniform(-0.1, 0.1),
        )
        assert hermiticity_residual(model.hamiltonian(p)) < 1e-12


def test_coupling_matrix_element():
    p = SystemParams(cutoff=5)
    h = model.hamiltonian(p)
    val = h[_index(p, 0, 0), _index(p, 0, 1)]
    assert val.real == pytest.approx(0.0707107, abs=5e-8)
    assert val.real == pytest.approx(math.sqrt(2) * (0.1 / math.sqrt(2)) / math.sqrt(2), rel=1e-14)


def test_free_hamiltonian_matches_quadrature_form_below_cutoff():
    p = SystemParams(g0=0.0, cutoff=10)
    x, q = quadratures(p.n_max)
    literal = 0.5 * p.omega_q * kron(pauli("z"), np.eye(11)) + kron(np.eye(2), 0.5 * p.omega_m * (x @ x + q @ q))
    diff = model.free_hamiltonian(p) - literal
    # identical except at the truncation corner
    mask = np.ones(11, bool)
    mask[-1] = False
    inner = np.kron([True, True], mask)
    assert np.max(np.abs(diff[np.ix_(inner, inner)])) < 1e-13


def test_qid_and_sigma_y_terms():
    p = SystemParams(g0=0.0, g_m=0.03, cutoff=6)
    x, _ = quadratures(6)
    h_int = model.interaction_hamiltonian(p)
    assert np.allclose(h_int, math.sqrt(2) * 0.03 * kron(np.eye(2), x))
    p = SystemParams(theta=math.pi / 2, phi=math.pi / 2, cutoff=6)
    assert np.allclose(model.interaction_hamiltonian(p), math.sqrt(2) * 0.1 * kron(pauli("y"), x), atol=1e-15)


def test_real_symmetric_for_phi_zero():
    h = model.hamiltonian(SystemParams(theta=0.3, g_m=0.02, cutoff=8))
    assert np.max(np.abs(h.imag)) == 0
    assert np.array_equal(h, h.T)


def test_hamiltonian_linear_in_g0():
    base = model.hamiltonian(SystemParams(g0=0.0, cutoff=10))
    d1 = np.linalg.norm(model.hamiltonian(SystemParams(g0=0.05, cutoff=10)) - base)
    d2 = np.linalg.norm(model.hamiltonian(SystemParams(g0=0.1, cutoff=10)) - base)
    assert d2 / d1 == pytest.approx(2.0, rel=1e-12)


def test_theta_reflection_conjugation():
    n = 13
    parity = np.diag((-1.0) ** np.arange(n))
    u = kron(pauli("z"), parity)
    for theta in (0.2, math.pi / 4, 1.1):
        h1 = model.hamiltonian(SystemParams(theta=theta, cutoff=n - 1))
        h2 = model.hamiltonian(SystemParams(theta=math.pi - theta, cutoff=n - 1))
        assert np.max(np.abs(u @ h1 @ u.conj().T - h2)) < 1e-15


def test_collapse_channels():
    assert model.collapse_channels(SystemParams()) == []
    chans = model.collapse_channels(SystemParams(gamma_m=1e-6, n_m=0.5, gamma_q1=0.01, n_q=0.0))
    labels = [c.label for c in chans]
    assert labels == ["a", "a_dag", "sigma_minus"]
    assert chans[0].rate == pytest.approx(1.5e-6)
    assert chans[1].rate == pytest.approx(0.5e-6)
    assert chans[2].rate == pytest.approx(0.01)
    p = SystemParams(gamma_m=0.2, gamma_q1=0.3, n_q=0.5, cutoff=4)
    chans = model.collapse_channels(p)
    assert len(chans) == 4
    assert np.allclose(chans[0].operator, kron(np.eye(2), annihilation(4)))
    assert np.allclose(chans[3].jump, math.sqrt(0.15) * kron(pauli("x") / 2 + 1j * pauli("y") / 2, np.eye(5)))


def test_interaction_picture_at_zero_time():
    p = SystemParams(theta=0.6, phi=0.3, g_m=0.02, cutoff=8)
    h_i = model.interaction_picture_hamiltonian(p, 0.0)
    expected = model.hamiltonian(p) - model.free_hamiltonian(p)
    assert np.max(np.abs(h_i - expected)) < 1e-15


def test_interaction_picture_rotating_terms_static_on_resonance():
    p = SystemParams(theta=math.pi / 2, cutoff=6)
    a = annihilation(6)
    rot = p.g_x * (kron(sigma_minus(), a.conj().T) + kron(sigma_plus(), a))
    # co-rotating part is the time average over one counter-rotating period
    ts = np.linspace(0, math.pi, 401)[:-1]
    avg = sum(model.interaction_picture_hamiltonian(p, t) for t in ts) / ts.size
    assert np.max(np.abs(avg - rot)) < 1e-12


def test_interaction_picture_matches_frame_conjugation():
    p = SystemParams(theta=0.9, phi=0.4, g_m=0.03, omega_q=1.3, cutoff=10)
    h0 = model.free_hamiltonian(p)
    t = 0.7
    u = expm(1j * h0 * t)
    direct = u @ (model.hamiltonian(p) - h0) @ u.conj().T
    assert np.max(np.abs(direct - model.interaction_picture_hamiltonian(p, t))) < 1e-10
