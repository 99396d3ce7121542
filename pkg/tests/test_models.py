import numpy as np
import pytest

from krylovtd import models
from krylovtd.errors import ConfigurationError
from krylovtd.models import Drive, FIXED, INSTANTANEOUS
from krylovtd.numcore import TimeGrid


def test_drive_constructors():
    t = np.linspace(0.0, 2.0, 7)
    c = Drive.constant(1.5)
    np.testing.assert_allclose(c.value(t), 1.5)
    np.testing.assert_allclose(c.deriv(t), 0.0)
    lin = Drive.linear(2.0, -1.0)
    np.testing.assert_allclose(lin.value(t), 2.0 * t - 1.0)
    np.testing.assert_allclose(lin.deriv(t), 2.0)
    sweep = Drive.pi_sweep(2.0)
    np.testing.assert_allclose(sweep.value(2.0), np.pi)
    sin = Drive.sinusoidal(0.5, 1.3, phase=0.2, offset=0.1)
    np.testing.assert_allclose(sin.value(t), 0.1 + 0.5 * np.sin(1.3 * t + 0.2))
    np.testing.assert_allclose(sin.deriv(t), 0.65 * np.cos(1.3 * t + 0.2))


def test_drive_tabulated_tracks_samples():
    t = np.linspace(0.0, 3.0, 60)
    tab = Drive.tabulated(t, np.sin(t))
    tt = np.linspace(0.1, 2.9, 31)
    np.testing.assert_allclose(tab.value(tt), np.sin(tt), atol=1e-6)
    np.testing.assert_allclose(tab.deriv(tt), np.cos(tt), atol=1e-4)


def test_pi_sweep_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        Drive.pi_sweep(0.0)


def test_spin_operators_algebra():
    for s in (0.5, 1.0, 2.5):
        sx, sy, sz = models.spin_operators(s)
        np.testing.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-13)
        casimir = sx @ sx + sy @ sy + sz @ sz
        np.testing.assert_allclose(casimir, s * (s + 1) * np.eye(sx.shape[0]),
                                   atol=1e-12)


def test_single_spin_spec_and_seed():
    spec = models.single_spin(1.0, 0.7, Drive.pi_sweep(2.0))
    assert spec.dim == 3
    h0 = models.hamiltonian_at(spec, 0.0)
    np.testing.assert_allclose(h0, h0.conj().T)
    # seed is an eigenstate of H(t0)
    v = spec.psi0
    hv = h0 @ v
    lam = np.vdot(v, hv)
    np.testing.assert_allclose(hv, lam * v, atol=1e-12)


def test_hamiltonian_at_matches_drive():
    spec = models.single_spin(1.5, 1.0, Drive.pi_sweep(2.0))
    sx, sy, sz = models.spin_operators(1.5)
    for t in (0.3, 1.1, 1.9):
        th = np.pi * t / 2.0
        ref = np.sin(th) * sx + np.cos(th) * sz
        np.testing.assert_allclose(models.hamiltonian_at(spec, t), ref,
                                   atol=1e-13)


def test_oscillator_translate_hamiltonian():
    spec = models.oscillator_translate(1.0, Drive.sinusoidal(0.5, 1.3),
                                       n_max=16)
    h = models.hamiltonian_at(spec, 0.4)
    np.testing.assert_allclose(h, h.conj().T)
    assert spec.dim == 16


def test_oscillator_dilate_needs_positive_frequency():
    with pytest.raises(ConfigurationError):
        models.oscillator_dilate(Drive.linear(1.0, -2.0), n_max=8)


def test_lmg_spec_fields():
    spec = models.lmg(8, 1.0, 2.0, 0.3)
    assert spec.dim == 9
    assert spec.kind == "lmg"
    # seed is the top-weight basis state
    assert spec.psi0[0] == 1.0 and np.all(spec.psi0[1:] == 0.0)
    h0 = models.hamiltonian_at(spec, 0.0)
    np.testing.assert_allclose(h0, h0.conj().T)


def test_lmg_rejects_unknown_drive():
    with pytest.raises(ConfigurationError):
        models.lmg(8, 1.0, 2.0, 0.3, drive="square")


def test_ising_free_fermion_spec():
    spec = models.ising_free_fermion(8, 2.0, 0.1)
    assert spec.dim == 2**4
    assert spec.params["m_steps"] == 40
    with pytest.raises(ConfigurationError):
        models.ising_free_fermion(7, 2.0, 0.1)
    with pytest.raises(ConfigurationError):
        models.ising_free_fermion(8, 0.01, 0.1)


def test_ising_eps_v_against_definitions():
    n, t_q, dt, h = 8, 2.0, 0.1, 1.0
    spec = models.ising_free_fermion(n, t_q, dt, h=h)
    m_steps = spec.params["m_steps"]
    p = models.ising_momenta(spec)
    np.testing.assert_allclose(p, (np.pi / n) * (2 * np.arange(1, n // 2 + 1) - 1))
    for k in (0, m_steps // 2, m_steps - 1):
        eps, v = models.ising_eps_v(spec, k)
        frac = k / m_steps
        ref_eps = 2.0 * h * np.sqrt((1.0 - 2.0 * frac) ** 2
                                    + 4.0 * (1.0 - frac) * frac
                                    * np.sin(p / 2.0) ** 2)
        np.testing.assert_allclose(eps, ref_eps, atol=1e-12)
        np.testing.assert_allclose(v, -h**2 * np.sin(p) / (t_q * eps**2),
                                   atol=1e-12)


def test_custom_model_wraps_callable():
    def hfunc(t):
        return np.array([[0.0, t], [t, 1.0]], dtype=complex)

    spec = models.custom_model(hfunc, 2)
    np.testing.assert_allclose(models.hamiltonian_at(spec, 0.5),
                               hfunc(0.5))
    np.testing.assert_allclose(spec.psi0, [1.0, 0.0])


def test_instantaneous_frame_orthonormal_and_smooth():
    spec = models.single_spin(2.0, 1.0, Drive.pi_sweep(2.0),
                              initial_basis=INSTANTANEOUS)
    grid = TimeGrid(0.0, 2.0, 64)
    frame = models.instantaneous_frame(spec, grid)
    v = frame if isinstance(frame, np.ndarray) else frame[0]
    assert v.shape[:1] == (grid.n_nodes,) or v.shape[1] == grid.n_nodes


def test_oracle_lanczos_spin_closed_forms():
    s, h, t_f = 2.0, 1.0, 2.0
    grid = TimeGrid(0.0, t_f, 32)
    t = grid.times[1:-1]
    d = 5
    ck = np.sqrt(np.arange(1.0, d) * (d - np.arange(1.0, d)))
    spec = models.single_spin(s, h, Drive.pi_sweep(t_f))
    orc = models.oracle_lanczos(spec)
    assert orc.d == d
    for k in range(1, d):
        np.testing.assert_allclose(orc.b(k, t),
                                   0.5 * h * np.sin(np.pi * t / t_f) * ck[k - 1],
                                   atol=1e-12)
    spec_i = models.single_spin(s, h, Drive.pi_sweep(t_f),
                                initial_basis=INSTANTANEOUS)
    orc_i = models.oracle_lanczos(spec_i)
    for k in range(1, d):
        np.testing.assert_allclose(orc_i.b(k, t),
                                   0.5 * (np.pi / t_f) * ck[k - 1]
                                   * np.ones_like(t), atol=1e-12)


def test_oracle_lanczos_oscillators():
    grid = TimeGrid(0.0, 1.0, 32)
    t = grid.times[1:-1]
    spec = models.oscillator_translate(1.0, Drive.sinusoidal(0.5, 1.3),
                                       n_max=32, initial_basis=INSTANTANEOUS)
    orc = models.oracle_lanczos(spec)
    for k in (1, 3, 6):
        ref = np.sqrt(0.5) * np.abs(0.65 * np.cos(1.3 * t)) * np.sqrt(k)
        np.testing.assert_allclose(orc.b(k, t), ref, atol=1e-12)
    spec = models.oscillator_dilate(Drive.linear(0.3, 1.0), n_max=32,
                                    initial_basis=INSTANTANEOUS)
    orc = models.oracle_lanczos(spec)
    for k in (1, 2, 4):
        ref = (0.3 / (4.0 * (1.0 + 0.3 * t))) * np.sqrt(2.0 * k * (2.0 * k - 1.0))
        np.testing.assert_allclose(orc.b(k, t), ref, atol=1e-12)


def test_spin_heisenberg_complexity_closed_form():
    t = np.linspace(0.0, 3.0, 11)
    s, h, omega = 3.0, 1.0, 0.7
    w2 = h**2 + omega**2
    ref = s * omega**2 * (1.0 - np.cos(np.sqrt(w2) * t)) / w2
    np.testing.assert_allclose(models.spin_heisenberg_complexity(s, h, omega, t),
                               ref, atol=1e-13)
    assert models.spin_heisenberg_complexity(s, h, omega, 0.0) == 0.0
