import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krylovtd.errors import ConfigurationError, StructuralError
from krylovtd.numcore import (
    DEFLATION_RTOL,
    ComplexTridiag,
    HermTridiag,
    TimeGrid,
    cumulative_integral,
    finite_diff_series,
    orthonormalize_against,
    tridiag_expm_apply,
)


def test_time_grid_nodes():
    g = TimeGrid(0.0, 2.0, 8)
    assert g.n_nodes == 9
    assert g.dt == 0.25
    np.testing.assert_allclose(g.times, np.linspace(0.0, 2.0, 9))


def test_time_grid_rejects_short_and_reversed():
    with pytest.raises(ConfigurationError):
        TimeGrid(0.0, 1.0, 3)
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 1.0, 10)


def test_herm_tridiag_dense():
    m = HermTridiag([1.0, 2.0, 3.0], [0.5, -0.25]).to_dense()
    assert m.shape == (3, 3)
    np.testing.assert_allclose(m, m.conj().T)
    assert m[1, 0] == 0.5 and m[2, 1] == -0.25
    with pytest.raises(StructuralError):
        HermTridiag([1.0, 2.0], [0.5, 0.5])


def test_complex_tridiag_dense_hermitian():
    c = ComplexTridiag([1.0 + 1.0j, 0.3 - 0.2j])
    m = c.to_dense()
    assert c.dim == 3
    np.testing.assert_allclose(m, m.conj().T)
    assert m[1, 0] == 1.0 + 1.0j
    assert np.all(np.diag(m) == 0.0)


def test_finite_diff_exact_on_quadratics():
    g = TimeGrid(0.0, 1.0, 40)
    t = g.times
    v = 3.0 * t**2 - 2.0 * t + 1.0
    np.testing.assert_allclose(finite_diff_series(v, g), 6.0 * t - 2.0,
                               atol=1e-12)


def test_finite_diff_second_order():
    errs = []
    for n in (100, 200):
        g = TimeGrid(0.0, 1.0, n)
        v = np.sin(3.0 * g.times)
        errs.append(np.abs(finite_diff_series(v, g)[1:-1]
                           - 3.0 * np.cos(3.0 * g.times)[1:-1]).max())
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_finite_diff_shape_mismatch():
    g = TimeGrid(0.0, 1.0, 10)
    with pytest.raises(StructuralError):
        finite_diff_series(np.zeros(5), g)


def test_orthonormalize_against_removes_and_normalizes():
    rng = np.random.default_rng(1)
    basis, _ = np.linalg.qr(rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3)))
    basis = basis.T
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    rnorm, unit = orthonormalize_against(v, basis)
    assert rnorm > 0.0
    np.testing.assert_allclose(np.linalg.norm(unit), 1.0, atol=1e-14)
    assert np.abs(basis.conj() @ unit).max() < 1e-14


def test_orthonormalize_against_deflates_in_span():
    rng = np.random.default_rng(2)
    basis, _ = np.linalg.qr(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))
    basis = basis.T
    v = 0.7 * basis[0] - 0.2j * basis[1]
    rnorm, unit = orthonormalize_against(v, basis)
    assert unit is None
    assert rnorm <= DEFLATION_RTOL * np.linalg.norm(v)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=2**32 - 1))
def test_tridiag_expm_apply_unitary(d, seed):
    rng = np.random.default_rng(seed)
    lmat = HermTridiag(rng.normal(size=d), rng.normal(size=d - 1))
    phi = rng.normal(size=d) + 1j * rng.normal(size=d)
    out = tridiag_expm_apply(lmat, 0.37, phi)
    np.testing.assert_allclose(np.linalg.norm(out), np.linalg.norm(phi),
                               rtol=1e-12)
    import scipy.linalg
    ref = scipy.linalg.expm(-1j * 0.37 * lmat.to_dense()) @ phi
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_tridiag_expm_apply_complex_offdiag():
    rng = np.random.default_rng(4)
    c = ComplexTridiag(rng.normal(size=4) + 1j * rng.normal(size=4))
    phi = rng.normal(size=5) + 1j * rng.normal(size=5)
    out = tridiag_expm_apply(c, 0.21, phi)
    import scipy.linalg
    ref = scipy.linalg.expm(-1j * 0.21 * c.to_dense()) @ phi
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_tridiag_expm_apply_dim_one():
    out = tridiag_expm_apply(HermTridiag([2.0], []), 0.5, np.array([1.0 + 0j]))
    np.testing.assert_allclose(out, [np.exp(-1j)], atol=1e-15)


def test_tridiag_expm_apply_rejects_mismatch():
    with pytest.raises(StructuralError):
        tridiag_expm_apply(HermTridiag([1.0, 2.0], [0.1]), 0.1, np.zeros(3))


def test_cumulative_integral_linear_exact():
    g = TimeGrid(0.0, 2.0, 50)
    out = cumulative_integral(2.0 * g.times, g)
    np.testing.assert_allclose(out, g.times**2, atol=1e-12)
    assert out[0] == 0.0


def test_cumulative_integral_axis0_on_blocks():
    g = TimeGrid(0.0, 1.0, 20)
    f = np.stack([np.ones_like(g.times), g.times], axis=1)
    out = cumulative_integral(f, g)
    np.testing.assert_allclose(out[:, 0], g.times, atol=1e-12)
    np.testing.assert_allclose(out[:, 1], 0.5 * g.times**2, atol=1e-3)
