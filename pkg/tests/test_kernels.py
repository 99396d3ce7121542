import numpy as np
import pytest

from krylovtd import _kernels


def random_basis(rng, k, n, d):
    m = rng.normal(size=(k, n, d)) + 1j * rng.normal(size=(k, n, d))
    for j in range(n):
        q, _ = np.linalg.qr(m[:, j, :].T)
        m[:, j, :] = q.T[:k]
    return m


@pytest.mark.parametrize("name", sorted(_kernels.IMPLS))
def test_impls_agree(name):
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(7)
    if name == "reorth_block":
        basis = random_basis(rng, 3, 5, 8)
        r = rng.normal(size=(5, 8)) + 1j * rng.normal(size=(5, 8))
        args = (basis, r)
    elif name == "project_block":
        m = rng.normal(size=(4, 9)) + 1j * rng.normal(size=(4, 9))
        q, _ = np.linalg.qr(m.T)
        args = (np.ascontiguousarray(q.T), rng.normal(size=9) + 1j * rng.normal(size=9))
    elif name == "sambe_apply":
        f = rng.normal(size=(6, 7)) + 1j * rng.normal(size=(6, 7))
        args = (f, rng.normal(size=6), rng.normal(size=6), rng.normal(size=6),
                0.3, True)
    else:
        block = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
        u = rng.normal(size=(4, 2, 2)) + 1j * rng.normal(size=(4, 2, 2))
        args = (block, u)
    out_np = _kernels.IMPLS[name]["numpy"](*[np.copy(a) if isinstance(a, np.ndarray) else a for a in args])
    out_nb = _kernels.IMPLS[name]["numba"](*[np.copy(a) if isinstance(a, np.ndarray) else a for a in args])
    np.testing.assert_allclose(out_nb, out_np, rtol=0, atol=1e-13)


def test_project_block_removes_components():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(5, 12)) + 1j * rng.normal(size=(5, 12))
    q, _ = np.linalg.qr(m.T)
    basis = np.ascontiguousarray(q.T)
    y = rng.normal(size=12) + 1j * rng.normal(size=12)
    r = _kernels.project_block(basis, y)
    assert np.abs(basis.conj() @ r).max() < 1e-14


def test_project_block_empty_basis_is_identity():
    y = np.arange(6, dtype=complex)
    r = _kernels.project_block(np.zeros((0, 6), dtype=complex), y)
    np.testing.assert_array_equal(r, y)


def test_reorth_block_per_node():
    rng = np.random.default_rng(11)
    basis = random_basis(rng, 2, 4, 6)
    r = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
    out = _kernels.reorth_block(basis, r)
    for j in range(4):
        assert np.abs(basis[:, j, :].conj() @ out[j]).max() < 1e-14


def test_sambe_apply_matches_dense():
    rng = np.random.default_rng(5)
    nh, m_max = 4, 3
    nf = 2 * m_max + 1
    diag_mu = rng.normal(size=nh)
    w_lo = rng.normal(size=nh)
    w_hi = rng.normal(size=nh)
    omega = 0.7
    for use_sin in (True, False):
        dense = np.zeros((nh * nf, nh * nf), dtype=complex)
        for mu in range(nh):
            for c in range(nf):
                i = mu * nf + c
                dense[i, i] = diag_mu[mu] - (c - m_max) * omega
                for dc in (-1, 1):
                    if not 0 <= c + dc < nf:
                        continue
                    if use_sin:
                        lo_amp = 1j * dc * w_lo[mu]
                        hi_amp = 1j * dc * w_hi[mu]
                    else:
                        lo_amp = -w_lo[mu]
                        hi_amp = -w_hi[mu]
                    if mu >= 1:
                        dense[i, (mu - 1) * nf + (c + dc)] += lo_amp
                    if mu <= nh - 2:
                        dense[i, (mu + 1) * nf + (c + dc)] += hi_amp
        f = rng.normal(size=(nh, nf)) + 1j * rng.normal(size=(nh, nf))
        out = _kernels.sambe_apply(f, diag_mu, w_lo, w_hi, omega, use_sin)
        ref = (dense @ f.ravel()).reshape(nh, nf)
        np.testing.assert_allclose(out, ref, atol=1e-13)


def test_sambe_apply_hermitian_with_paired_couplings():
    # hermiticity of the extended generator needs w_hi[mu-1] == w_lo[mu],
    # which is how the driven-model tables are built
    rng = np.random.default_rng(9)
    nh, m_max = 3, 2
    nf = 2 * m_max + 1
    diag_mu = rng.normal(size=nh)
    w_lo = rng.normal(size=nh)
    w_lo[0] = 0.0
    w_hi = np.zeros(nh)
    w_hi[:-1] = w_lo[1:]
    for use_sin in (True, False):
        dim = nh * nf
        dense = np.zeros((dim, dim), dtype=complex)
        eye = np.eye(dim, dtype=complex)
        for col in range(dim):
            out = _kernels.sambe_apply(eye[col].reshape(nh, nf).copy(),
                                       diag_mu, w_lo, w_hi, 0.4, use_sin)
            dense[:, col] = out.ravel()
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-13)


def test_mode2_apply_matches_kron():
    rng = np.random.default_rng(13)
    n_modes = 3
    u = rng.normal(size=(n_modes, 2, 2)) + 1j * rng.normal(size=(n_modes, 2, 2))
    # mode 0 acts on the most significant tensor factor
    big = np.eye(1, dtype=complex)
    for k in range(n_modes):
        big = np.kron(big, u[k])
    block = rng.normal(size=(2, 2**n_modes)) + 1j * rng.normal(size=(2, 2**n_modes))
    out = _kernels.mode2_apply(np.ascontiguousarray(block), u)
    ref = block @ big.T
    np.testing.assert_allclose(out, ref, atol=1e-13)
