"""Hot numerical kernels with numba and pure-numpy implementations.

Each kernel has two functionally identical implementations. The numba
path is selected when numba imports successfully and the environment
variable ``KRYLOVTD_NO_NUMBA`` is not ``1``; otherwise the pure-numpy
path is used. Both apply the same arithmetic (classical two-pass
Gram-Schmidt, identical stencils), so they agree to rounding.

``IMPLS`` maps kernel names to their available implementations so that
tests and the benchmark script can compare the paths directly.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("KRYLOVTD_NO_NUMBA", "0") != "1"


def reorth_block_numpy(basis, r):
    """Project the per-node residual block against all basis rows, twice.

    Parameters
    ----------
    basis : ndarray, shape (k, n, d)
        Orthonormal basis rows sampled at n grid nodes.
    r : ndarray, shape (n, d)
        Residual vectors, one per node.

    Returns
    -------
    ndarray, shape (n, d)
        Residuals with components along every basis row removed
        (classical Gram-Schmidt with one reorthogonalization pass).
    """
    r = r.copy()
    if basis.shape[0] == 0:
        return r
    for _ in range(2):
        c = np.einsum("kja,ja->kj", basis.conj(), r)
        r -= np.einsum("kj,kja->ja", c, basis)
    return r


def project_block_numpy(basis, y):
    """Project a single vector against basis rows, twice.

    basis has shape (m, d), y has shape (d,). Returns the residual.
    """
    y = y.copy()
    if basis.shape[0] == 0:
        return y
    for _ in range(2):
        y -= basis.T @ (basis.conj() @ y)
    return y


def sambe_apply_numpy(f, diag_mu, w_lo, w_hi, omega, use_sin):
    """Apply the truncated extended-space generator to f(mu, m).

    f has shape (N_H, 2M+1) with column c holding Fourier index
    m = c - M. The diagonal is diag_mu[mu] - m*omega. For a sine drive
    the coupling is +i*w_lo[mu]*(f[mu-1,m+1] - f[mu-1,m-1]) plus the
    mirrored w_hi term; for a cosine drive it is
    -w_lo[mu]*(f[mu-1,m+1] + f[mu-1,m-1]) plus the mirror. Couplings
    that would leave |m| <= M are dropped.
    """
    nh, nf = f.shape
    m_half = (nf - 1) // 2
    m = np.arange(nf) - m_half
    out = (diag_mu[:, None] - m[None, :] * omega) * f
    lo = np.zeros_like(f)
    lo[1:, :-1] += f[:-1, 1:]
    hi = np.zeros_like(f)
    hi[:-1, :-1] += f[1:, 1:]
    if use_sin:
        lo[1:, 1:] -= f[:-1, :-1]
        hi[:-1, 1:] -= f[1:, :-1]
        out += 1j * w_lo[:, None] * lo + 1j * w_hi[:, None] * hi
    else:
        lo[1:, 1:] += f[:-1, :-1]
        hi[:-1, 1:] += f[1:, :-1]
        out -= w_lo[:, None] * lo + w_hi[:, None] * hi
    return out


def mode2_apply_numpy(block, u):
    """Apply per-mode 2x2 matrices to rows of product-space vectors.

    block has shape (rows, 2**nm); u has shape (nm, 2, 2) with mode i
    acting on tensor factor i (factor 0 most significant).
    """
    rows, dim = block.shape
    nm = u.shape[0]
    out = block.reshape((rows,) + (2,) * nm)
    for i in range(nm):
        out = np.moveaxis(np.tensordot(u[i], out, axes=([1], [i + 1])), 0, i + 1)
    return np.ascontiguousarray(out.reshape(rows, dim))


if HAVE_NUMBA:

    @njit(cache=True)
    def reorth_block_numba(basis, r):
        kk, n, d = basis.shape
        r = r.copy()
        if kk == 0:
            return r
        for _ in range(2):
            c = np.empty((kk, n), dtype=np.complex128)
            for k in range(kk):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for a in range(d):
                        acc += np.conj(basis[k, j, a]) * r[j, a]
                    c[k, j] = acc
            for j in range(n):
                for a in range(d):
                    acc = 0.0 + 0.0j
                    for k in range(kk):
                        acc += c[k, j] * basis[k, j, a]
                    r[j, a] -= acc
        return r

    @njit(cache=True)
    def project_block_numba(basis, y):
        m, d = basis.shape
        y = y.copy()
        if m == 0:
            return y
        for _ in range(2):
            c = np.empty(m, dtype=np.complex128)
            for k in range(m):
                acc = 0.0 + 0.0j
                for a in range(d):
                    acc += np.conj(basis[k, a]) * y[a]
                c[k] = acc
            for a in range(d):
                acc = 0.0 + 0.0j
                for k in range(m):
                    acc += c[k] * basis[k, a]
                y[a] -= acc
        return y

    @njit(cache=True)
    def sambe_apply_numba(f, diag_mu, w_lo, w_hi, omega, use_sin):
        nh, nf = f.shape
        m_half = (nf - 1) // 2
        out = np.empty_like(f)
        for mu in range(nh):
            for c in range(nf):
                acc = (diag_mu[mu] - (c - m_half) * omega) * f[mu, c]
                if mu > 0:
                    lo = 0.0 + 0.0j
                    if c + 1 < nf:
                        lo += f[mu - 1, c + 1]
                    if use_sin:
                        if c - 1 >= 0:
                            lo -= f[mu - 1, c - 1]
                        acc += 1j * w_lo[mu] * lo
                    else:
                        if c - 1 >= 0:
                            lo += f[mu - 1, c - 1]
                        acc -= w_lo[mu] * lo
                if mu + 1 < nh:
                    hi = 0.0 + 0.0j
                    if c + 1 < nf:
                        hi += f[mu + 1, c + 1]
                    if use_sin:
                        if c - 1 >= 0:
                            hi -= f[mu + 1, c - 1]
                        acc += 1j * w_hi[mu] * hi
                    else:
                        if c - 1 >= 0:
                            hi += f[mu + 1, c - 1]
                        acc -= w_hi[mu] * hi
                out[mu, c] = acc
        return out

    @njit(cache=True)
    def mode2_apply_numba(block, u):
        rows, dim = block.shape
        nm = u.shape[0]
        out = block.copy()
        for i in range(nm):
            stride = 1 << (nm - 1 - i)
            u00 = u[i, 0, 0]
            u01 = u[i, 0, 1]
            u10 = u[i, 1, 0]
            u11 = u[i, 1, 1]
            for row in range(rows):
                for base in range(dim):
                    if base & stride == 0:
                        x0 = out[row, base]
                        x1 = out[row, base | stride]
                        out[row, base] = u00 * x0 + u01 * x1
                        out[row, base | stride] = u10 * x0 + u11 * x1
        return out

else:
    reorth_block_numba = None
    project_block_numba = None
    sambe_apply_numba = None
    mode2_apply_numba = None


IMPLS = {
    "reorth_block": {"numpy": reorth_block_numpy, "numba": reorth_block_numba},
    "project_block": {"numpy": project_block_numpy, "numba": project_block_numba},
    "sambe_apply": {"numpy": sambe_apply_numpy, "numba": sambe_apply_numba},
    "mode2_apply": {"numpy": mode2_apply_numpy, "numba": mode2_apply_numba},
}

_path = "numba" if USE_NUMBA else "numpy"
reorth_block = IMPLS["reorth_block"][_path]
project_block = IMPLS["project_block"][_path]
sambe_apply = IMPLS["sambe_apply"][_path]
mode2_apply = IMPLS["mode2_apply"][_path]
