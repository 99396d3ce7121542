"""Dense linear-algebra and calculus kernels shared by every module.

All operations are pure functions; arrays are never mutated in place.
Derivatives and quadrature are second-order accurate so that total
pipeline error is O(dt^2).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, NumericalError, StructuralError

# Residual norms below this fraction of the input scale signal that the
# vector lies in the span of the basis (space exhausted).
DEFLATION_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n_steps+1 nodes on [t_start, t_end]."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 4:
            raise ConfigurationError(
                f"n_steps must be >= 4 for the boundary stencils, got {self.n_steps}"
            )
        if not self.t_end > self.t_start:
            raise ConfigurationError(
                f"need t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def n_nodes(self):
        return self.n_steps + 1

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.n_nodes)


@dataclass(frozen=True)
class HermTridiag:
    """Real symmetric tridiagonal matrix: diag a_0..a_{d-1}, offdiag b_1..b_{d-1}."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))
        object.__setattr__(self, "offdiag", np.asarray(self.offdiag, dtype=float))
        if self.offdiag.shape != (self.dim - 1,):
            raise StructuralError(
                f"offdiag length {self.offdiag.shape} inconsistent with diag length {self.dim}"
            )

    @property
    def dim(self):
        return self.diag.shape[0]

    def to_dense(self):
        m = np.diag(self.diag.astype(complex))
        idx = np.arange(self.dim - 1)
        m[idx + 1, idx] = self.offdiag
        m[idx, idx + 1] = self.offdiag
        return m


@dataclass(frozen=True)
class ComplexTridiag:
    """Hermitian tridiagonal with zero diagonal and complex subdiagonal.

    Entry [k+1, k] is offdiag[k]; [k, k+1] is its conjugate.
    """

    offdiag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offdiag", np.asarray(self.offdiag, dtype=complex))

    @property
    def dim(self):
        return self.offdiag.shape[0] + 1

    def to_dense(self):
        d = self.dim
        m = np.zeros((d, d), dtype=complex)
        idx = np.arange(d - 1)
        m[idx + 1, idx] = self.offdiag
        m[idx, idx + 1] = self.offdiag.conj()
        return m


def finite_diff_series(values, grid):
    """Second-order time derivative of a node-sampled series.

    Central differences at interior nodes, three-point one-sided
    stencils at both endpoints; exact for entrywise quadratics in t.
    values must have grid.n_nodes entries along axis 0.
    """
    v = np.asarray(values)
    if v.dtype == object:
        raise StructuralError("series entries have inconsistent dimensions")
    if v.shape[0] != grid.n_nodes:
        raise StructuralError(
            f"series has {v.shape[0]} nodes, grid has {grid.n_nodes}"
        )
    dt = grid.dt
    out = np.empty_like(v, dtype=np.result_type(v.dtype, float))
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    return out


def orthonormalize_against(v, basis):
    """Classical Gram-Schmidt with one reorthogonalization pass.

    Subtracts the projection of v onto every basis row twice, then
    normalizes. Returns (residual_norm, unit_residual); unit_residual
    is None when the residual norm falls below DEFLATION_RTOL times the
    input norm (deflation: v lies in the span of the basis).
    """
    v = np.asarray(v, dtype=complex)
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim == 1:
        basis = basis.reshape(0, v.shape[0]) if basis.size == 0 else basis.reshape(1, -1)
    scale = np.linalg.norm(v)
    r = v.copy()
    if basis.shape[0]:
        for _ in range(2):
            r -= basis.T @ (basis.conj() @ r)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= DEFLATION_RTOL * scale:
        return rnorm, None
    return rnorm, r / rnorm


def _phase_reduce(offdiag):
    """Diagonal phases p with conj(p_k) c_k p_{k-1} = |c_k| for complex offdiag c."""
    d = offdiag.shape[0] + 1
    mag = np.abs(offdiag)
    ph = np.ones(d, dtype=complex)
    for k in range(1, d):
        if mag[k - 1] > 0.0:
            ph[k] = ph[k - 1] * (offdiag[k - 1] / mag[k - 1])
        else:
            ph[k] = ph[k - 1]
    return ph, mag


def tridiag_expm_apply(lmat, dt, phi):
    """Apply exp(-i*dt*L) to phi for a Hermitian tridiagonal L.

    L may be a HermTridiag (real diag and offdiag) or a ComplexTridiag
    (zero diag, complex offdiag). A complex offdiagonal is reduced to a
    real one by a diagonal phase similarity, then both cases go through
    the real symmetric tridiagonal eigendecomposition, so the step is
    unitary to rounding.
    """
    phi = np.asarray(phi, dtype=complex)
    if isinstance(lmat, ComplexTridiag):
        ph, mag = _phase_reduce(lmat.offdiag)
        diag = np.zeros(lmat.dim)
        y = ph.conj() * phi
    else:
        ph = None
        diag = lmat.diag
        mag = lmat.offdiag
        y = phi
    if diag.shape[0] != phi.shape[0]:
        raise StructuralError(
            f"matrix dim {diag.shape[0]} != state dim {phi.shape[0]}"
        )
    if diag.shape[0] == 1:
        out = np.exp(-1j * dt * diag[0]) * y
    else:
        try:
            w, u = eigh_tridiagonal(diag, mag)
        except Exception as exc:
            raise NumericalError(
                f"tridiagonal eigensolver failed: {exc}; diag={diag!r} offdiag={mag!r}"
            ) from exc
        out = u @ (np.exp(-1j * dt * w) * (u.T @ y))
    if ph is not None:
        out = ph * out
    return out


def cumulative_integral(f, grid):
    """Trapezoidal cumulative integral along axis 0, value 0 at node 0."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.n_nodes:
        raise StructuralError(f"series has {f.shape[0]} nodes, grid has {grid.n_nodes}")
    return cumulative_trapezoid(f, dx=grid.dt, initial=0.0, axis=0)
