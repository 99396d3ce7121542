"""Propagation of the reduced state on the Krylov chain and spreading bounds.

The chain state phi_k(t) evolves under the tridiagonal generator built
from the Lanczos coefficients. All spreading diagnostics (complexity,
angles, dispersion bound, the angle speed limits, and the nested
integral envelope) are computed from immutable run data.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import models
from .errors import ConfigurationError, StructuralError
from .lanczos_td import DEFLATED
from .numcore import (
    HermTridiag,
    TimeGrid,
    cumulative_integral,
    finite_diff_series,
    tridiag_expm_apply,
)

RATIO_FLOOR = 1e-14


@dataclass(frozen=True)
class ChainState:
    """Chain amplitudes phi[k, j] on the run grid, phi[:, 0] = e_0."""

    phi: np.ndarray
    grid: TimeGrid
    d: int


@dataclass(frozen=True)
class SpreadReport:
    """Spread complexity, escape angles, and chain-operator dispersions.

    theta[n, j] is the angle of the non-escape probability P[n, j] from
    the first n+1 sites; deltaL and deltaK are the standard deviations
    of the chain generator and the site-number operator in the state.
    phi keeps the amplitudes the report was built from so downstream
    inequality checks can use exact bond currents instead of stencils.
    """

    K: np.ndarray
    theta: np.ndarray
    P: np.ndarray
    deltaL: np.ndarray
    deltaK: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class QslMargins:
    """Pointwise margins (bound minus |angle velocity|) for rows 0..d-2.

    eq_ratio is the two-ratio-factor bound, eq_sin and eq_linear the
    sin-theta and linear relaxations of it.
    """

    eq_ratio: np.ndarray
    eq_sin: np.ndarray
    eq_linear: np.ndarray


def propagate_chain(kd):
    """Step the chain state node to node with the midpoint exponential.

    The generator over [t_j, t_{j+1}] is the tridiagonal matrix with
    coefficients interpolated linearly to the interval midpoint. Each
    step is renormalized so the norm stays exactly 1.
    """
    n = kd.grid.n_nodes
    d = kd.d
    dt = kd.grid.dt
    phi = np.zeros((d, n), dtype=complex)
    cur = np.zeros(d, dtype=complex)
    cur[0] = 1.0
    phi[:, 0] = cur
    empty = np.zeros(0)
    for j in range(n - 1):
        amid = 0.5 * (kd.a[:, j] + kd.a[:, j + 1])
        bmid = 0.5 * (kd.b[:, j] + kd.b[:, j + 1]) if d > 1 else empty
        cur = tridiag_expm_apply(HermTridiag(amid, bmid), dt, cur)
        cur /= np.linalg.norm(cur)
        phi[:, j + 1] = cur
    return ChainState(phi=phi, grid=kd.grid, d=d)


def spread_report(cs, kd):
    """Complexity, angles, and dispersions from a propagated chain state."""
    if cs.d != kd.d:
        raise StructuralError(f"state depth {cs.d} != run depth {kd.d}")
    d, n = cs.phi.shape
    w2 = np.abs(cs.phi) ** 2
    sites = np.arange(d, dtype=float)
    comp = sites @ w2
    total = w2.sum(axis=0)
    # Normalizing by the total makes P[d-1] exactly 1, so the deepest
    # angle is exactly 0 and the ordering survives rounding.
    pmat = np.cumsum(w2, axis=0) / total[None, :]
    np.clip(pmat, 0.0, 1.0, out=pmat)
    theta = np.arccos(np.sqrt(pmat))
    lphi = kd.a * cs.phi
    if d > 1:
        lphi[1:] += kd.b * cs.phi[:-1]
        lphi[:-1] += kd.b * cs.phi[1:]
    el = np.einsum("kj,kj->j", cs.phi.conj(), lphi).real
    el2 = np.einsum("kj,kj->j", lphi.conj(), lphi).real
    dl = np.sqrt(np.clip(el2 - el**2, 0.0, None))
    ek2 = (sites**2) @ w2
    dk = np.sqrt(np.clip(ek2 - comp**2, 0.0, None))
    return SpreadReport(K=comp, theta=theta, P=pmat, deltaL=dl, deltaK=dk,
                        phi=cs.phi)


def check_dispersion_bound(sr, grid):
    """Margins 2 deltaL deltaK - |dK/dt| per node."""
    dk = finite_diff_series(sr.K, grid)
    return 2.0 * sr.deltaL * sr.deltaK - np.abs(dk)


def check_qsl(sr, kd):
    """Margins of the three angle speed limits for n = 0 .. d-2.

    The ratio bound is b_{n+1} sqrt(1 - sin^2 T_{n+1} / sin^2 T_n)
    sqrt(1 - cos^2 T_{n-1} / cos^2 T_n) with cos^2 T_{-1} = 0 at n = 0;
    the relaxations are b_{n+1} sin T_{n-1} and b_{n+1} T_{n-1}, with
    T_{-1} = pi/2 at n = 0. Ratios that degenerate to 0/0 at fully
    localized nodes are evaluated as their limit value 1.

    The trigonometric factors are evaluated from probability sums
    (sin^2 T_n - sin^2 T_{n+1} is exactly the site weight |phi_{n+1}|^2
    and so on), which avoids the catastrophic cancellation of the
    arccos round trip, and the angle velocity uses the exact bond
    current, |dT_n/dt| sin T_n cos T_n = b_{n+1}
    |Im(conj(phi_n) phi_{n+1})|, instead of a stencil. The margins
    therefore hold to rounding at every node, not just up to
    discretization error.
    """
    d = kd.d
    n = kd.grid.n_nodes
    if d < 2:
        empty = np.zeros((0, n))
        return QslMargins(eq_ratio=empty, eq_sin=empty, eq_linear=empty)
    if sr.phi.shape != (d, n):
        raise StructuralError("report amplitudes inconsistent with run data")
    w2 = np.abs(sr.phi) ** 2
    total = w2.sum(axis=0)
    w2 /= total[None, :]
    cum = np.cumsum(w2, axis=0)
    tails = np.flip(np.cumsum(np.flip(w2, axis=0), axis=0), axis=0)
    eq_ratio = np.empty((d - 1, n))
    eq_sin = np.empty((d - 1, n))
    eq_linear = np.empty((d - 1, n))
    cur = np.abs(np.imag(sr.phi[:-1].conj() * sr.phi[1:])) / total[None, :]
    for i in range(d - 1):
        bb = kd.b[i]
        tail = tails[i + 1]
        # Degenerate ratios (both members below the floor) take the
        # limit value of the factor, which is 1; elsewhere 1 - ratio
        # is the site weight over the cumulative sum, computed as such
        # to avoid cancellation.
        f1 = np.ones(n)
        ok = tail >= RATIO_FLOOR
        f1[ok] = np.sqrt(np.clip(w2[i + 1][ok] / tail[ok], 0.0, 1.0))
        if i == 0:
            f2 = np.ones(n)
            sin_prev = np.ones(n)
        else:
            f2 = np.ones(n)
            ok2 = cum[i] >= RATIO_FLOOR
            f2[ok2] = np.sqrt(np.clip(w2[i][ok2] / cum[i][ok2], 0.0, 1.0))
            sin_prev = np.sqrt(np.clip(tails[i], 0.0, 1.0))
        geo = cum[i] * tail
        lhs = np.zeros(n)
        big = geo >= RATIO_FLOOR**2
        lhs[big] = bb[big] * cur[i][big] / np.sqrt(geo[big])
        eq_ratio[i] = bb * f1 * f2 - lhs
        eq_sin[i] = bb * sin_prev - lhs
        eq_linear[i] = bb * np.arcsin(sin_prev) - lhs
    return QslMargins(eq_ratio=eq_ratio, eq_sin=eq_sin, eq_linear=eq_linear)


def lr_envelope(kd, theta_th):
    """Nested-integral envelopes bounding each angle, and their crossings.

    envelope[n] is the (n+1)-fold nested integral of b_1 .. b_{n+1}
    bounding theta[n]. Crossings report the first node where the
    envelope reaches theta_th, with a linearly interpolated time, or
    None when it never does.
    """
    if theta_th <= 0.0:
        raise ConfigurationError(f"theta_th must be positive, got {theta_th}")
    n = kd.grid.n_nodes
    rows = kd.d - 1
    env = np.empty((rows, n))
    inner = np.ones(n)
    for i in range(rows):
        inner = cumulative_integral(kd.b[i] * inner, kd.grid)
        env[i] = inner
    times = kd.grid.times
    crossings = []
    for i in range(rows):
        hits = np.flatnonzero(env[i] >= theta_th)
        if hits.size == 0:
            crossings.append(None)
            continue
        j = int(hits[0])
        if j == 0:
            crossings.append((0, float(times[0])))
            continue
        lo, hi = env[i, j - 1], env[i, j]
        frac = (theta_th - lo) / (hi - lo)
        crossings.append((j, float(times[j - 1] + frac * kd.grid.dt)))
    return {"envelope": env, "crossing_times": crossings}


def direct_evolution(spec, grid):
    """Midpoint-exponential integration in the full Hilbert space."""
    n = grid.n_nodes
    dt = grid.dt
    psi = np.empty((n, spec.dim), dtype=complex)
    cur = np.asarray(spec.psi0, dtype=complex).copy()
    cur /= np.linalg.norm(cur)
    psi[0] = cur
    for j in range(n - 1):
        h = models.hamiltonian_at(spec, grid.times[j] + 0.5 * dt)
        w, u = np.linalg.eigh(h)
        cur = u @ (np.exp(-1j * dt * w) * (u.conj().T @ cur))
        cur /= np.linalg.norm(cur)
        psi[j + 1] = cur
    return psi


def reconstruct_and_compare(kd, cs, spec):
    """Max deviation between the basis-reconstructed and direct states.

    Rebuilds psi(t_j) = sum_k K_k(t_j) phi_k(t_j) and compares against
    direct integration with the same midpoint-exponential stepper.
    """
    if kd.basis is None:
        raise StructuralError("run was stored without its basis")
    if kd.halt_reason != DEFLATED and kd.d < kd.basis.shape[2]:
        warnings.warn(
            "Krylov space was capped before deflation; reconstruction "
            "may be missing weight",
            stacklevel=2,
        )
    rebuilt = np.einsum("kjd,kj->jd", kd.basis, cs.phi)
    direct = direct_evolution(spec, kd.grid)
    return float(np.linalg.norm(rebuilt - direct, axis=1).max())
