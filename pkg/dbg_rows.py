import sys
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models
from krylovtd.numcore import TimeGrid, finite_diff_series
from krylovtd import lanczos_td as ltd

S, TF, H = 10.0, 10.0, 1.0
n = 1024
spec = models.single_spin(
    s=S, h=models.Drive.constant(H),
    theta=models.Drive.pi_sweep(TF), phi=models.Drive.constant(0.0),
    initial_basis="instantaneous",
)
grid = TimeGrid(0.0, TF, n)
orc = models.oracle_lanczos(spec)
ts = grid.times

# run sweeps manually to trace deltas
row0, frame = models.initial_basis_row(spec, grid)
theta = models.frame_connection(spec, frame)

def apply_gen(block):
    out = frame.energies * block
    out += np.einsum("jab,jb->ja", -1j * theta, block)
    return out

g0 = np.zeros((grid.n_nodes, spec.dim), dtype=complex)
g0[:, frame.branch_index(spec.psi0)] = 1.0

prev = None
ab_prev = None
for p in range(4):
    rows, a_rows, b_rows, d, halt = ltd._chain_sweep(apply_gen, g0, prev, spec.dim, grid, 1e-6)
    msg = f"sweep {p}: d={d} halt={halt}"
    if ab_prev is not None:
        dc = min(d, ab_prev[2])
        delta = np.abs(a_rows[:dc] - ab_prev[0][:dc]).max()
        if dc > 1:
            delta = max(delta, np.abs(b_rows[:dc-1] - ab_prev[1][:dc-1]).max())
        msg += f" delta={delta:.3e}"
    # row-resolved error vs oracle (interior)
    scale = 0.5 * H * np.sqrt(S * (S + 1))
    errs = []
    for k in range(min(d, 21)):
        m = ltd.row_margin(k, n)
        sl = slice(m, grid.n_nodes - m)
        e = np.max(np.abs(a_rows[k][sl] - orc.a(k, ts)[sl]))
        errs.append(e)
    print(msg)
    print("  a errs:", " ".join(f"{e:.1e}" for e in errs))
    prev = rows
    ab_prev = (a_rows, b_rows, d)
