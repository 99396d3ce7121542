import sys
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models
from krylovtd.numcore import TimeGrid
from krylovtd import lanczos_td as ltd

S, TF, H = 10.0, 10.0, 1.0
n = 256
spec = models.single_spin(
    s=S, h=models.Drive.constant(H),
    theta=models.Drive.pi_sweep(TF), phi=models.Drive.constant(0.0),
    initial_basis="instantaneous",
)
grid = TimeGrid(0.0, TF, n)
orc = models.oracle_lanczos(spec)
frame = models.instantaneous_frame(spec, grid)
theta = models.frame_connection(spec, frame)
gmat = ltd._generator_matrices(spec, grid, frame, theta)

j = n // 2
t = grid.times[j]
g = gmat[j]
print("G hermitian dev:", np.max(np.abs(g - g.conj().T)))
# how tridiagonal is G in the sorted frame?
band = np.abs(g.copy())
for off in (-1, 0, 1):
    idx = np.arange(spec.dim - abs(off))
    band[(idx + max(0, -off), idx + max(0, off))] = 0.0
print("out-of-band max |G|:", band.max())

branch = frame.branch_index(spec.psi0)
print("branch:", branch)
pmat = ltd._seed_unitary(np.eye(spec.dim, dtype=complex)[:, branch])
m = pmat.conj().T @ g @ pmat
a_all, b_all, s = ltd._tridiagonalize_nodes(m[None])
a_or = np.array([orc.a(k, np.array([t]))[0] for k in range(spec.dim)])
b_or = np.array([orc.b(k, np.array([t]))[0] for k in range(1, spec.dim)])
print("a dev:", np.max(np.abs(a_all[:, 0] - a_or)))
print("b dev:", np.max(np.abs(b_all[:, 0] - b_or)))
print("a[:5] num:", a_all[:5, 0])
print("a[:5] orc:", a_or[:5])
print("b[:5] num:", b_all[:5, 0])
print("b[:5] orc:", b_or[:5])
