import sys, time
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models
from krylovtd.numcore import TimeGrid, finite_diff_series
from krylovtd import lanczos_td as ltd

# --- spin frame checks on a protocol with varying theta AND phi ---
spec = models.single_spin(
    s=2.0, h=models.Drive.constant(1.3),
    theta=models.Drive.sinusoidal(0.7, 0.9, phase=0.3, offset=1.1),
    phi=models.Drive.sinusoidal(0.4, 0.5, phase=0.1, offset=0.2),
    initial_basis="instantaneous",
)
grid = TimeGrid(0.0, 3.0, 2000)
fr = models.instantaneous_frame(spec, grid)
print("spin analytic frame present:", fr.theta is not None)

# orthonormality
dev_orth = 0.0
dev_eig = 0.0
for j in range(0, grid.n_nodes, 97):
    v = fr.vectors[j]
    dev_orth = max(dev_orth, np.max(np.abs(v.conj().T @ v - np.eye(spec.dim))))
    h = models.hamiltonian_at(spec, grid.times[j])
    dev_eig = max(dev_eig, np.max(np.abs(h @ v - v * fr.energies[j][None, :])))
print("orthonormality dev:", dev_orth)
print("eigenvector residual:", dev_eig)

# connection vs FD of the frame
dv = finite_diff_series(fr.vectors, grid)
th_fd = np.einsum("jba,jbc->jac", fr.vectors.conj(), dv)
th = models.frame_connection(spec, fr)
interior = slice(5, grid.n_nodes - 5)
print("theta vs FD (interior max):", np.max(np.abs(th[interior] - th_fd[interior])))
print("theta anti-herm dev:", np.max(np.abs(th + th.conj().transpose(0, 2, 1))))

# eigh cross-check at a few nodes (column overlap moduli)
for j in (150, 900):
    w, v = np.linalg.eigh(models.hamiltonian_at(spec, grid.times[j]))
    ov = np.abs(v.conj().T @ fr.vectors[j])
    print(f"node {j}: eigh overlap moduli diag:", np.round(np.diag(ov), 12), "evals match:", np.max(np.abs(w - fr.energies[j])))

# --- translate frame ---
spec2 = models.oscillator_translate(
    omega=2.0, x0=models.Drive.sinusoidal(0.5, 1.1), mass=1.0, n_max=32,
    initial_basis="instantaneous",
)
fr2 = models.instantaneous_frame(spec2, grid)
v = fr2.vectors[700]
print("translate orth dev:", np.max(np.abs(v.conj().T @ v - np.eye(spec2.dim))))
h = models.hamiltonian_at(spec2, grid.times[700])
res = h @ v[:, :8] - v[:, :8] * fr2.energies[700][None, :8]
print("translate eig residual (low 8):", np.max(np.abs(res)))
dv2 = finite_diff_series(fr2.vectors, grid)
th2fd = np.einsum("jba,jbc->jac", fr2.vectors.conj(), dv2)
th2 = models.frame_connection(spec2, fr2)
print("translate theta vs FD (interior, low block):",
      np.max(np.abs((th2 - th2fd)[interior][:, :8, :8])))

# --- dilate frame ---
spec3 = models.oscillator_dilate(
    omega=models.Drive.sinusoidal(0.3, 0.8, offset=1.5), mass=1.0, n_max=32,
    initial_basis="instantaneous",
)
fr3 = models.instantaneous_frame(spec3, grid)
v = fr3.vectors[700]
print("dilate orth dev:", np.max(np.abs(v.conj().T @ v - np.eye(spec3.dim))))
h = models.hamiltonian_at(spec3, grid.times[700])
res = h @ v[:, :8] - v[:, :8] * fr3.energies[700][None, :8]
print("dilate eig residual (low 8):", np.max(np.abs(res)))
dv3 = finite_diff_series(fr3.vectors, grid)
th3fd = np.einsum("jba,jbc->jac", fr3.vectors.conj(), dv3)
th3 = models.frame_connection(spec3, fr3)
print("dilate theta vs FD (interior, low block):",
      np.max(np.abs((th3 - th3fd)[interior][:, :8, :8])))
