import sys, time
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models
from krylovtd.numcore import TimeGrid
from krylovtd import lanczos_td as ltd

S = 10.0
TF = 10.0
H = 1.0

def run(basis, n):
    spec = models.single_spin(
        s=S, h=models.Drive.constant(H),
        theta=models.Drive.pi_sweep(TF), phi=models.Drive.constant(0.0),
        initial_basis=basis,
    )
    grid = TimeGrid(0.0, TF, n)
    t0 = time.time()
    kd = ltd.run_lanczos_td(spec, grid, keep_basis=False)
    el = time.time() - t0
    orc = models.oracle_lanczos(spec)
    ts = grid.times
    a_or = np.array([orc.a(k, ts) for k in range(kd.d)])
    b_or = np.array([orc.b(k, ts) for k in range(1, kd.d)])
    scale_a = np.max(np.abs(a_or)) if np.max(np.abs(a_or)) > 0 else 1.0
    scale_b = np.max(np.abs(b_or))
    rel_a = rel_b = 0.0
    for k in range(kd.d):
        m = ltd.row_margin(k, n)
        sl = slice(m, grid.n_nodes - m)
        rel_a = max(rel_a, np.max(np.abs(kd.a[k][sl] - a_or[k][sl])) / scale_b)
    for i in range(kd.d - 1):
        m = ltd.row_margin(i + 1, n)
        sl = slice(m, grid.n_nodes - m)
        rel_b = max(rel_b, np.max(np.abs(kd.b[i][sl] - b_or[i][sl])) / scale_b)
    print(f"{basis:14s} n={n:5d} d={kd.d} halt={kd.halt_reason:12s} "
          f"rel_a={rel_a:.3e} rel_b={rel_b:.3e} time={el:.2f}s")
    return rel_a, rel_b, el

for n in (1024, 2048, 4096):
    run("instantaneous", n)
for n in (1024, 4096):
    run("fixed", n)
