import sys, time, warnings
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models, floquet, chain
from krylovtd.numcore import TimeGrid

for (h, om) in [(0.2, 4.0), (0.3, 4.0), (0.5, 6.0), (0.2, 2.0), (0.4, 4.0), (0.5, 4.0)]:
    spec = models.lmg(10, 1.0, h, om)
    T = 2 * np.pi / om
    t0 = time.time()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dr = floquet.sambe_lanczos(spec, k_max=40, M=12)
    grid = TimeGrid(0.0, T, 4000)
    psi_dir = chain.direct_evolution(spec, grid)
    devs, ks = [], []
    for frac in (0.25, 0.5, 0.75, 1.0):
        tt = frac * T
        jj = int(round(frac * 4000))
        ph = floquet.chain_phases(dr, tt)
        rec = floquet.floquet_reconstruct(dr, ph, tt)
        devs.append(np.abs(rec - psi_dir[jj]).max())
        ks.append((np.arange(40) * np.abs(ph) ** 2).sum())
    el = time.time() - t0
    print("h=%.1f om=%.1f cert=%2d: max dev %.2e  K(T/2)=%.3f K(T)=%.3f  %.2fs"
          % (h, om, dr.certified_k, max(devs), ks[1], ks[3], el))
