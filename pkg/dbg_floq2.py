import sys, warnings
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models, floquet, chain
from krylovtd.numcore import TimeGrid

# A. reconstruction with ample M: should converge to ~0
for (h, om, kmax, M) in [(0.5, 2.0, 40, None), (0.5, 2.0, 60, None), (2.0, 6.0, 40, None)]:
    s10 = models.lmg(10, 1.0, h, om)
    T = 2 * np.pi / om
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dr = floquet.sambe_lanczos(s10, k_max=kmax, M=M)
    grid = TimeGrid(0.0, T, 4000)
    psi_dir = chain.direct_evolution(s10, grid)
    devs = []
    for frac in (0.25, 0.5, 1.0):
        tt = frac * T
        jj = int(round(frac * 4000))
        rec = floquet.floquet_reconstruct(dr, floquet.chain_phases(dr, tt), tt)
        devs.append(np.abs(rec - psi_dir[jj]).max())
    print("h=%.1f om=%.1f kmax=%d M=%s cert=%d: max dev %.2e" %
          (h, om, kmax, dr.m_max, dr.certified_k, max(devs)))

# B. a_k values under omega halving at N=40
spec40 = models.lmg(40, 1.0, 2.0, 0.1)
spec40b = models.lmg(40, 1.0, 2.0, 0.05)
d40 = floquet.sambe_lanczos(spec40)
d40b = floquet.sambe_lanczos(spec40b)
np.set_printoptions(precision=4, suppress=True, linewidth=120)
print("a (om=0.1) k<22:", d40.a[:22])
print("a (om=.05) k<22:", d40b.a[:22])
print("b (om=0.1) k<21:", d40.b[:21])
print("b (om=.05) k<21:", d40b.b[:21])
scale = max(np.abs(d40b.a).max(), d40b.b.max())
print("scale", scale)
print("da/scale max k<20:", (np.abs(d40.a[:20] - d40b.a[:20]) / scale).max())
print("db/scale max k<20:", (np.abs(d40.b[:19] - d40b.b[:19]) / scale).max())

# C. Fourier marginal profile at N=40 h=2
M = d40.m_max
for k in (1, 5, 10, 15, 19, 25, 30):
    fm = floquet.populations(d40, k)["fourier"]
    out3 = 1.0 - fm[M-3:M+4].sum()
    # center of mass and width
    mm = np.arange(-M, M+1)
    width = np.sqrt((fm * mm**2).sum())
    print("k=%2d outside|m|<=3 %.4f width %.2f top5 m %s" %
          (k, out3, width, mm[np.argsort(fm)[-5:]]))
