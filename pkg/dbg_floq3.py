import sys, warnings
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models, floquet, chain
from krylovtd.numcore import TimeGrid

def recon_dev(spec, kmax, M, sign=-1, nkeep=None):
    om = spec.params["omega"]
    T = 2 * np.pi / om
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dr = floquet.sambe_lanczos(spec, k_max=kmax, M=M)
    grid = TimeGrid(0.0, T, 4000)
    psi_dir = chain.direct_evolution(spec, grid)
    devs = []
    for frac in (0.25, 0.5, 0.75, 1.0):
        tt = frac * T
        jj = int(round(frac * 4000))
        ph = floquet.chain_phases(dr, tt)
        m = np.arange(-dr.m_max, dr.m_max + 1)
        em = np.exp(sign * 1j * m * om * tt)
        stack = np.stack([bv.f for bv in dr.bases])
        rec = (stack @ em).T @ ph
        devs.append(np.abs(rec - psi_dir[jj]).max())
    return max(devs), dr

# definitive small case: N=2, weak drive, ample rows
s2 = models.lmg(2, 1.0, 0.3, 2.0)
for sign, name in ((-1, "e^-imwt"), (+1, "e^+imwt")):
    dev, dr = recon_dev(s2, 60, 62, sign=sign)
    print("N=2 h=0.3: %s dev %.3e (cert %d, d_eff %d)" % (name, dev, dr.certified_k, dr.d_effective))

# chain weight profile: where does the wavepacket live after one period?
for (n, h, om) in [(10, 0.5, 2.0), (10, 0.3, 2.0), (10, 1.0, 2.0), (10, 2.0, 6.0), (10, 0.5, 1.0)]:
    spec = models.lmg(n, 1.0, h, om)
    T = 2 * np.pi / om
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dr = floquet.sambe_lanczos(spec, k_max=120, M=122)
    ph = floquet.chain_phases(dr, T)
    w = np.abs(ph) ** 2
    beyond12 = w[13:].sum()
    beyond40 = w[41:].sum() if w.size > 41 else 0.0
    print("N=%d h=%.1f om=%.1f: b[:8]=%s  P(row>12)=%.2e P(row>40)=%.2e" %
          (n, h, om, np.round(dr.b[:8], 2), beyond12, beyond40))
