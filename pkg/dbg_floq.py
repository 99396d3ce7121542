import sys, time, warnings
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models, floquet, chain
from krylovtd.numcore import TimeGrid

t0 = time.time()

# 1. h = 0 trivial
spec0 = models.lmg(10, 1.0, 0.0, 0.1)
d0 = floquet.sambe_lanczos(spec0, k_max=5)
print("h=0: d_eff", d0.d_effective, "b", d0.b, "a0", d0.a[0])

# 2. N=100 closed forms
spec100 = models.lmg(100, 1.0, 2.0, 0.1)
d100 = floquet.sambe_lanczos(spec100, k_max=3)
print("N=100: a0", d100.a[0], "want -50; b1", d100.b[0], "want", 2.0*np.sqrt(50.0),
      "errs", abs(d100.a[0]+50.0), abs(d100.b[0]-2.0*np.sqrt(50.0)))

# 3. N=40 desk run: closed forms, orthonormality, Fourier marginals
spec40 = models.lmg(40, 1.0, 2.0, 0.1)
t1 = time.time()
d40 = floquet.sambe_lanczos(spec40)   # k_max default 160, M 162
t2 = time.time()
print("N=40 default run: d_eff", d40.d_effective, "certified_k", d40.certified_k,
      "warn", d40.truncation_warning is not None, "time %.2fs" % (t2 - t1))
print("  a0 err", abs(d40.a[0] + 20.0), "b1 err", abs(d40.b[0] - 2.0*np.sqrt(20.0)))
G = np.stack([b.f.ravel() for b in d40.bases])
gram = G.conj() @ G.T
print("  orthonormality err", np.abs(gram - np.eye(d40.d_effective)).max())
# Fourier concentration: outside |m|<=3 below 10% for k < 20, spreading after
M = d40.m_max
outside = []
for k in range(d40.d_effective):
    fm = floquet.populations(d40, k)["fourier"]
    out = 1.0 - fm[M-3:M+4].sum()
    outside.append(out)
outside = np.array(outside)
print("  outside |m|<=3: k<20 max %.4f" % outside[:20].max(),
      "k in [25,40) min %.4f" % outside[25:40].min(),
      "k=30 %.4f" % outside[30])
msums = [abs(floquet.populations(d40, k)["hilbert"].sum() - 1) for k in (0, 5, 19)]
print("  marginal sums err", max(msums))

# 4. Omega halving, k < N/2 coeffs < 1%
spec40b = models.lmg(40, 1.0, 2.0, 0.05)
d40b = floquet.sambe_lanczos(spec40b)
ks = 20
ra = np.abs(d40.a[:ks] - d40b.a[:ks]) / np.maximum(np.abs(d40b.a[:ks]), 1e-30)
rb = np.abs(d40.b[:ks-1] - d40b.b[:ks-1]) / np.maximum(np.abs(d40b.b[:ks-1]), 1e-30)
print("omega halving: max rel da %.5f db %.5f" % (ra.max(), rb.max()))

# 5. M doubling < 1e-8 in certified range (smaller run for speed)
s20 = models.lmg(20, 1.0, 2.0, 0.1)
dA = floquet.sambe_lanczos(s20, k_max=30, M=32)
dB = floquet.sambe_lanczos(s20, k_max=30, M=64)
kc = min(dA.certified_k, dB.certified_k, dA.d_effective, dB.d_effective)
da = np.abs(dA.a[:kc] - dB.a[:kc]).max()
db = np.abs(dA.b[:kc-1] - dB.b[:kc-1]).max()
print("M doubling: certified", kc, "max |da|", da, "|db|", db)

# 6. sin vs cos a_k within 1e-6 certified range
s20c = models.lmg(20, 1.0, 2.0, 0.1, drive="cos")
dC = floquet.sambe_lanczos(s20c, k_max=30, M=32)
kc2 = min(dA.certified_k, dC.certified_k)
print("sin vs cos: certified", kc2, "max |da|", np.abs(dA.a[:kc2] - dC.a[:kc2]).max(),
      "max |db|", np.abs(dA.b[:kc2-1] - dC.b[:kc2-1]).max())

# 7. m-reflection: seed output symmetric under flip+conj; omega=0 operator symmetric
s6 = models.lmg(6, 1.0, 1.3, 0.7)
v = floquet.SambeVector(np.zeros((7, 11), dtype=complex)); v.f[0, 5] = 1.0
out = floquet.sambe_apply(s6, v)
sym = np.abs(np.conj(out.f[:, ::-1]) - out.f).max()
print("m-reflection seed:", sym)
s6z = models.lmg(6, 1.0, 1.3, 0.0)
rng = np.random.default_rng(7)
raw = rng.standard_normal((7, 11)) + 1j * rng.standard_normal((7, 11))
fsym = raw + np.conj(raw[:, ::-1])
o2 = floquet.sambe_apply(s6z, floquet.SambeVector(fsym))
print("m-reflection omega=0 random symmetric:", np.abs(np.conj(o2.f[:, ::-1]) - o2.f).max())

# 8. reconstruction N=10 M=12 one period vs direct integration
for (h, om) in [(0.5, 2.0), (1.0, 4.0), (2.0, 6.0)]:
    s10 = models.lmg(10, 1.0, h, om)
    T = 2 * np.pi / om
    b1 = h * np.sqrt(5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dr = floquet.sambe_lanczos(s10, k_max=40, M=12)
    grid = TimeGrid(0.0, T, 2000)
    psi_dir = chain.direct_evolution(s10, grid)
    devs = []
    for frac in (0.25, 0.5, 0.75, 1.0):
        tt = frac * T
        jj = int(round(frac * 2000))
        ph = floquet.chain_phases(dr, tt)
        rec = floquet.floquet_reconstruct(dr, ph, tt)
        devs.append(np.abs(rec - psi_dir[jj]).max())
    ph0 = floquet.chain_phases(dr, 0.0)
    rec0 = floquet.floquet_reconstruct(dr, ph0, 0.0)
    print("recon h=%.1f om=%.1f 2b1T=%.1f: cert_k %d d_eff %d max dev %.2e t0 dev %.2e norm err %.2e"
          % (h, om, 2*b1*T, dr.certified_k, dr.d_effective, max(devs),
             np.abs(rec0 - s10.psi0).max(), abs(np.linalg.norm(rec) - 1)))

# 9. static reference sanity
sa, sb = floquet.static_reference(spec40, 25)
print("static ref: a0", sa[0], "b1", sb[0], "rows", sa.size)
print("  vs omega=0.05 run a rel dev k<20:",
      np.abs((d40b.a[:20] - sa[:20]) / np.maximum(np.abs(sa[:20]), 1e-30)).max())

print("total %.2fs" % (time.time() - t0))
