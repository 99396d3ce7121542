import sys, time
sys.path.insert(0, "src")
import numpy as np
from krylovtd import models, algebra, lanczos_td
from krylovtd.numcore import TimeGrid
from krylovtd.models import Drive, INSTANTANEOUS

t0 = time.time()

# 1. spin S=10 instantaneous: closure alpha = -(thdot^2), gamma = -S*alpha
s, h, om = 10.0, 1.0, 1.0
spec = models.single_spin(s, h, Drive.linear(om), initial_basis=INSTANTANEOUS)
grid = TimeGrid(0.0, 2.0, 400)
kd = lanczos_td.krylov_data_from_oracle(spec, grid)
td = lanczos_td.phase_transform(kd)
for j in (50, 199, 350):
    tri = algebra.build_triple(td, j)
    res = algebra.check_commutators(tri)
    want_a = -om**2
    print("node %3d: closure %s r1 %.2e r2 %.2e r3 %.2e  (alpha err %.2e gamma err %.2e)"
          % (j, tri.closure is not None, res["r1"], res["r2"], res.get("r3", np.nan),
             abs(tri.closure["alpha"] - want_a), abs(tri.closure["gamma"] + s * want_a)))

# 2. translate family alpha = 0, gamma = 2 b^2
spec_t = models.oscillator_translate(1.0, Drive.pi_sweep(2.0), n_max=32)
kd_t = lanczos_td.krylov_data_from_oracle(spec_t, grid)
td_t = lanczos_td.phase_transform(kd_t)
tri_t = algebra.build_triple(td_t, 120)
bsq = np.abs(td_t.tilde_b[0, 120]) ** 2
print("translate: closure %s alpha %.2e gamma-2b^2 %.2e"
      % (tri_t.closure is not None, tri_t.closure["alpha"], tri_t.closure["gamma"] - 2 * bsq))

# 3. dilate family alpha = 16 b^2 >= 0
spec_d = models.oscillator_dilate(Drive.linear(0.3, 1.0), n_max=24,
                                  initial_basis=INSTANTANEOUS)
kd_d = lanczos_td.krylov_data_from_oracle(spec_d, grid)
td_d = lanczos_td.phase_transform(kd_d)
tri_d = algebra.build_triple(td_d, 120)
bsq_d = np.abs(td_d.tilde_b[0, 120]) ** 2
print("dilate: closure %s alpha-16b^2 %.2e gamma %.3f"
      % (tri_d.closure is not None, tri_d.closure["alpha"] - 16 * bsq_d, tri_d.closure["gamma"]))

# 4. perturbed coefficients: no closure
import dataclasses
tb = td.tilde_b.copy()
tb[3, :] *= 1.1
td_bad = dataclasses.replace(td, tilde_b=tb)
tri_bad = algebra.build_triple(td_bad, 100)
print("perturbed: closure", tri_bad.closure)

# 5. Heisenberg evolve vs closed form and vs direct route
hgrid = TimeGrid(0.0, 2 * np.pi / np.sqrt(2.0), 2000)
out = algebra.heisenberg_evolve(s, h, om, hgrid)
closed = models.spin_heisenberg_complexity(s, h, om, hgrid.times)
print("heisenberg: K err %.2e, current residual %.2e"
      % (np.abs(out["k_expect"] - closed).max(), out["current_residual"]))
direct = algebra.heisenberg_direct(s, h, om, hgrid)
print("  vs direct: K err %.2e op err %.2e"
      % (np.abs(out["k_expect"] - direct["k_expect"]).max(),
         np.abs(out["k_op"] - direct["k_op"]).max()))
out2 = algebra.heisenberg_evolve(s, h, om, TimeGrid(0.0, 2 * np.pi / np.sqrt(2.0), 4000))
print("  residual ratio (dt^2 -> 4):", out["current_residual"] / out2["current_residual"])
out0 = algebra.heisenberg_evolve(s, h, 0.0, hgrid)
print("  omega=0: K max %.2e L J const: %.2e %.2e"
      % (np.abs(out0["k_expect"]).max(),
         np.abs(out0["l_op"] - out0["l_op"][0]).max(),
         np.abs(out0["j_op"] - out0["j_op"][0]).max()))

# 6. operator QSL
qgrid = TimeGrid(0.0, np.pi / om, 1500)
q = algebra.operator_qsl(s, h, om, qgrid)
w2 = h**2 + om**2
closed_lhs = np.arccos(np.clip((h**2 + om**2 * np.cos(np.sqrt(w2) * qgrid.times)) / w2, -1, 1))
print("qsl h=1: lhs err vs closed %.2e; min gap on (0,pi/om] %.3e; rhs-omega*t %.2e"
      % (np.abs(q["lhs"] - closed_lhs).max(),
         (q["rhs"] - q["lhs"])[1:].min(), np.abs(q["rhs"] - om * qgrid.times).max()))
q0 = algebra.operator_qsl(s, 0.0, om, qgrid)
print("qsl h=0: |lhs-rhs| %.2e" % np.abs(q0["lhs"] - q0["rhs"]).max())

# 7. prerequisite check
print("prereq spin:", algebra.closure_prerequisite(td, 100))
tb2 = td.tilde_b.copy(); tb2[2, :] *= np.exp(0.5j)
print("prereq broken:", algebra.closure_prerequisite(dataclasses.replace(td, tilde_b=tb2), 100))

print("total %.2fs" % (time.time() - t0))
