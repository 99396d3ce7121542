"""Built-in verification suite with pinned tolerances.

Each criterion function rebuilds its scenario from scratch, measures the
quantities it pins, and returns one result row per clause.  The fast
suite covers the closed-form oracle comparisons and the inequality
catalog on a coarser grid; the full suite runs everything at desk
scales.  Runtime budgets are part of the contract and are reported as
their own clause.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import algebra, arnoldi, chain, floquet, models
from .lanczos_td import run_lanczos_td
from .models import Drive, FIXED, INSTANTANEOUS
from .numcore import TimeGrid

__all__ = [
    "CriterionResult",
    "CriterionReport",
    "CRITERION_NAMES",
    "run_criterion",
    "run_suite",
    "format_report",
]


@dataclass(frozen=True)
class CriterionResult:
    """One clause of a criterion: what was measured and whether it passed."""

    clause: str
    passed: bool
    measured: str


@dataclass(frozen=True)
class CriterionReport:
    """All clause results of one criterion plus its wall-clock time."""

    criterion: int
    name: str
    results: tuple
    elapsed: float
    budget: float

    @property
    def passed(self):
        return all(r.passed for r in self.results) and self.elapsed <= self.budget


CRITERION_NAMES = {
    1: "spin chain coefficients against closed forms",
    2: "oscillator chain coefficients against closed forms",
    3: "spread complexity against the constant-sweep closed form",
    4: "inequality suite over the model catalog",
    5: "state reconstruction from the moving basis",
    6: "discrete transfer unitarity and method equivalence",
    7: "quench complexity growth and suppression",
    8: "driven-model extended chain checks",
    9: "chain operator algebra, Heisenberg flow, and speed limit",
}


def _row(clause, value, bound, kind="le"):
    """Result row comparing a measured value against a pinned bound."""
    if kind == "le":
        ok = value <= bound
        rel = "<="
    else:
        ok = value >= bound
        rel = ">="
    return CriterionResult(clause, bool(ok),
                           f"measured {value:.6g} {rel} {bound:.6g}")


def _spin_b_closed(s, h, t_f, times, basis):
    """Closed-form b_k(t) for the pi-sweep spin model, rows k = 1..d-1."""
    d = int(round(2 * s)) + 1
    ck = np.sqrt(np.arange(1.0, d) * (d - np.arange(1.0, d)))
    if basis == FIXED:
        prof = 0.5 * h * np.sin(np.pi * times / t_f)
    else:
        prof = np.full_like(times, 0.5 * np.pi / t_f)
    return ck[:, None] * prof[None, :]


def _interior_rel_err(num, ref):
    sl = (slice(None), slice(1, -1))
    return float(np.max(np.abs(num[sl] - ref[sl]) / np.abs(ref[sl])))


def criterion_1(n_steps=4096):
    """Swept spin model, both bases, against the closed-form couplings.

    The packaged spin runs use closed-form rotation frames, so the
    coefficient match holds to rounding at any resolution; the
    second-order convergence clause is therefore measured on the
    chain-propagated complexity of the same sweep, the one genuinely
    discretized stage, against a reference on an 8x finer grid.
    """
    s, h, t_f = 10.0, 1.0, 2.0
    rows = []
    for basis in (FIXED, INSTANTANEOUS):
        grid = TimeGrid(0.0, t_f, n_steps)
        spec = models.single_spin(s, h, Drive.pi_sweep(t_f), initial_basis=basis)
        kd = run_lanczos_td(spec, grid)
        ref = _spin_b_closed(s, h, t_f, grid.times, basis)
        rows.append(_row(f"{basis} basis max relative error",
                         _interior_rel_err(kd.b, ref), 1e-5))

    spec = models.single_spin(s, h, Drive.pi_sweep(t_f))

    def sweep_complexity(n):
        grid = TimeGrid(0.0, t_f, n)
        kd = run_lanczos_td(spec, grid)
        return chain.spread_report(chain.propagate_chain(kd), kd).K

    k_ref = sweep_complexity(4096)
    errs = [float(np.max(np.abs(sweep_complexity(n) - k_ref[:: 4096 // n])))
            for n in (256, 512)]
    ratio = errs[0] / errs[1]
    rows.append(CriterionResult(
        "second-order convergence (halving dt divides the error by ~4)",
        3.0 <= ratio <= 5.0, f"error ratio {ratio:.3f} in [3, 5]"))
    return rows


def criterion_2(n_steps=2000):
    """Driven oscillators against the closed-form couplings, k <= n_max/4."""
    n_max = 64
    k_hi = n_max // 4
    rows = []

    grid = TimeGrid(0.0, 1.0, n_steps)
    spec = models.oscillator_translate(1.0, Drive.sinusoidal(0.5, 1.3),
                                       n_max=n_max, initial_basis=INSTANTANEOUS)
    kd = run_lanczos_td(spec, grid, k_max=k_hi + 1)
    xdot = 0.5 * 1.3 * np.cos(1.3 * grid.times)
    ck = np.sqrt(np.arange(1.0, k_hi + 1))
    ref = ck[:, None] * (np.sqrt(0.5) * np.abs(xdot))[None, :]
    rows.append(_row("translated oscillator max relative error",
                     _interior_rel_err(kd.b[:k_hi], ref), 1e-5))

    spec = models.oscillator_dilate(Drive.linear(0.3, 1.0), n_max=n_max,
                                    initial_basis=INSTANTANEOUS)
    kd = run_lanczos_td(spec, grid, k_max=k_hi + 1)
    k = np.arange(1.0, k_hi + 1)
    ck = np.sqrt(2.0 * k * (2.0 * k - 1.0))
    ref = ck[:, None] * (0.3 / (4.0 * (1.0 + 0.3 * grid.times)))[None, :]
    rows.append(_row("frequency-ramped oscillator max relative error",
                     _interior_rel_err(kd.b[:k_hi], ref), 1e-5))
    return rows


def criterion_3(n_steps=3000):
    """Chain-propagated K(t) for the constant-rate sweep at constant field."""
    s, h, omega = 10.0, 1.0, 1.0
    t_end = 2.0 * np.pi / np.hypot(h, omega)
    grid = TimeGrid(0.0, t_end, n_steps)
    spec = models.single_spin(s, h, Drive.linear(omega), initial_basis=INSTANTANEOUS)
    kd = run_lanczos_td(spec, grid)
    sr = chain.spread_report(chain.propagate_chain(kd), kd)
    ref = models.spin_heisenberg_complexity(s, h, omega, grid.times)
    err = float(np.max(np.abs(sr.K - ref)) / np.max(ref))
    return [_row("max |K - closed form| over one oscillation (relative to peak)",
                 err, 1e-4)]


def inequality_catalog(n_steps):
    """Labelled chain runs the inequality suite is checked on."""
    g2 = TimeGrid(0.0, 2.0, n_steps)
    g1 = TimeGrid(0.0, 1.0, n_steps)

    def a0_h(t):
        d = 6
        m = np.zeros((d, d), dtype=complex)
        off = (1.0 + 0.4 * np.sin(1.1 * t)) * np.sqrt(np.arange(1.0, d))
        m[np.arange(d - 1), np.arange(1, d)] = off
        m[np.arange(1, d), np.arange(d - 1)] = off
        return m

    runs = [
        ("spin fixed sweep",
         models.single_spin(10, 1.0, Drive.pi_sweep(2.0)), g2, None),
        ("spin instantaneous sweep",
         models.single_spin(10, 1.0, Drive.pi_sweep(2.0),
                            initial_basis=INSTANTANEOUS), g2, None),
        ("spin constant-rate sweep",
         models.single_spin(10, 1.0, Drive.linear(1.0),
                            initial_basis=INSTANTANEOUS), g2, None),
        ("spin with azimuthal drive",
         models.single_spin(4, 1.0, Drive.pi_sweep(2.0), phi=Drive.linear(0.7),
                            initial_basis=INSTANTANEOUS), g2, None),
        ("qubit sweep",
         models.single_spin(0.5, 1.0, Drive.pi_sweep(2.0),
                            initial_basis=INSTANTANEOUS), g2, None),
        ("translated oscillator",
         models.oscillator_translate(1.0, Drive.sinusoidal(0.5, 1.3), n_max=48,
                                     initial_basis=INSTANTANEOUS), g1, 17),
        ("frequency-ramped oscillator",
         models.oscillator_dilate(Drive.linear(0.3, 1.0), n_max=48,
                                  initial_basis=INSTANTANEOUS), g1, 13),
        ("hopping-only chain",
         models.custom_model(a0_h, 6), g1, None),
    ]
    return runs


def criterion_4(n_steps=2000):
    """Angle ordering, dispersion bound, speed limits, and envelopes."""
    rows = []
    order_worst = -np.inf
    margins = {"dispersion": np.inf, "two-factor bound": np.inf,
               "sine relaxation": np.inf, "linear relaxation": np.inf,
               "nested-integral envelope": np.inf}
    sat = None
    for label, spec, grid, cap in inequality_catalog(n_steps):
        kd = run_lanczos_td(spec, grid, k_max=cap)
        cs = chain.propagate_chain(kd)
        sr = chain.spread_report(cs, kd)
        bmax = float(kd.b.max()) if kd.b.size else 1.0
        inner = slice(1, -1)
        order_worst = max(order_worst,
                          float((sr.theta[1:, inner] - sr.theta[:-1, inner]).max()))
        disp = chain.check_dispersion_bound(sr, grid)[inner]
        qm = chain.check_qsl(sr, kd)
        env = chain.lr_envelope(kd, theta_th=0.1)["envelope"]
        d = kd.d
        checks = {
            "dispersion": float(disp.min()) / bmax,
            "two-factor bound": float(qm.eq_ratio[:, inner].min()) / bmax,
            "sine relaxation": float(qm.eq_sin[:, inner].min()) / bmax,
            "linear relaxation": float(qm.eq_linear[:, inner].min()) / bmax,
            "nested-integral envelope":
                float((env[:, inner] - sr.theta[: d - 1, inner]).min()) / bmax,
        }
        for key, val in checks.items():
            margins[key] = min(margins[key], val)
        if label == "hopping-only chain":
            sat = float(np.abs(qm.eq_ratio[0, inner]).max()) / bmax
    rows.append(_row("angle ordering worst violation", order_worst, 0.0))
    for key, val in margins.items():
        rows.append(_row(f"{key} worst margin / max b", val, -1e-6, kind="ge"))
    rows.append(_row("hopping-only chain saturates the two-factor bound at n=0",
                     sat, 1e-10))
    return rows


def criterion_5(n_steps=2000):
    """Reconstruction against direct integration for the sweep family."""
    rows = []
    worst = -np.inf
    for ht_f in (0.5, 1.0, 2.0, 4.0):
        for basis in (FIXED, INSTANTANEOUS):
            grid = TimeGrid(0.0, ht_f, n_steps)
            spec = models.single_spin(10, 1.0, Drive.pi_sweep(ht_f),
                                      initial_basis=basis)
            kd = run_lanczos_td(spec, grid, keep_basis=True)
            cs = chain.propagate_chain(kd)
            dev = chain.reconstruct_and_compare(kd, cs, spec)
            worst = max(worst, dev)
    rows.append(_row("max state deviation over 8 sweep runs", worst, 1e-4))
    return rows


def criterion_6():
    """Transfer-matrix unitarity and iteration vs full orthogonalization."""
    rows = []
    rng = np.random.default_rng(20260815)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 13))
        z = np.sqrt(rng.uniform(0.0, 1.0, d - 1)) * np.exp(
            2j * np.pi * rng.uniform(0.0, 1.0, d - 1))
        u = arnoldi.hessenberg_from_z(z, d)
        worst = max(worst, float(np.abs(u.conj().T @ u - np.eye(d)).max()))
    rows.append(_row("unitarity defect over 1000 random transfer matrices",
                     worst, 1e-12))

    small = [
        ("qubit sweep", models.single_spin(0.5, 1.0, Drive.pi_sweep(2.0)),
         TimeGrid(0.0, 2.0, 200)),
        ("spin-3/2 ramp", models.single_spin(1.5, 1.0, Drive.linear(1.0),
                                             initial_basis=INSTANTANEOUS),
         TimeGrid(0.0, 2.0, 200)),
        ("three-level drive", models.custom_model(_three_level_h, 3),
         TimeGrid(0.0, 2.0, 200)),
        ("four-mode quench", models.ising_free_fermion(4, 2.0, 0.1), None),
    ]
    worst = 0.0
    for _, spec, grid in small:
        model = arnoldi.UnitaryStepModel(spec, grid)
        it = arnoldi.run_discrete_evolution(model, mode="iteration")
        fo = arnoldi.run_discrete_evolution(model, mode="full_orthogonalization")
        worst = max(worst, float(np.abs(it["K"] - fo["K"]).max()))
    rows.append(_row("max complexity gap between methods (dim <= 4)",
                     worst, 1e-8))
    return rows


def _three_level_h(t):
    m = np.array([[1.0, 0.3 + 0.2 * np.sin(t), 0.0],
                  [0.3 + 0.2 * np.sin(t), 0.0, 0.5 * np.cos(0.7 * t)],
                  [0.0, 0.5 * np.cos(0.7 * t), -1.0]], dtype=complex)
    return m


def _log_growth_r2(times, comp, k_final):
    """R^2 of a linear fit to log K on t > 0 and K in [2 K(0), K(t_Q)/2]."""
    k0 = comp[np.flatnonzero(times >= 0.0)[0]]
    mask = (times > 0.0) & (comp >= 2.0 * k0) & (comp <= 0.5 * k_final)
    t = times[mask]
    y = np.log(comp[mask])
    coef = np.polyfit(t, y, 1)
    resid = y - np.polyval(coef, t)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def criterion_7(n_sites=12):
    """Quench complexity: suppression before the ramp, growth after."""
    dt, h = 0.1, 1.0
    rows = []
    finals = []
    r2s = []
    neg_max = None
    for ht_q in (5.0, 15.0, 30.0):
        t_q = ht_q / h
        spec = models.ising_free_fermion(n_sites, t_q, dt, h=h)
        model = arnoldi.UnitaryStepModel(spec)
        out = arnoldi.run_discrete_evolution(model, mode="full_orthogonalization")
        comp = out["K"]
        m = spec.params["m_steps"]
        times = -t_q + dt * np.arange(m + 1)
        finals.append(float(comp[-1]))
        r2s.append(_log_growth_r2(times, comp, comp[-1]))
        if ht_q == 30.0:
            neg_max = float(comp[times < 0.0].max())
    rows.append(_row("max K(t) before the ramp midpoint at h t_Q = 30",
                     neg_max, 1e-2))
    dec = finals[0] > finals[1] > finals[2]
    rows.append(CriterionResult(
        "final complexity strictly decreasing with quench time",
        dec, "K(t_Q) = " + " > ".join(f"{v:.6f}" for v in finals)))
    rows.append(_row("worst R^2 of the exponential-growth fit",
                     min(r2s), 0.9, kind="ge"))
    return rows


def criterion_8(n=40):
    """Extended-chain checks for the driven collective-spin model."""
    j, h, omega = 1.0, 2.0, 0.1
    rows = []
    spec = models.lmg(n, j, h, omega)
    data = floquet.sambe_lanczos(spec)
    rows.append(_row("|a_0 + N J / 2|", abs(data.a[0] + 0.5 * n * j), 1e-10))
    rows.append(_row("|b_1 - h sqrt(N/2)|",
                     abs(data.b[0] - h * np.sqrt(0.5 * n)), 1e-10))

    half = floquet.sambe_lanczos(models.lmg(n, j, h, 0.5 * omega))
    k_lo = n // 2
    scale = max(float(np.abs(data.a[:k_lo]).max()), float(data.b[:k_lo].max()))
    da = float(np.abs(data.a[:k_lo] - half.a[:k_lo]).max()) / scale
    db = float(np.abs(data.b[:k_lo] - half.b[:k_lo]).max()) / scale
    rows.append(_row("coefficient shift under halving the drive (k < N/2)",
                     max(da, db), 1e-2))

    outside = []
    for k in range(min(data.d_effective, n)):
        pop = floquet.populations(data, k)["fourier"]
        m = np.arange(-data.m_max, data.m_max + 1)
        outside.append(float(pop[np.abs(m) > 3].sum()))
    worst_lo = max(outside[:k_lo])
    rows.append(_row("harmonic weight outside |m| <= 3 for k < N/2",
                     worst_lo, 0.10))
    rows.append(_row("harmonic weight outside |m| <= 3 at k = 30 (spreading)",
                     outside[30], 0.5, kind="ge"))

    doubled = floquet.sambe_lanczos(spec, M=2 * data.m_max)
    kc = min(data.certified_k, doubled.certified_k)
    shift = max(float(np.abs(data.a[:kc] - doubled.a[:kc]).max()),
                float(np.abs(data.b[: kc - 1] - doubled.b[: kc - 1]).max()))
    rows.append(_row("coefficient shift within the certified range when "
                     "the harmonic cutoff doubles", shift, 1e-8))
    return rows


def criterion_9():
    """Commutator residuals, Heisenberg flow, and the operator speed limit."""
    rows = []
    s, h, omega = 10.0, 1.0, 1.0
    grid = TimeGrid(0.0, 2.0, 400)

    from .lanczos_td import krylov_data_from_oracle, phase_transform

    fams = {
        "spin": models.single_spin(s, h, Drive.linear(omega),
                                   initial_basis=INSTANTANEOUS),
        "translate": models.oscillator_translate(
            1.0, Drive.sinusoidal(0.5, 1.3), n_max=48,
            initial_basis=INSTANTANEOUS),
        "dilate": models.oscillator_dilate(Drive.linear(0.3, 1.0), n_max=48,
                                           initial_basis=INSTANTANEOUS),
    }
    gfam = {"spin": grid, "translate": TimeGrid(0.0, 1.0, 400),
            "dilate": TimeGrid(0.0, 1.0, 400)}
    kcap = {"spin": None, "translate": 13, "dilate": 13}
    worst_r = 0.0
    alphas = {}
    for name, spec in fams.items():
        td = phase_transform(krylov_data_from_oracle(spec, gfam[name],
                                                     k_max=kcap[name]))
        tri = algebra.build_triple(td, 200)
        res = algebra.check_commutators(tri)
        worst_r = max(worst_r, res["r1"], res["r2"])
        alphas[name] = (tri.closure, float(np.abs(td.tilde_b[0, 200]) ** 2))
    rows.append(_row("worst ladder-commutator residual", worst_r, 1e-12))

    spin_cl = alphas["spin"][0]
    tr_cl, tr_b2 = alphas["translate"]
    di_cl, di_b2 = alphas["dilate"]
    pattern = (
        spin_cl is not None and tr_cl is not None and di_cl is not None
        and abs(spin_cl["alpha"] + omega**2) <= 1e-8
        and abs(spin_cl["gamma"] - s * omega**2) <= 1e-8
        and abs(tr_cl["alpha"]) <= 1e-10
        and abs(tr_cl["gamma"] - 2.0 * tr_b2) <= 1e-8
        and abs(di_cl["alpha"] - 8.0 * di_b2) <= 1e-8
        and abs(di_cl["gamma"] - 2.0 * di_b2) <= 1e-8
    )
    rows.append(CriterionResult(
        "closure coefficients match the three family patterns", pattern,
        "alpha = " + ", ".join(
            f"{k}: {v[0]['alpha']:.3e}" if v[0] else f"{k}: none"
            for k, v in alphas.items())))

    hgrid = TimeGrid(0.0, 2.0 * np.pi / np.hypot(h, omega), 2000)
    flow = algebra.heisenberg_evolve(s, h, omega, hgrid)
    ref = models.spin_heisenberg_complexity(s, h, omega, hgrid.times)
    rows.append(_row("Heisenberg-flow complexity against the closed form",
                     float(np.abs(flow["k_expect"] - ref).max()), 1e-6))

    qgrid = TimeGrid(0.0, np.pi, 1500)
    qsl = algebra.operator_qsl(s, h, omega, qgrid)
    gap = qsl["rhs"] - qsl["lhs"]
    rows.append(_row("numeric speed-limit margin", float(gap.min()), -1e-9,
                     kind="ge"))
    w = np.hypot(h, omega)
    t_chk = qgrid.times[qgrid.times >= 0.1]
    closed_gap = omega * t_chk - np.arccos(
        (h**2 + omega**2 * np.cos(w * t_chk)) / w**2)
    rows.append(_row("closed-form gap strictly positive for h > 0 at t >= 0.1",
                     float(closed_gap.min()), 0.0, kind="ge"))
    eq = algebra.operator_qsl(s, 0.0, omega, qgrid)
    rows.append(_row("bound saturates at h = 0",
                     float(np.abs(eq["rhs"] - eq["lhs"]).max()), 1e-8))
    return rows


_BUDGETS = {1: 10.0, 2: 10.0, 3: 5.0, 4: 30.0, 5: 10.0, 6: 10.0,
            7: 120.0, 8: 120.0, 9: 10.0}

_FAST_STEPS = {1: 1000, 2: 1000, 4: 1000}


def run_criterion(index, fast=False):
    """Run one criterion and wrap its rows with timing and budget."""
    fn = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
          5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
          9: criterion_9}[index]
    start = time.perf_counter()
    if fast and index in _FAST_STEPS:
        results = fn(n_steps=_FAST_STEPS[index])
    else:
        results = fn()
    elapsed = time.perf_counter() - start
    return CriterionReport(criterion=index, name=CRITERION_NAMES[index],
                           results=tuple(results), elapsed=elapsed,
                           budget=_BUDGETS[index])


def run_suite(suite="full"):
    """Run the fast (1, 2, 4) or full (1..9) criterion set."""
    if suite == "fast":
        indices = (1, 2, 4)
    elif suite == "full":
        indices = tuple(range(1, 10))
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return [run_criterion(i, fast=(suite == "fast")) for i in indices]


def format_report(reports):
    """Human-readable pass/fail table with measured margins."""
    lines = []
    for rep in reports:
        tag = "PASS" if rep.passed else "FAIL"
        lines.append(f"criterion {rep.criterion} [{rep.name}] {tag} "
                     f"({rep.elapsed:.2f} s, budget {rep.budget:.0f} s)")
        for r in rep.results:
            sub = "pass" if r.passed else "FAIL"
            lines.append(f"    {r.clause}: {r.measured} [{sub}]")
        if rep.elapsed > rep.budget:
            lines.append(f"    runtime budget exceeded: {rep.elapsed:.2f} s")
    n_fail = sum(not rep.passed for rep in reports)
    lines.append(f"{len(reports) - n_fail} of {len(reports)} criteria passed")
    return "\n".join(lines)
