"""Command line front end: configured experiment runs and validation.

`run <config.json>` executes one experiment described by a JSON config
and writes CSV series plus a JSON manifest; `validate --suite fast|full`
runs the built-in verification suite and reports per-criterion margins.
Reruns with an identical config produce bitwise-identical CSV output.
"""

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, arnoldi, chain, floquet, models, validation
from .errors import ConfigurationError, KrylovError
from .lanczos_td import run_lanczos_td
from .models import Drive, FIXED, INSTANTANEOUS
from .numcore import TimeGrid

EXPERIMENTS = ("fig1_spin", "fig2_ising", "fig3_lmg", "custom")
BASIS_CHOICES = (FIXED, INSTANTANEOUS, "both")


class ConfigError(ConfigurationError):
    """Config problem tagged with the line it came from."""

    def __init__(self, message, line=1):
        super().__init__(message)
        self.line = line


@dataclass
class ExperimentConfig:
    """Validated run description mirrored from the JSON document."""

    experiment: str
    model: dict
    grid: dict
    basis: str
    out_dir: str
    sweep: dict
    theta_th: float = 0.1
    full_scale: bool = False
    threads: int = 1


@dataclass
class RunManifest:
    """Completion marker listing everything the run emitted."""

    config: dict
    version: str
    grid_hash: str
    wall_clock_s: float
    files: list = field(default_factory=list)

    def write(self, out_dir):
        payload = {
            "config": self.config,
            "version": self.version,
            "grid_hash": self.grid_hash,
            "wall_clock_s": self.wall_clock_s,
            "files": self.files,
        }
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")


def _key_line(text, key):
    """1-based line of the first occurrence of a JSON key, for messages."""
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return 1


def _require(cond, text, key, message):
    if not cond:
        raise ConfigError(message, _key_line(text, key))


def parse_config(path, out_override=None, threads=1, full_scale=False):
    """Parse and validate a JSON config file into an ExperimentConfig."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")

    allowed = {"experiment", "model", "grid", "basis", "output_dir", "sweep",
               "theta_th"}
    for key in doc:
        _require(key in allowed, text, key, f"unknown config key {key!r}")

    exp = doc.get("experiment")
    _require(isinstance(exp, str) and exp in EXPERIMENTS, text, "experiment",
             f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}")

    model = doc.get("model", {})
    _require(isinstance(model, dict), text, "model", "model must be an object")
    grid = doc.get("grid", {})
    _require(isinstance(grid, dict), text, "grid", "grid must be an object")

    basis = doc.get("basis", "both")
    _require(basis in BASIS_CHOICES, text, "basis",
             f"basis must be one of {list(BASIS_CHOICES)}, got {basis!r}")

    sweep = doc.get("sweep", {})
    _require(isinstance(sweep, dict), text, "sweep", "sweep must be an object")
    for key, vals in sweep.items():
        _require(isinstance(vals, list), text, key,
                 f"sweep list {key!r} must be an array")
        _require(len(vals) > 0, text, key, f"sweep list {key!r} is empty")
        _require(all(isinstance(v, (int, float)) and not isinstance(v, bool)
                     for v in vals), text, key,
                 f"sweep list {key!r} must contain numbers")

    theta_th = doc.get("theta_th", 0.1)
    _require(isinstance(theta_th, (int, float)) and theta_th > 0.0, text,
             "theta_th", f"theta_th must be a positive number, got {theta_th!r}")

    out_dir = out_override or doc.get("output_dir", "out")
    _require(isinstance(out_dir, str) and out_dir, text, "output_dir",
             "output_dir must be a non-empty string")

    return ExperimentConfig(experiment=exp, model=model, grid=grid,
                            basis=basis, out_dir=out_dir, sweep=sweep,
                            theta_th=float(theta_th), full_scale=full_scale,
                            threads=max(1, int(threads)))


def _drive_from_json(obj, name):
    """Build a Drive from a JSON value (number = constant)."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Drive.constant(float(obj))
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(f"{name} must be a number or a drive object "
                          "with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "constant":
            return Drive.constant(float(obj["value"]))
        if kind == "linear":
            return Drive.linear(float(obj["slope"]),
                                float(obj.get("intercept", 0.0)))
        if kind == "pi_sweep":
            return Drive.pi_sweep(float(obj["t_f"]))
        if kind == "sinusoidal":
            return Drive.sinusoidal(float(obj["amplitude"]),
                                    float(obj["omega"]),
                                    float(obj.get("phase", 0.0)),
                                    float(obj.get("offset", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"{name}: drive type {kind!r} is missing "
                          f"field {exc.args[0]!r}") from exc
    raise ConfigError(f"{name}: unknown drive type {kind!r}")


def _fmt(value):
    """Serialize one CSV cell: 17 significant digits for floats."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class _Emitter:
    """Collects emitted-file records and hashes every grid used."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.files = []
        self._hash = hashlib.sha256()

    def add_grid(self, label, times):
        self._hash.update(label.encode())
        self._hash.update(np.asarray(times, dtype=float).tobytes())

    def emit(self, rel, columns, rows):
        path = self.out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = list(rows)
        _write_csv(path, columns, rows)
        self.files.append({"path": str(rel), "columns": list(columns),
                           "rows": len(rows)})

    @property
    def grid_hash(self):
        return self._hash.hexdigest()


def _chain_outputs(em, label, spec, grid, theta_th, k_max=None):
    """Run the continuous pipeline and emit the chain CSV families."""
    kd = run_lanczos_td(spec, grid, k_max=k_max)
    cs = chain.propagate_chain(kd)
    sr = chain.spread_report(cs, kd)
    env = chain.lr_envelope(kd, theta_th)["envelope"]
    times = grid.times
    em.add_grid(label, times)

    em.emit(f"{label}/complexity.csv", ("t", "K"),
            ((times[j], sr.K[j]) for j in range(times.size)))

    def angle_rows():
        for j in range(times.size):
            for n in range(kd.d - 1):
                yield (times[j], n, sr.theta[n, j], env[n, j])
    em.emit(f"{label}/angles.csv", ("t", "n", "theta", "envelope"),
            angle_rows())

    def lanczos_rows():
        for j in range(times.size):
            for k in range(kd.d):
                b = kd.b[k - 1, j] if k > 0 else 0.0
                yield (times[j], k, kd.a[k, j], b)
    em.emit(f"{label}/lanczos.csv", ("t", "k", "a", "b"), lanczos_rows())


def _run_fig1(cfg, em):
    mp = dict(cfg.model)
    s = float(mp.pop("s", 10.0))
    h = float(mp.pop("h", 1.0))
    if mp:
        raise ConfigError(f"fig1_spin: unknown model keys {sorted(mp)}")
    gp = dict(cfg.grid)
    n_steps = int(gp.pop("n_steps", 2000))
    if gp:
        raise ConfigError(f"fig1_spin: unknown grid keys {sorted(gp)}")
    sweep = cfg.sweep.get("ht_f", [0.5, 1.0, 2.0, 4.0])
    bases = (FIXED, INSTANTANEOUS) if cfg.basis == "both" else (cfg.basis,)

    points = []
    for ht_f in sweep:
        t_f = float(ht_f) / h
        for basis in bases:
            points.append((f"htf{ht_f:g}_{basis}", t_f, basis))

    def one(point):
        label, t_f, basis = point
        spec = models.single_spin(s, h, Drive.pi_sweep(t_f),
                                  initial_basis=basis)
        grid = TimeGrid(0.0, t_f, n_steps)
        _chain_outputs(em, label, spec, grid, cfg.theta_th)

    _for_each(points, one, cfg.threads)


def _run_fig2(cfg, em):
    mp = dict(cfg.model)
    default_n = 24 if cfg.full_scale else 12
    n_sites = int(mp.pop("n_sites", default_n))
    dt = float(mp.pop("dt", 0.1))
    h = float(mp.pop("h", 1.0))
    n_cap = mp.pop("n_cap", None)
    if mp:
        raise ConfigError(f"fig2_ising: unknown model keys {sorted(mp)}")
    if n_cap is None:
        dim = 2 ** (n_sites // 2)
        n_cap = dim if dim <= 64 else 160
    sweep = cfg.sweep.get("ht_q", [5.0, 15.0, 30.0])

    def one(ht_q):
        t_q = float(ht_q) / h
        label = f"htq{ht_q:g}"
        spec = models.ising_free_fermion(n_sites, t_q, dt, h=h)
        model = arnoldi.UnitaryStepModel(spec)
        m = spec.params["m_steps"]
        times = -t_q + dt * np.arange(m + 1)
        em.add_grid(label, times)
        fo = arnoldi.run_discrete_evolution(model,
                                            mode="full_orthogonalization",
                                            n_cap=n_cap)
        em.emit(f"{label}/complexity.csv", ("t", "K"),
                ((times[j], fo["K"][j]) for j in range(times.size)))
        it = arnoldi.run_discrete_evolution(model, mode="iteration",
                                            n_cap=n_cap)
        heat = it["z_heatmap"]

        def heat_rows():
            for k in range(heat.shape[0]):
                for nidx in range(heat.shape[1]):
                    yield (k + 1, nidx, heat[k, nidx])
        em.emit(f"{label}/z_heatmap.csv", ("k", "n", "abs_z"), heat_rows())

    _for_each(list(sweep), one, cfg.threads)


def _run_fig3(cfg, em):
    mp = dict(cfg.model)
    default_n = 100 if cfg.full_scale else 40
    n = int(mp.pop("n", default_n))
    j = float(mp.pop("j", 1.0))
    h = float(mp.pop("h", 2.0))
    drive = mp.pop("drive", "sin")
    k_max = mp.pop("k_max", 200 if cfg.full_scale else None)
    if mp:
        raise ConfigError(f"fig3_lmg: unknown model keys {sorted(mp)}")
    sweep = cfg.sweep.get("omega", [0.1 * j])

    def one(omega):
        label = f"omega{omega:g}"
        spec = models.lmg(n, j, h, float(omega), drive=drive)
        data = floquet.sambe_lanczos(spec, k_max=k_max)
        em.add_grid(label, np.array([n, data.d_effective, data.m_max],
                                    dtype=float))

        def lanczos_rows():
            for k in range(data.d_effective):
                b = data.b[k - 1] if k > 0 else 0.0
                yield (0.0, k, data.a[k], b)
        em.emit(f"{label}/lanczos.csv", ("t", "k", "a", "b"), lanczos_rows())

        def pop_rows():
            for k in range(data.d_effective):
                pops = floquet.populations(data, k)
                for mu, val in enumerate(pops["hilbert"]):
                    yield (k, mu, "hilbert", val)
                for midx, val in enumerate(pops["fourier"]):
                    yield (k, midx - data.m_max, "fourier", val)
        em.emit(f"{label}/populations.csv", ("k", "index", "kind", "value"),
                pop_rows())

        sa, sb = floquet.static_reference(spec, k_max=data.d_effective)

        def static_rows():
            for k in range(sa.size):
                b = sb[k - 1] if k > 0 else 0.0
                yield (k, sa[k], b)
        em.emit(f"{label}/static_lanczos.csv", ("k", "a", "b"), static_rows())

    _for_each(list(sweep), one, cfg.threads)


def _run_custom(cfg, em):
    mp = dict(cfg.model)
    kind = mp.pop("kind", None)
    k_max = mp.pop("k_max", None)
    if kind is None:
        raise ConfigError("custom: model needs a 'kind' field")
    basis = cfg.basis if cfg.basis != "both" else FIXED
    try:
        if kind == "single_spin":
            spec = models.single_spin(
                float(mp.pop("s")), float(mp.pop("h")),
                _drive_from_json(mp.pop("theta"), "theta"),
                phi=_drive_from_json(mp.pop("phi", 0.0), "phi"),
                initial_basis=basis, t0=float(mp.pop("t0", 0.0)))
        elif kind == "oscillator_translate":
            spec = models.oscillator_translate(
                float(mp.pop("omega")), _drive_from_json(mp.pop("x0"), "x0"),
                mass=float(mp.pop("mass", 1.0)),
                n_max=int(mp.pop("n_max", 64)), initial_basis=basis)
        elif kind == "oscillator_dilate":
            spec = models.oscillator_dilate(
                _drive_from_json(mp.pop("omega"), "omega"),
                mass=float(mp.pop("mass", 1.0)),
                n_max=int(mp.pop("n_max", 64)), initial_basis=basis)
        elif kind == "lmg":
            spec = models.lmg(int(mp.pop("n")), float(mp.pop("j")),
                              float(mp.pop("h")), float(mp.pop("omega")),
                              drive=mp.pop("drive", "sin"),
                              initial_basis=basis)
        else:
            raise ConfigError(f"custom: unknown model kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"custom: model kind {kind!r} is missing "
                          f"field {exc.args[0]!r}") from exc
    if mp:
        raise ConfigError(f"custom: unknown model keys {sorted(mp)}")

    gp = dict(cfg.grid)
    try:
        grid = TimeGrid(float(gp.pop("t_start", 0.0)), float(gp.pop("t_end")),
                        int(gp.pop("n_steps")))
    except KeyError as exc:
        raise ConfigError(f"custom: grid is missing field {exc.args[0]!r}") from exc
    if gp:
        raise ConfigError(f"custom: unknown grid keys {sorted(gp)}")
    _chain_outputs(em, "run", spec, grid, cfg.theta_th,
                   k_max=int(k_max) if k_max is not None else None)


def _for_each(points, fn, threads):
    """Apply fn to each sweep point, concurrently when threads > 1."""
    if threads <= 1 or len(points) <= 1:
        for p in points:
            fn(p)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, points))


def run(config_path, out_override=None, threads=1, full_scale=False):
    """Execute one configured experiment; returns a process exit code."""
    try:
        cfg = parse_config(config_path, out_override=out_override,
                           threads=threads, full_scale=full_scale)
    except ConfigError as exc:
        line = getattr(exc, "line", 1)
        print(f"{config_path}:{line}: {exc}", file=sys.stderr)
        return 2

    start = time.perf_counter()
    em = _Emitter(cfg.out_dir)
    runner = {"fig1_spin": _run_fig1, "fig2_ising": _run_fig2,
              "fig3_lmg": _run_fig3, "custom": _run_custom}[cfg.experiment]
    try:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        runner(cfg, em)
    except ConfigError as exc:
        print(f"{config_path}:{getattr(exc, 'line', 1)}: {exc}",
              file=sys.stderr)
        return 2
    except KrylovError as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1

    manifest = RunManifest(
        config={"experiment": cfg.experiment, "model": cfg.model,
                "grid": cfg.grid, "basis": cfg.basis,
                "output_dir": cfg.out_dir, "sweep": cfg.sweep,
                "theta_th": cfg.theta_th, "full_scale": cfg.full_scale},
        version=__version__,
        grid_hash=em.grid_hash,
        wall_clock_s=time.perf_counter() - start,
        files=sorted(em.files, key=lambda f: f["path"]),
    )
    manifest.write(cfg.out_dir)
    print(f"wrote {len(em.files)} files + manifest.json to {cfg.out_dir}")
    return 0


def validate(suite):
    """Run the verification suite; returns a process exit code."""
    reports = validation.run_suite(suite)
    print(validation.format_report(reports))
    return 0 if all(r.passed for r in reports) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="krylovtd",
        description="Krylov chain experiments for driven quantum models")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("config", help="path to a JSON config file")
    p_run.add_argument("--out", default=None, help="override the output dir")
    p_run.add_argument("--threads", type=int, default=1,
                       help="concurrent sweep points")
    p_run.add_argument("--full-scale", action="store_true",
                       help="use the large presets instead of desk scale")

    p_val = sub.add_parser("validate", help="run the verification suite")
    p_val.add_argument("--suite", choices=("fast", "full"), default="fast")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, out_override=args.out, threads=args.threads,
                   full_scale=args.full_scale)
    return validate(args.suite)


if __name__ == "__main__":
    sys.exit(main())
