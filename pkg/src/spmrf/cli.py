"""Command-line interface: ``spmrf {fit,calibrate,simulate,changepoint,diagnose}``.

Exit codes: 0 success, 2 validation error, 3 sampler failure, 4 I/O error.
``SPMRF_OUTPUT_DIR`` and ``SPMRF_THREADS`` supply defaults for ``--out`` and
``--threads``; explicit flags win.

Machine-readable files carry full precision (``%.17g``), human reports four
significant figures. Timing goes to ``timing.json`` only, so every other
file is byte-identical across runs with the same seed and configuration.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy.special import expit

from . import __version__
from .calibrate import calibrate, calibrate_from_data, CalibrationInputs, estimate_U
from .changepoint import changepoint_posterior
from .datasets import Series, load_dataset, read_series
from .diagnostics import summarize, summarize_draws
from .grid import Grid
from .model import BinomialObs, ModelSpec, NormalObs, PoissonObs, Prior, transform_data
from .sampler import SamplerConfig, SamplerError, nuts_run

logger = logging.getLogger("spmrf")

EXIT_OK, EXIT_VALIDATION, EXIT_SAMPLER, EXIT_IO = 0, 2, 3, 4
OUT_ENV, THREADS_ENV = "SPMRF_OUTPUT_DIR", "SPMRF_THREADS"
SWEEP_ZETAS = (1.0, 0.01, 0.0001)


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce a fit; mirrors the command-line flags."""

    input: str | None = None
    dataset: str | None = None
    x_col: str = "x"
    y_col: str = "y"
    m_col: str | None = None
    trials: int | None = None
    obs: str = "normal"
    prior: str = "horseshoe"
    order: int = 1
    zeta: str = "auto"
    alpha: float = 0.05
    U: float | None = None
    sigma_scale: float = 5.0
    formulation: str = "hierarchical"
    chains: int = 4
    warmup: int = 500
    iters: int = 2500
    thin: int = 5
    target_accept: float = 0.8
    max_treedepth: int = 10
    seed: int = 1
    out: str | None = None
    threads: int | None = None
    save_draws: bool = True

    def validate(self):
        if (self.input is None) == (self.dataset is None):
            raise ValidationError("give exactly one of --input or --dataset")
        if self.obs not in ("normal", "poisson", "binomial"):
            raise ValidationError(f"unknown observation family {self.obs!r}")
        Prior(self.prior)
        if self.order not in (1, 2):
            raise ValidationError("order must be 1 or 2")
        if self.zeta != "auto":
            try:
                z = float(self.zeta)
            except ValueError:
                raise ValidationError("zeta must be 'auto' or a positive number") from None
            if not z > 0:
                raise ValidationError("zeta must be positive")

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(chains=self.chains, warmup=self.warmup, iters=self.iters,
                             thin=self.thin, target_accept=self.target_accept,
                             max_treedepth=self.max_treedepth, seed=self.seed,
                             workers=self.threads or 1)

    def reproducible_dict(self) -> dict:
        d = asdict(self)
        # scheduling only; results do not depend on it
        d.pop("threads")
        d.pop("out")
        return d


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _fmt4(v) -> str:
    return format(float(v), ".4g")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(x if isinstance(x, str) else _fmt(x) for x in r) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _versions() -> dict:
    import numba
    import scipy

    return {"spmrf": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# data and model assembly


def load_series(cfg: RunConfig) -> Series:
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset)
    return read_series(cfg.input, cfg.x_col, cfg.y_col, cfg.m_col)


def obs_model(cfg: RunConfig, series: Series):
    if cfg.obs == "normal":
        return NormalObs(cfg.sigma_scale)
    if cfg.obs == "poisson":
        return PoissonObs()
    if series.m is not None:
        return BinomialObs(series.m)
    if cfg.trials is None:
        raise ValidationError("binomial data need an m column (--m-col) or --trials")
    return BinomialObs(cfg.trials)


def resolve_zeta(cfg: RunConfig, series: Series, obs) -> tuple[float, dict]:
    if cfg.zeta != "auto":
        return float(cfg.zeta), {"source": "explicit", "value": float(cfg.zeta)}
    res = calibrate_from_data(series.y, obs, cfg.order, cfg.alpha, U=cfg.U)
    return res.zeta, {"source": "auto", "value": res.zeta, "calibration": res.as_dict()}


def natural_scale(theta, obs_name):
    if obs_name == "poisson":
        return np.exp(theta)
    if obs_name == "binomial":
        return expit(theta)
    return theta


def observed_natural(series: Series, obs) -> np.ndarray:
    if isinstance(obs, BinomialObs):
        return series.y / obs.trials_for(series.y.size)
    return series.y


def build_spec(cfg: RunConfig, series: Series, zeta=None):
    obs = obs_model(cfg, series)
    if zeta is None:
        zeta, prov = resolve_zeta(cfg, series, obs)
    else:
        prov = {"source": "explicit", "value": float(zeta)}
    grid = Grid(series.x)
    spec = ModelSpec.from_data(series.y, grid, cfg.order, cfg.prior, obs, zeta)
    return spec, prov


# ---------------------------------------------------------------------------
# outputs


def write_fit_outputs(out, cfg: RunConfig, series: Series, spec, samples, prov, command="fit"):
    os.makedirs(out, exist_ok=True)
    summ = summarize(samples)
    n = spec.n
    th = samples.theta.reshape(-1, n)
    nat = natural_scale(th, spec.obs.name)
    qn = np.quantile(nat, (0.025, 0.5, 0.975), axis=0, method="linear")
    x = spec.grid.locations
    _write_csv(os.path.join(out, "summary.csv"),
               ["location", "median", "q025", "q975", "natural_median", "natural_q025", "natural_q975"],
               [(x[i], summ.median[i], summ.q025[i], summ.q975[i], qn[1, i], qn[0, i], qn[2, i])
                for i in range(n)])
    _write_csv(os.path.join(out, "diagnostics.csv"),
               ["parameter", "median", "q025", "q975", "ess", "rhat"],
               [(name, m, lo, hi, e, r) for name, m, lo, hi, e, r in summ.rows()])
    obs_nat = observed_natural(series, spec.obs)
    _write_csv(os.path.join(out, "plot_data.csv"),
               ["location", "observed", "median", "lower", "upper"],
               [(x[i], obs_nat[i], qn[1, i], qn[0, i], qn[2, i]) for i in range(n)])
    with open(os.path.join(out, "diagnostics.txt"), "w") as fh:
        fh.write(diagnostics_report(summ, samples))
    if cfg.save_draws:
        write_draws(os.path.join(out, "draws.csv"), samples)
    manifest = {
        "command": command,
        "config": cfg.reproducible_dict(),
        "zeta": prov,
        "model": {"n": n, "k": spec.k, "prior": spec.prior.value, "obs": spec.obs.name,
                  "mu": spec.mu, "omega": spec.omega, "formulation": cfg.formulation,
                  "regular_grid": bool(spec.grid.regular)},
        "data": {"source": series.source,
                 "sha256": _sha256(cfg.input) if cfg.input else None},
        "sampler": {"backend": samples.config.backend,
                    "retained_per_chain": samples.config.retained_per_chain},
        "versions": _versions(),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    _write_json(os.path.join(out, "timing.json"), {
        "warmup_cpu": samples.warmup_cpu.tolist(), "sample_cpu": samples.sample_cpu.tolist(),
        "warmup_wall": samples.warmup_wall.tolist(), "sample_wall": samples.sample_wall.tolist(),
        "min_essps": summ.min_essps, "mean_essps": summ.mean_essps,
    })
    return summ


def diagnostics_report(summ, samples=None) -> str:
    lines = ["parameter        median      q2.5      q97.5     ESS       R-hat"]
    for name, m, lo, hi, e, r in summ.rows():
        lines.append(f"{name:<16} {_fmt4(m):<11} {_fmt4(lo):<9} {_fmt4(hi):<9} {_fmt4(e):<9} {_fmt4(r)}")
    lines.append("")
    lines.append(f"max R-hat: {_fmt4(summ.max_rhat)}")
    lines.append(f"min ESS: {_fmt4(summ.min_ess)}")
    lines.append(f"divergences (sampling): {summ.divergences}")
    lines.append(f"treedepth saturation: {summ.treedepth_hits}")
    if samples is not None:
        lines.append("step sizes: " + " ".join(_fmt4(s) for s in samples.stepsize))
    lines.append("ESS per sampling CPU second: see timing.json")
    return "\n".join(lines) + "\n"


def write_draws(path, samples):
    C, D, n = samples.theta.shape
    header = ["chain", "draw"] + [f"theta[{i + 1}]" for i in range(n)] + list(samples.scalar_params())
    scal = list(samples.scalar_params().values())
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for c in range(C):
            for d in range(D):
                vals = [str(c + 1), str(d + 1)] + [_fmt(v) for v in samples.theta[c, d]]
                vals += [_fmt(a[c, d]) for a in scal]
                fh.write(",".join(vals) + "\n")


def read_draws(path):
    """``(theta, scalars)`` from a draws file, shaped by chain."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    chain = data[:, 0].astype(int)
    C = int(chain.max())
    D = int(np.sum(chain == 1))
    if data.shape[0] != C * D:
        raise ValueError(f"{path}: chains have unequal lengths")
    tcols = [i for i, h in enumerate(header) if h.startswith("theta[")]
    theta = data[:, tcols].reshape(C, D, len(tcols))
    scalars = {h: data[:, i].reshape(C, D) for i, h in enumerate(header)
               if i >= 2 and not h.startswith("theta[")}
    return theta, scalars


# ---------------------------------------------------------------------------
# commands


def _out_dir(args, default="spmrf-out"):
    return args.out or os.environ.get(OUT_ENV) or default


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer") from None
    return os.cpu_count() or 1


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **raw)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.zeta = str(cfg.zeta)
    cfg.out = _out_dir(args) if cfg.out is None else cfg.out
    cfg.threads = _threads(args)
    cfg.validate()
    return cfg


def cmd_fit(args) -> int:
    cfg = config_from_args(args)
    series = load_series(cfg)
    spec, prov = build_spec(cfg, series)
    logger.info("fitting %s prior, order %d, zeta %.4g, n = %d", cfg.prior, cfg.order, spec.zeta, spec.n)
    samples = nuts_run(spec, series.y, cfg.sampler(), cfg.formulation)
    summ = write_fit_outputs(cfg.out, cfg, series, spec, samples, prov)
    print(f"zeta = {_fmt4(spec.zeta)} ({prov['source']}); max R-hat {_fmt4(summ.max_rhat)}, "
          f"min ESS {_fmt4(summ.min_ess)}, divergences {summ.divergences}; wrote {cfg.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.input is None and args.dataset is None:
        if args.U is None or args.n is None:
            raise ValidationError("without data, give both --U and --n")
        omega2 = args.omega2 if args.omega2 is not None else args.U ** 2
        res = calibrate(CalibrationInputs(k=args.order, n=args.n, omega2=omega2, U=args.U,
                                          alpha=args.alpha))
    else:
        cfg = RunConfig(input=args.input, dataset=args.dataset, x_col=args.x_col or "x",
                        y_col=args.y_col or "y",
                        m_col=args.m_col, trials=args.trials, obs=args.obs, order=args.order)
        cfg.validate()
        series = load_series(cfg)
        obs = obs_model(cfg, series)
        res = calibrate_from_data(series.y, obs, args.order, args.alpha, U=args.U, omega2=args.omega2)
    d = res.as_dict()
    for key in ("k", "n", "U", "omega2", "alpha", "sigma_ref", "zeta"):
        v = d[key]
        print(f"{key:<10} {v if isinstance(v, int) else _fmt4(v)}")
    if args.out or os.environ.get(OUT_ENV):
        out = _out_dir(args)
        os.makedirs(out, exist_ok=True)
        _write_json(os.path.join(out, "calibration.json"), d)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import ObsKind, StudyConfig, TrendKind, TrendScenario, study_sampler_config, run_study

    threads = _threads(args)
    out = _out_dir(args, "spmrf-study")
    if args.sweep:
        return _zeta_sweep(args, out, threads)
    if args.replicates < 1:
        raise ValidationError("replicates must be at least 1")
    kinds = [TrendKind(k) for k in args.trend.split(",")]
    scen = tuple(TrendScenario(kind=k, obs=ObsKind(args.obs), sigma=args.sigma, n=args.n)
                 for k in kinds)
    scfg = study_sampler_config(chains=args.chains, warmup=args.warmup, iters=args.iters,
                                thin=args.thin, target_accept=args.target_accept)
    priors = tuple(Prior(p) for p in args.priors.split(","))
    cfg = StudyConfig(scenarios=scen, priors=priors, replicates=args.replicates,
                      zeta=args.zeta, seed=args.seed, sampler=scfg, workers=threads)

    def progress(i, total, row, elapsed):
        print(f"[{i}/{total}] {row['scenario']} {row['prior']} rep {row['replicate']}: "
              f"MAD {_fmt4(row['mad'])} MCIW {_fmt4(row['mciw'])} ({elapsed:.0f}s)", flush=True)

    report = run_study(cfg, out, progress=progress)
    print("scenario, prior, replicates, MAD, MCIW, MASV, TMASV")
    for a in report.aggregate():
        print(f"{a['scenario']}, {a['prior']}, {a['replicates']}, {_fmt4(a['mad'])}, "
              f"{_fmt4(a['mciw'])}, {_fmt4(a['masv'])}, {_fmt4(a['tmasv'])}")
    return EXIT_OK


def _zeta_sweep(args, out, threads) -> int:
    cfg = RunConfig(input=args.input, dataset=args.dataset or (None if args.input else "coal"),
                    x_col=args.x_col or "x", y_col=args.y_col or "y", m_col=args.m_col,
                    trials=args.trials, obs=args.sweep_obs, order=args.order, chains=args.chains, warmup=args.warmup,
                    iters=args.iters, thin=args.thin, target_accept=args.target_accept,
                    seed=args.seed, threads=threads, out=out)
    cfg.validate()
    series = load_series(cfg)
    os.makedirs(out, exist_ok=True)
    rows, diag = [], []
    for prior in args.priors.split(","):
        for z in SWEEP_ZETAS:
            pcfg = replace(cfg, prior=Prior(prior).value, zeta=repr(z))
            spec, _ = build_spec(pcfg, series, zeta=z)
            samples = nuts_run(spec, series.y, pcfg.sampler())
            summ = summarize(samples)
            nat = natural_scale(samples.theta.reshape(-1, spec.n), spec.obs.name)
            q = np.quantile(nat, (0.025, 0.5, 0.975), axis=0, method="linear")
            for i, xv in enumerate(spec.grid.locations):
                rows.append((pcfg.prior, z, xv, q[1, i], q[0, i], q[2, i]))
            diag.append((pcfg.prior, z, summ.max_rhat, summ.min_ess, float(summ.divergences)))
            print(f"{pcfg.prior} zeta={z:g}: max R-hat {_fmt4(summ.max_rhat)}, "
                  f"min ESS {_fmt4(summ.min_ess)}", flush=True)
    _write_csv(os.path.join(out, "sweep.csv"),
               ["prior", "zeta", "location", "median", "q025", "q975"],
               [(r[0],) + r[1:] for r in rows])
    _write_csv(os.path.join(out, "sweep_diagnostics.csv"),
               ["prior", "zeta", "max_rhat", "min_ess", "divergences"], diag)
    _write_json(os.path.join(out, "manifest.json"), {
        "command": "simulate --sweep", "config": cfg.reproducible_dict(),
        "zetas": list(SWEEP_ZETAS), "versions": _versions()})
    return EXIT_OK


def _load_run_draws(run):
    path = os.path.join(run, "draws.csv") if os.path.isdir(run) else run
    theta, scalars = read_draws(path)
    man_path = os.path.join(os.path.dirname(path), "manifest.json")
    manifest = None
    if os.path.exists(man_path):
        with open(man_path) as fh:
            manifest = json.load(fh)
    return path, theta, scalars, manifest


def _locations(run_path, n):
    summ = os.path.join(os.path.dirname(run_path), "summary.csv")
    if os.path.exists(summ):
        return np.loadtxt(summ, delimiter=",", skiprows=1, usecols=0, ndmin=1)
    return np.arange(1, n + 1, dtype=float)


def cmd_changepoint(args) -> int:
    path, theta, _, manifest = _load_run_draws(args.run)
    if manifest and manifest.get("model", {}).get("k", 1) != 1:
        warnings.warn("change points are defined by the largest drop; the fit is order 2",
                      stacklevel=1)
    loc = _locations(path, theta.shape[-1])
    obs_name = (manifest or {}).get("model", {}).get("obs", "normal")
    values = natural_scale(theta, obs_name) if args.scale == "natural" else theta
    cp = changepoint_posterior(values, loc)
    out = args.out or os.path.dirname(path)
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "changepoint.csv"), ["location", "count", "probability"],
               [(l, c, p) for l, c, p in zip(cp.locations, cp.counts, cp.probs)])
    q = cp.quantiles()
    print(f"change-point mode {cp.mode:g}; quartiles {_fmt4(q[0])}, {_fmt4(q[1])}, {_fmt4(q[2])}; "
          f"IQR {_fmt4(cp.iqr)}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    path, theta, scalars, _ = _load_run_draws(args.run)
    summ = summarize_draws(theta, scalars)
    report = diagnostics_report(summ)
    if args.quiet:
        print(f"max R-hat {_fmt4(summ.max_rhat)}, min ESS {_fmt4(summ.min_ess)}")
    else:
        print(report, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_data_args(p):
    g = p.add_argument_group("data")
    g.add_argument("--input", help="headered CSV file")
    g.add_argument("--dataset", choices=["coal", "tokyo"], help="bundled example data")
    g.add_argument("--x-col", dest="x_col", default=None)
    g.add_argument("--y-col", dest="y_col", default=None)
    g.add_argument("--m-col", dest="m_col", default=None, help="binomial trials column")
    g.add_argument("--trials", type=int, default=None, help="binomial trials for every point")


def _add_sampler_args(p, defaults=True):
    g = p.add_argument_group("sampler")
    d = SamplerConfig()
    g.add_argument("--chains", type=int, default=d.chains if defaults else None)
    g.add_argument("--warmup", type=int, default=d.warmup if defaults else None)
    g.add_argument("--iters", type=int, default=d.iters if defaults else None)
    g.add_argument("--thin", type=int, default=d.thin if defaults else None)
    g.add_argument("--target-accept", dest="target_accept", type=float,
                   default=d.target_accept if defaults else None)
    g.add_argument("--seed", type=int, default=d.seed if defaults else None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spmrf", description="Shrinkage-prior Markov random field trend fitting")
    p.add_argument("--version", action="version", version=f"spmrf {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a trend model and write summaries")
    f.add_argument("--config", help="JSON file with RunConfig fields (flags override)")
    _add_data_args(f)
    f.add_argument("--obs", choices=["normal", "poisson", "binomial"])
    f.add_argument("--prior", choices=[q.value for q in Prior])
    f.add_argument("--order", type=int, choices=[1, 2])
    f.add_argument("--zeta", help="global scale hyperparameter or 'auto'")
    f.add_argument("--alpha", type=float)
    f.add_argument("--U", type=float, help="override the calibration bound U")
    f.add_argument("--sigma-scale", dest="sigma_scale", type=float)
    f.add_argument("--formulation", choices=["hierarchical", "marginal"])
    f.add_argument("--max-treedepth", dest="max_treedepth", type=int)
    _add_sampler_args(f, defaults=False)
    f.add_argument("--out")
    f.add_argument("--threads", type=int)
    f.add_argument("--no-draws", dest="save_draws", action="store_false", default=None)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("calibrate", help="compute zeta and its intermediates")
    _add_data_args(c)
    c.add_argument("--obs", choices=["normal", "poisson", "binomial"], default="normal")
    c.add_argument("--order", type=int, choices=[1, 2], default=1)
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--U", type=float)
    c.add_argument("--omega2", type=float)
    c.add_argument("--n", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("simulate", help="simulation study or zeta sensitivity sweep")
    s.add_argument("--trend", default="constant,piecewise,smooth,varying")
    s.add_argument("--obs", default="normal", choices=["normal", "poisson", "binomial"])
    s.add_argument("--sigma", type=float, default=4.5)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--replicates", type=int, default=20)
    s.add_argument("--priors", default="normal,laplace,horseshoe")
    s.add_argument("--zeta", type=float, default=0.01)
    s.add_argument("--sweep", action="store_true",
                   help="fit each prior at zeta = 1, 0.01, 1e-4 to data (default: coal)")
    s.add_argument("--sweep-obs", dest="sweep_obs", default="poisson",
                   choices=["normal", "poisson", "binomial"])
    s.add_argument("--order", type=int, choices=[1, 2], default=1)
    _add_data_args(s)
    _add_sampler_args(s)
    s.add_argument("--out")
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_simulate)

    cp = sub.add_parser("changepoint", help="posterior of the largest-drop location")
    cp.add_argument("run", help="fit output directory or draws.csv")
    cp.add_argument("--scale", choices=["natural", "link"], default="natural",
                    help="measure drops in the mean (rate / probability) or in theta")
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_changepoint)

    dg = sub.add_parser("diagnose", help="R-hat and ESS from saved draws")
    dg.add_argument("run", help="fit output directory or draws.csv")
    dg.add_argument("-q", "--quiet", action="store_true")
    dg.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SamplerError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    except (OSError, FileNotFoundError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
