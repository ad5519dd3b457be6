"""Benchmark trends, synthetic observations and the simulation study.

Four trend shapes on ``t = 1..n``:

* constant: 20 (normal / Poisson), probability 0.5 (binomial);
* piecewise constant: 25, 10, 35, 15 with jumps after ``t = 20, 40, 60``
  (binomial probabilities 0.65, 0.25, 0.85, 0.45);
* smooth: one squared-exponential GP path, ``mu = 10``, ``sigma_f^2 = 430``,
  ``rho = 10`` (binomial: logit scale, ``mu = -0.5``, ``sigma_f^2 = 3``);
* varying smoothness: ``g(t) = sin(4t/n - 2) + 2 exp(-30 (4t/n - 2)^2)``,
  ``f = 20 + 10 g`` (binomial: ``f = 1.25 g`` on the logit scale).

Normal and Poisson scenarios share the natural-scale function values; Poisson
trends are returned on the log scale. The GP path is drawn from ``GP_SEED``
with numpy's default generator; for Poisson data it is floored at
``POISSON_FLOOR`` so the rate is positive.

Metrics of Poisson and binomial fits are computed on the mean scale (rate or
probability), normal fits on the trend itself.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.special import expit, logit

from .grid import Grid
from .model import BinomialObs, ModelSpec, NormalObs, PoissonObs, Prior
from .sampler import SamplerConfig, nuts_run

logger = logging.getLogger(__name__)

# chosen so the path has sd(trend) / 4.5 close to 2 and TMASV close to 1.4;
# it stays above 2.6, so the Poisson floor is only a guard
GP_SEED = 3566
POISSON_FLOOR = 1.0
PIECE_BREAKS = (20, 40, 60)
PIECE_LEVELS = (25.0, 10.0, 35.0, 15.0)
PIECE_PROBS = (0.65, 0.25, 0.85, 0.45)
STUDY_ZETA = 0.01


class TrendKind(str, enum.Enum):
    CONSTANT = "constant"
    PIECEWISE = "piecewise"
    SMOOTH = "smooth"
    VARYING = "varying"


class ObsKind(str, enum.Enum):
    NORMAL = "normal"
    POISSON = "poisson"
    BINOMIAL = "binomial"


@dataclass(frozen=True)
class TrendScenario:
    """A trend shape paired with an observation family.

    ``sigma`` is the normal noise sd and ``trials`` the binomial ``m``;
    ``seed`` only affects the GP trend.
    """

    kind: TrendKind
    obs: ObsKind = ObsKind.NORMAL
    sigma: float = 4.5
    n: int = 100
    trials: int = 20
    seed: int = GP_SEED

    def __post_init__(self):
        object.__setattr__(self, "kind", TrendKind(self.kind))
        object.__setattr__(self, "obs", ObsKind(self.obs))
        if self.n < 4:
            raise ValueError("scenarios need n >= 4")
        if self.obs is ObsKind.NORMAL and not self.sigma > 0:
            raise ValueError("normal noise sd must be positive")
        if self.trials < 1:
            raise ValueError("binomial trials must be >= 1")

    @property
    def name(self) -> str:
        tag = f"{self.obs.value}{self.sigma:g}" if self.obs is ObsKind.NORMAL else self.obs.value
        return f"{self.kind.value}-{tag}"

    @property
    def order(self) -> int:
        """Difference order used in the study: 1 for flat shapes, 2 for smooth ones."""
        return 1 if self.kind in (TrendKind.CONSTANT, TrendKind.PIECEWISE) else 2

    def obs_model(self):
        if self.obs is ObsKind.NORMAL:
            return NormalObs(5.0)
        if self.obs is ObsKind.POISSON:
            return PoissonObs()
        return BinomialObs(self.trials)


def varying_g(t, n):
    s = 4.0 * np.asarray(t, dtype=float) / n - 2.0
    return np.sin(s) + 2.0 * np.exp(-30.0 * s * s)


def gp_path(n, mean, var, length, seed) -> np.ndarray:
    """Squared-exponential GP path on ``t = 1..n`` via a Cholesky factor."""
    t = np.arange(1, n + 1, dtype=float)
    cov = var * np.exp(-((t[:, None] - t[None, :]) ** 2) / (2.0 * length**2))
    chol = np.linalg.cholesky(cov + 1e-8 * var * np.eye(n))
    z = np.random.default_rng(seed).standard_normal(n)
    return mean + chol @ z


def _piecewise(t, levels):
    idx = np.searchsorted(np.asarray(PIECE_BREAKS), t, side="left")
    return np.asarray(levels, dtype=float)[idx]


def natural_trend(sc: TrendScenario) -> np.ndarray:
    """Trend on the mean scale: value, rate or probability."""
    t = np.arange(1, sc.n + 1)
    if sc.obs is ObsKind.BINOMIAL:
        if sc.kind is TrendKind.CONSTANT:
            return np.full(sc.n, 0.5)
        if sc.kind is TrendKind.PIECEWISE:
            return _piecewise(t, PIECE_PROBS)
        if sc.kind is TrendKind.SMOOTH:
            return expit(gp_path(sc.n, -0.5, 3.0, 10.0, sc.seed))
        return expit(1.25 * varying_g(t, sc.n))
    if sc.kind is TrendKind.CONSTANT:
        f = np.full(sc.n, 20.0)
    elif sc.kind is TrendKind.PIECEWISE:
        f = _piecewise(t, PIECE_LEVELS)
    elif sc.kind is TrendKind.SMOOTH:
        f = gp_path(sc.n, 10.0, 430.0, 10.0, sc.seed)
        if sc.obs is ObsKind.POISSON:
            f = np.maximum(f, POISSON_FLOOR)
    else:
        f = 20.0 + 10.0 * varying_g(t, sc.n)
    return f


def trend_values(sc: TrendScenario) -> np.ndarray:
    """Trend on the ``theta`` scale (identity, log or logit)."""
    f = natural_trend(sc)
    if sc.obs is ObsKind.POISSON:
        return np.log(f)
    if sc.obs is ObsKind.BINOMIAL:
        return logit(f)
    return f


def signal_to_noise(sc: TrendScenario) -> float:
    """``sd(trend) / sigma`` for normal scenarios."""
    if sc.obs is not ObsKind.NORMAL:
        raise ValueError("signal-to-noise is defined here for normal observations")
    return float(np.std(natural_trend(sc), ddof=1) / sc.sigma)


def simulate_observations(theta, obs, rng, sigma: float | None = None, trials=20) -> np.ndarray:
    """Independent observations given the trend on the ``theta`` scale.

    ``obs`` is ``"normal"`` (needs ``sigma > 0``), ``"poisson"`` (rate
    ``exp(theta)``) or ``"binomial"`` (``trials`` draws at ``expit(theta)``).
    """
    theta = np.asarray(theta, dtype=float)
    obs = ObsKind(obs)
    if obs is ObsKind.NORMAL:
        if sigma is None or not sigma > 0:
            raise ValueError("normal observations need sigma > 0")
        return theta + sigma * rng.standard_normal(theta.size)
    if obs is ObsKind.POISSON:
        return rng.poisson(np.exp(theta)).astype(float)
    return rng.binomial(trials, expit(theta)).astype(float)


def scenario_data(sc: TrendScenario, rng) -> np.ndarray:
    return simulate_observations(trend_values(sc), sc.obs, rng, sc.sigma, sc.trials)


class Metrics(NamedTuple):
    mad: float
    mciw: float
    masv: float
    tmasv: float


def masv(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    return float(np.mean(np.abs(np.diff(x))))


def metrics(median, lo, hi, truth) -> Metrics:
    """MAD, MCIW and MASV of a fit, plus the MASV of the truth."""
    median, lo, hi, truth = (np.asarray(a, dtype=float) for a in (median, lo, hi, truth))
    if not (median.shape == lo.shape == hi.shape == truth.shape) or median.ndim != 1:
        raise ValueError("median, interval bounds and truth must be 1-D of equal length")
    if np.any(hi < lo):
        raise ValueError("credible interval upper bounds below lower bounds")
    return Metrics(
        mad=float(np.mean(np.abs(median - truth))),
        mciw=float(np.mean(hi - lo)),
        masv=masv(median),
        tmasv=masv(truth),
    )


# ---------------------------------------------------------------------------
# study


STUDY_FIELDS = ["scenario", "prior", "replicate", "k", "zeta", "mad", "mciw", "masv", "tmasv",
                "min_ess", "max_rhat", "divergences", "status"]
TIMING_FIELDS = ["scenario", "prior", "replicate", "cpu_seconds", "sample_cpu_seconds",
                 "mean_essps", "min_essps"]


def study_sampler_config(**kw) -> SamplerConfig:
    """Four chains, 500 warmup, 2500 draws thinned by 5."""
    base = dict(chains=4, warmup=500, iters=2500, thin=5)
    base.update(kw)
    return SamplerConfig(**base)


@dataclass(frozen=True)
class StudyConfig:
    scenarios: tuple
    priors: tuple = (Prior.NORMAL, Prior.LAPLACE, Prior.HORSESHOE)
    replicates: int = 20
    zeta: float = STUDY_ZETA
    seed: int = 1
    sampler: SamplerConfig = field(default_factory=study_sampler_config)
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.scenarios:
            raise ValueError("no scenarios given")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        object.__setattr__(self, "priors", tuple(Prior(p) for p in self.priors))


def _code(sc: TrendScenario) -> list[int]:
    kinds = list(TrendKind)
    obs = list(ObsKind)
    return [kinds.index(sc.kind), obs.index(sc.obs), int(round(sc.sigma * 1000)), sc.n]


def replicate_rng(seed, sc: TrendScenario, replicate) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *_code(sc), int(replicate)]))


def fit_seed(seed, sc: TrendScenario, replicate, prior: Prior) -> int:
    ss = np.random.SeedSequence([int(seed), *_code(sc), int(replicate), list(Prior).index(prior)])
    return int(ss.generate_state(1)[0])


def mean_scale_quantiles(samples, obs: ObsKind):
    """Posterior 2.5 %, 50 % and 97.5 % quantiles of the trend on its mean scale."""
    th = samples.theta.reshape(-1, samples.theta.shape[-1])
    if obs is ObsKind.POISSON:
        th = np.exp(th)
    elif obs is ObsKind.BINOMIAL:
        th = expit(th)
    return np.quantile(th, (0.025, 0.5, 0.975), axis=0, method="linear")


def fit_replicate(cfg: StudyConfig, sc: TrendScenario, replicate: int, prior: Prior):
    """Simulate one dataset and fit one prior; returns ``(row, timing_row)``."""
    from .diagnostics import summarize

    key = dict(scenario=sc.name, prior=prior.value, replicate=replicate)
    y = scenario_data(sc, replicate_rng(cfg.seed, sc, replicate))
    truth = natural_trend(sc)
    grid = Grid.regular_grid(sc.n)
    row = dict(key, k=sc.order, zeta=cfg.zeta)
    try:
        spec = ModelSpec.from_data(y, grid, sc.order, prior, sc.obs_model(), cfg.zeta)
        scfg = replace(cfg.sampler, seed=fit_seed(cfg.seed, sc, replicate, prior), workers=1)
        samples = nuts_run(spec, y, scfg)
        q = mean_scale_quantiles(samples, sc.obs)
        m = metrics(q[1], q[0], q[2], truth)
        summ = summarize(samples)
    except Exception as exc:  # recorded, not fatal
        logger.warning("%s %s replicate %d failed: %s", sc.name, prior.value, replicate, exc)
        row.update(mad=math.nan, mciw=math.nan, masv=math.nan, tmasv=masv(truth),
                   min_ess=math.nan, max_rhat=math.nan, divergences=-1,
                   status=f"error: {type(exc).__name__}")
        return row, dict(key, cpu_seconds=math.nan, sample_cpu_seconds=math.nan,
                         mean_essps=math.nan, min_essps=math.nan)
    row.update(mad=m.mad, mciw=m.mciw, masv=m.masv, tmasv=m.tmasv, min_ess=summ.min_ess,
               max_rhat=summ.max_rhat, divergences=summ.divergences, status="ok")
    timing = dict(key, cpu_seconds=summ.total_cpu, sample_cpu_seconds=summ.sample_cpu,
                  mean_essps=summ.mean_essps, min_essps=summ.min_essps)
    return row, timing


def _fit_job(args):
    return fit_replicate(*args)


def _fmt(v):
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _read_rows(path, fields):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        if set(r) != set(fields):
            continue
        conv = {}
        for k, v in r.items():
            if k in ("scenario", "prior", "status"):
                conv[k] = v
            elif k in ("replicate", "k", "divergences"):
                conv[k] = int(v)
            else:
                conv[k] = float(v)
        out.append(conv)
    return out


def _append(path, fields, row):
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow({k: _fmt(row[k]) for k in fields})


def write_rows(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in fields})


@dataclass
class StudyReport:
    rows: list
    timing: list

    def completed(self):
        return [r for r in self.rows if r["status"] == "ok"]

    def aggregate(self, level=0.95) -> list[dict]:
        """Per (scenario, prior) metric means with t-based confidence intervals."""
        groups: dict = {}
        for r in self.completed():
            groups.setdefault((r["scenario"], r["prior"]), []).append(r)
        tgroups: dict = {}
        for r in self.timing:
            if not math.isnan(r["mean_essps"]):
                tgroups.setdefault((r["scenario"], r["prior"]), []).append(r["mean_essps"])
        out = []
        for (scen, prior), rs in sorted(groups.items()):
            agg = dict(scenario=scen, prior=prior, replicates=len(rs))
            for name in ("mad", "mciw", "masv", "tmasv"):
                vals = np.array([r[name] for r in rs])
                mean = float(vals.mean())
                if vals.size > 1:
                    half = float(stats.t.ppf(0.5 + level / 2, vals.size - 1) * vals.std(ddof=1)
                                 / math.sqrt(vals.size))
                else:
                    half = math.nan
                agg[name] = mean
                agg[f"{name}_lo"] = mean - half
                agg[f"{name}_hi"] = mean + half
            es = tgroups.get((scen, prior))
            agg["mean_essps"] = float(np.mean(es)) if es else math.nan
            out.append(agg)
        return out

    def mean(self, scenario, prior, metric) -> float:
        vals = [r[metric] for r in self.completed()
                if r["scenario"] == scenario and r["prior"] == Prior(prior).value]
        return float(np.mean(vals)) if vals else math.nan


def _order_key(r):
    return (r["scenario"], list(Prior).index(Prior(r["prior"])), r["replicate"])


def run_study(cfg: StudyConfig, out_dir=None, progress=None) -> StudyReport:
    """Fit every prior to every replicate of every scenario.

    With ``out_dir``, finished fits are appended to ``study_progress.csv``
    (and ``study_timing_progress.csv``) as they complete; rerunning with the
    same directory skips them and retries failed ones. Sorted final tables
    are written to ``study.csv``, ``study_summary.csv`` and their timing
    counterparts.
    Timing lives in separate files so the others are reproducible byte for
    byte.
    """
    prog = tprog = None
    done_rows, done_timing = [], []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        prog = os.path.join(out_dir, "study_progress.csv")
        tprog = os.path.join(out_dir, "study_timing_progress.csv")
        done_rows = _read_rows(prog, STUDY_FIELDS)
        done_timing = _read_rows(tprog, TIMING_FIELDS)
    # failed fits are retried on resume
    done = {(r["scenario"], r["prior"], r["replicate"]) for r in done_rows if r["status"] == "ok"}
    jobs = []
    for sc in cfg.scenarios:
        for rep in range(1, cfg.replicates + 1):
            for prior in cfg.priors:
                if (sc.name, prior.value, rep) not in done:
                    jobs.append((cfg, sc, rep, prior))
    rows, timing = list(done_rows), list(done_timing)
    t0 = time.perf_counter()

    def record(result, i):
        row, trow = result
        rows.append(row)
        timing.append(trow)
        if prog is not None:
            _append(prog, STUDY_FIELDS, row)
            _append(tprog, TIMING_FIELDS, trow)
        if progress is not None:
            progress(i + 1, len(jobs), row, time.perf_counter() - t0)

    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for i, res in enumerate(pool.map(_fit_job, jobs)):
                record(res, i)
    else:
        for i, job in enumerate(jobs):
            record(_fit_job(job), i)

    keep = {(r["scenario"], r["prior"], r["replicate"]) for r in rows}
    rows = sorted({(r["scenario"], r["prior"], r["replicate"]): r for r in rows}.values(), key=_order_key)
    timing = sorted({(r["scenario"], r["prior"], r["replicate"]): r for r in timing
                     if (r["scenario"], r["prior"], r["replicate"]) in keep}.values(), key=_order_key)
    report = StudyReport(rows, timing)
    if out_dir is not None:
        write_rows(os.path.join(out_dir, "study.csv"), STUDY_FIELDS, rows)
        write_rows(os.path.join(out_dir, "study_timing.csv"), TIMING_FIELDS, timing)
        agg = report.aggregate()
        if agg:
            # ESSps is timing-derived, so it goes with the other timing files
            fields = [k for k in agg[0] if k != "mean_essps"]
            write_rows(os.path.join(out_dir, "study_summary.csv"), fields, agg)
            write_rows(os.path.join(out_dir, "study_timing_summary.csv"),
                       ["scenario", "prior", "mean_essps"], agg)
    return report


def normal_scenarios(sigma=4.5, kinds=tuple(TrendKind)) -> tuple:
    return tuple(TrendScenario(kind=k, obs=ObsKind.NORMAL, sigma=sigma) for k in kinds)
