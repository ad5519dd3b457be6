"""No-U-Turn sampler with dual-averaging step size and diagonal metric.

The transition is the multinomial variant of NUTS with the generalised
U-turn criterion, including the extra checks across neighbouring subtrees.
Warmup follows the usual three-phase schedule: a fast initial buffer
(15 % of warmup), doubling slow windows in which the diagonal inverse metric
is re-estimated, and a fast terminal buffer (10 %).

Any object with a ``dim`` attribute and a ``logp_grad(x) -> (float, ndarray)``
method can be sampled with :func:`sample`. Targets that also provide
``compiled() -> (fn, data)`` with a numba-jitted ``fn`` run on the compiled
transition in :mod:`spmrf._kernels` (``backend="compiled"``, the default); the
pure-Python kernel remains available as ``backend="python"``.
:func:`nuts_run` wraps this for :class:`spmrf.model.ModelSpec` targets and
returns constrained draws.

Per-chain random streams come from ``numpy.random.SeedSequence([seed, chain])``
feeding a PCG64 generator (and, for the compiled backend, seeding numba's
generator), so a chain's draws depend only on ``(seed, chain)`` and not on how
chains are scheduled.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MAX_DELTA_H = 1000.0
INIT_RETRIES = 10


class SamplerError(RuntimeError):
    """Initialisation failure or an otherwise unusable run."""


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 500
    iters: int = 2500
    thin: int = 5
    target_accept: float = 0.8
    max_treedepth: int = 10
    seed: int = 1
    init_radius: float = 2.0
    workers: int = 1
    backend: str = "compiled"

    def __post_init__(self):
        if self.backend not in ("compiled", "python"):
            raise ValueError("backend must be 'compiled' or 'python'")
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if self.warmup < 0 or self.iters < 1 or self.thin < 1:
            raise ValueError("warmup must be >= 0, iters and thin >= 1")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.max_treedepth < 1:
            raise ValueError("max_treedepth must be >= 1")
        if self.iters // self.thin == 0:
            raise ValueError("iters // thin is zero: no draws would be retained")

    @property
    def retained_per_chain(self) -> int:
        return self.iters // self.thin


@dataclass
class ChainResult:
    draws: np.ndarray  # (retained, dim) unconstrained
    logp: np.ndarray
    divergent: np.ndarray  # per post-warmup iteration
    treedepth: np.ndarray
    n_leapfrog: np.ndarray
    accept_stat: np.ndarray
    stepsize: float
    inv_metric: np.ndarray
    warmup_divergences: int
    warmup_cpu: float
    sample_cpu: float
    warmup_wall: float
    sample_wall: float


# ---------------------------------------------------------------------------
# adaptation


class DualAveraging:
    """Nesterov dual averaging of ``log(stepsize)`` towards a target acceptance."""

    def __init__(self, stepsize, target=0.8, gamma=0.05, t0=10.0, kappa=0.75):
        self.target = target
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.restart(stepsize)

    def restart(self, stepsize):
        self.mu = math.log(10.0 * stepsize)
        self.counter = 0
        self.s_bar = 0.0
        self.x_bar = 0.0

    def update(self, accept_stat) -> float:
        self.counter += 1
        accept_stat = min(1.0, accept_stat)
        eta = 1.0 / (self.counter + self.t0)
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - accept_stat)
        x = self.mu - self.s_bar * math.sqrt(self.counter) / self.gamma
        w = self.counter ** (-self.kappa)
        self.x_bar = (1.0 - w) * self.x_bar + w * x
        return math.exp(x)

    def final(self) -> float:
        return math.exp(self.x_bar)


def warmup_windows(warmup: int) -> list[tuple[int, int]]:
    """Slow metric-adaptation windows as half-open ``(start, stop)`` ranges.

    The first window starts after a 15 % fast buffer, each subsequent window
    doubles, and the last one is stretched to end where the 10 % terminal
    buffer starts. Returns an empty list for very short warmups.
    """
    if warmup < 20:
        return []
    init = int(0.15 * warmup)
    term = int(0.10 * warmup)
    base = max(1, int(0.05 * warmup))
    end = warmup - term
    windows = []
    start, size = init, base
    while start < end:
        stop = start + size
        # absorb a following window that would not fit at twice the size
        if stop + 2 * size > end:
            stop = end
        windows.append((start, min(stop, end)))
        start, size = stop, 2 * size
    return windows


def regularized_variance(draws: np.ndarray) -> np.ndarray:
    """Window variance shrunk towards 1e-3, as in common NUTS implementations."""
    n = draws.shape[0]
    var = np.var(draws, axis=0, ddof=1) if n > 1 else np.ones(draws.shape[1])
    return (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))


# ---------------------------------------------------------------------------
# NUTS transition


class _Subtree:
    __slots__ = ("valid", "x", "p", "g", "logp", "x_prop", "logp_prop", "g_prop",
                 "log_w", "rho", "p_beg", "p_end", "ps_beg", "ps_end")


def _criterion(ps_minus, ps_plus, rho):
    return float(np.dot(ps_plus, rho)) > 0.0 and float(np.dot(ps_minus, rho)) > 0.0


class NUTS:
    """One NUTS kernel bound to a target, RNG, metric and step size."""

    def __init__(self, target, rng, inv_metric=None, stepsize=1.0, max_treedepth=10,
                 max_delta_h=MAX_DELTA_H):
        self.target = target
        self.rng = rng
        self.dim = target.dim
        self.inv_metric = np.ones(self.dim) if inv_metric is None else np.asarray(inv_metric, float)
        self.stepsize = stepsize
        self.max_treedepth = max_treedepth
        self.max_delta_h = max_delta_h

    def _momentum(self):
        return self.rng.standard_normal(self.dim) / np.sqrt(self.inv_metric)

    def _hamiltonian(self, logp, p):
        h = -logp + 0.5 * float(np.dot(p, self.inv_metric * p))
        return h if math.isfinite(h) else math.inf

    def leapfrog(self, x, p, g, eps):
        p = p + 0.5 * eps * g
        x = x + eps * self.inv_metric * p
        logp, g = self.target.logp_grad(x)
        p = p + 0.5 * eps * g
        return x, p, g, logp

    def init_stepsize(self, x, logp, g):
        """Double or halve the step size until one leapfrog step crosses
        an acceptance probability of 0.8."""
        eps = self.stepsize
        p = self._momentum()
        h0 = self._hamiltonian(logp, p)
        _, p1, _, logp1 = self.leapfrog(x, p, g, eps)
        delta = h0 - self._hamiltonian(logp1, p1)
        direction = 1 if delta > math.log(0.8) else -1
        while True:
            p = self._momentum()
            h0 = self._hamiltonian(logp, p)
            _, p1, _, logp1 = self.leapfrog(x, p, g, eps)
            delta = h0 - self._hamiltonian(logp1, p1)
            if direction == 1 and not delta > math.log(0.8):
                break
            if direction == -1 and not delta < math.log(0.8):
                break
            eps = 2.0 * eps if direction == 1 else 0.5 * eps
            if eps > 1e7:
                raise SamplerError("step size search diverged; posterior may be improper")
            if eps == 0.0:
                raise SamplerError("step size collapsed to zero; check the log density")
        self.stepsize = eps
        return eps

    def _build(self, depth, x, p, g, logp, sign, h0, acc):
        if depth == 0:
            x, p, g, logp = self.leapfrog(x, p, g, sign * self.stepsize)
            acc[0] += 1
            h = self._hamiltonian(logp, p)
            divergent = h - h0 > self.max_delta_h
            if divergent:
                acc[2] = True
            log_w = h0 - h
            acc[1] += 1.0 if log_w > 0 else math.exp(log_w)
            t = _Subtree()
            t.valid = not divergent
            t.x, t.p, t.g, t.logp = x, p, g, logp
            t.x_prop, t.logp_prop, t.g_prop = x, logp, g
            t.log_w = log_w
            t.rho = p
            ps = self.inv_metric * p
            t.p_beg = t.p_end = p
            t.ps_beg = t.ps_end = ps
            return t

        init = self._build(depth - 1, x, p, g, logp, sign, h0, acc)
        if not init.valid:
            return init
        final = self._build(depth - 1, init.x, init.p, init.g, init.logp, sign, h0, acc)
        if not final.valid:
            return final
        t = _Subtree()
        t.x, t.p, t.g, t.logp = final.x, final.p, final.g, final.logp
        t.log_w = np.logaddexp(init.log_w, final.log_w)
        if self.rng.uniform() < math.exp(final.log_w - t.log_w):
            t.x_prop, t.logp_prop, t.g_prop = final.x_prop, final.logp_prop, final.g_prop
        else:
            t.x_prop, t.logp_prop, t.g_prop = init.x_prop, init.logp_prop, init.g_prop
        t.rho = init.rho + final.rho
        t.p_beg, t.ps_beg = init.p_beg, init.ps_beg
        t.p_end, t.ps_end = final.p_end, final.ps_end
        t.valid = (_criterion(init.ps_beg, final.ps_end, t.rho)
                   and _criterion(init.ps_beg, final.ps_beg, init.rho + final.p_beg)
                   and _criterion(init.ps_end, final.ps_end, final.rho + init.p_end))
        return t

    def transition(self, x, logp, g):
        """One NUTS iteration from ``x``.

        Returns ``(x, logp, g, info)`` where ``info`` holds the acceptance
        statistic, tree depth, leapfrog count and divergence flag.
        """
        p0 = self._momentum()
        h0 = self._hamiltonian(logp, p0)
        ps0 = self.inv_metric * p0
        fwd = (x, p0, g, logp)
        bck = (x, p0, g, logp)
        p_front = p_back = p0
        ps_front = ps_back = ps0
        rho = p0.copy()
        log_w = 0.0
        sample = (x, logp, g)
        acc = [0, 0.0, False]  # leapfrogs, summed metropolis prob, divergent
        depth = 0
        while depth < self.max_treedepth:
            forward = self.rng.uniform() > 0.5
            start = fwd if forward else bck
            sub = self._build(depth, *start, 1 if forward else -1, h0, acc)
            if not sub.valid:
                break
            depth += 1
            if sub.log_w > log_w or self.rng.uniform() < math.exp(sub.log_w - log_w):
                sample = (sub.x_prop, sub.logp_prop, sub.g_prop)
            log_w = float(np.logaddexp(log_w, sub.log_w))
            rho_old = rho
            rho = rho_old + sub.rho
            if forward:
                fwd = (sub.x, sub.p, sub.g, sub.logp)
                persist = (_criterion(ps_back, sub.ps_end, rho)
                           and _criterion(ps_back, sub.ps_beg, rho_old + sub.p_beg)
                           and _criterion(ps_front, sub.ps_end, sub.rho + p_front))
                p_front, ps_front = sub.p_end, sub.ps_end
            else:
                bck = (sub.x, sub.p, sub.g, sub.logp)
                persist = (_criterion(sub.ps_end, ps_front, rho)
                           and _criterion(sub.ps_end, ps_back, sub.rho + p_back)
                           and _criterion(sub.ps_beg, ps_front, rho_old + sub.p_beg))
                p_back, ps_back = sub.p_end, sub.ps_end
            if not persist:
                break
        info = {
            "accept_stat": acc[1] / acc[0] if acc[0] else 0.0,
            "treedepth": depth,
            "n_leapfrog": acc[0],
            "divergent": bool(acc[2]),
        }
        return sample[0], sample[1], sample[2], info


class CompiledNUTS(NUTS):
    """NUTS kernel running the compiled transition for a jitted target."""

    def __init__(self, fn, data, dim, inv_metric=None, stepsize=1.0, max_treedepth=10,
                 max_delta_h=MAX_DELTA_H):
        from . import _kernels

        self._k = _kernels
        self.fn = fn
        self.data = data
        self.rng = None
        self.dim = dim
        self.inv_metric = np.ones(dim) if inv_metric is None else np.asarray(inv_metric, float)
        self.stepsize = stepsize
        self.max_treedepth = max_treedepth
        self.max_delta_h = max_delta_h
        leaves = 1 << max_treedepth
        self._P = np.empty((leaves, dim))
        self._S = np.empty((leaves + 1, dim))

    def _momentum(self):
        return self._k.momentum(self.inv_metric)

    def leapfrog(self, x, p, g, eps):
        return self._k.leapfrog(self.fn, self.data, x, p, g, float(eps), self.inv_metric)

    def transition(self, x, logp, g):
        xs, lps, gs, accept, depth, nleap, div = self._k.transition(
            self.fn, self.data, x, float(logp), g, float(self.stepsize), self.inv_metric,
            self.max_treedepth, self.max_delta_h, self._P, self._S)
        info = {"accept_stat": accept, "treedepth": depth, "n_leapfrog": nleap,
                "divergent": bool(div)}
        return xs, lps, gs, info


# ---------------------------------------------------------------------------
# chains


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(chain)])))


def init_state(target, rng, radius=2.0, retries=INIT_RETRIES):
    """Uniform(-radius, radius) draw on the unconstrained scale with a finite
    log density and gradient; redrawn up to ``retries`` times."""
    for _ in range(retries):
        x = rng.uniform(-radius, radius, target.dim)
        logp, g = target.logp_grad(x)
        if math.isfinite(logp) and np.all(np.isfinite(g)):
            return x, logp, g
    raise SamplerError(f"no finite initial log density after {retries} attempts")


def run_chain(target, cfg: SamplerConfig, chain: int = 0) -> ChainResult:
    rng = chain_rng(cfg.seed, chain)
    cpu0, wall0 = time.process_time(), time.perf_counter()
    x, logp, g = init_state(target, rng, cfg.init_radius)
    if cfg.backend == "compiled" and hasattr(target, "compiled"):
        from . import _kernels

        fn, data = target.compiled()
        _kernels.seed(int(np.random.SeedSequence([int(cfg.seed), int(chain)]).generate_state(1)[0]))
        kernel = CompiledNUTS(fn, data, target.dim, max_treedepth=cfg.max_treedepth)
    else:
        kernel = NUTS(target, rng, max_treedepth=cfg.max_treedepth)
    kernel.init_stepsize(x, logp, g)
    adapt = DualAveraging(kernel.stepsize, cfg.target_accept)
    windows = warmup_windows(cfg.warmup)
    window_ends = {stop: start for start, stop in windows}
    window_starts = {start for start, _ in windows}
    buffer = []
    collecting = False
    warm_div = 0
    for it in range(cfg.warmup):
        x, logp, g, info = kernel.transition(x, logp, g)
        warm_div += info["divergent"]
        kernel.stepsize = adapt.update(info["accept_stat"])
        if it in window_starts:
            collecting = True
            buffer = []
        if collecting:
            buffer.append(x)
        if it + 1 in window_ends:
            kernel.inv_metric = regularized_variance(np.asarray(buffer))
            collecting = False
            kernel.init_stepsize(x, logp, g)
            adapt.restart(kernel.stepsize)
    if cfg.warmup > 0:
        kernel.stepsize = adapt.final()
    cpu1, wall1 = time.process_time(), time.perf_counter()

    keep = cfg.retained_per_chain
    draws = np.empty((keep, target.dim))
    logps = np.empty(keep)
    divergent = np.zeros(cfg.iters, dtype=bool)
    depth = np.zeros(cfg.iters, dtype=np.int16)
    nleap = np.zeros(cfg.iters, dtype=np.int32)
    accept = np.zeros(cfg.iters)
    j = 0
    for it in range(cfg.iters):
        x, logp, g, info = kernel.transition(x, logp, g)
        divergent[it] = info["divergent"]
        depth[it] = info["treedepth"]
        nleap[it] = info["n_leapfrog"]
        accept[it] = info["accept_stat"]
        if (it + 1) % cfg.thin == 0 and j < keep:
            draws[j] = x
            logps[j] = logp
            j += 1
    cpu2, wall2 = time.process_time(), time.perf_counter()
    return ChainResult(
        draws=draws, logp=logps, divergent=divergent, treedepth=depth, n_leapfrog=nleap,
        accept_stat=accept, stepsize=kernel.stepsize, inv_metric=kernel.inv_metric.copy(),
        warmup_divergences=int(warm_div),
        warmup_cpu=cpu1 - cpu0, sample_cpu=cpu2 - cpu1,
        warmup_wall=wall1 - wall0, sample_wall=wall2 - wall1,
    )


def _run_chain_job(args):
    target, cfg, chain = args
    return run_chain(target, cfg, chain)


def sample(target, cfg: SamplerConfig) -> list[ChainResult]:
    """Run ``cfg.chains`` independent chains, optionally in worker processes.

    Results do not depend on ``cfg.workers``.
    """
    jobs = [(target, cfg, c) for c in range(cfg.chains)]
    if cfg.workers > 1 and cfg.chains > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.chains)) as pool:
            return list(pool.map(_run_chain_job, jobs))
    return [_run_chain_job(j) for j in jobs]


# ---------------------------------------------------------------------------
# model-level driver


@dataclass
class PosteriorSamples:
    """Retained constrained draws for every chain.

    Arrays have a leading ``(chains, draws)`` shape. ``tau`` and ``alpha``
    are ``None`` when the formulation has no local scales; ``sigma`` is
    ``None`` unless observations are normal with a free ``sigma``.
    """

    theta: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray | None
    tau: np.ndarray | None
    alpha: np.ndarray | None
    unconstrained: np.ndarray
    divergences: np.ndarray  # per chain, sampling phase
    treedepth_hits: np.ndarray  # per chain
    warmup_cpu: np.ndarray
    sample_cpu: np.ndarray
    warmup_wall: np.ndarray
    sample_wall: np.ndarray
    stepsize: np.ndarray
    locations: np.ndarray
    config: SamplerConfig
    extras: dict = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return self.theta.shape[0]

    @property
    def n_draws(self) -> int:
        return self.theta.shape[1]

    def scalar_params(self) -> dict[str, np.ndarray]:
        out = {"gamma": self.gamma}
        if self.sigma is not None:
            out["sigma"] = self.sigma
        return out


def _constrain_chain(model, draws):
    """``(theta, gamma, sigma, tau_all)`` for a ``(draws, dim)`` block."""
    if hasattr(model, "compiled"):
        from ._kernels import constrain_draws

        return constrain_draws(np.ascontiguousarray(draws), model.compiled()[1])
    D = draws.shape[0]
    cps = [model.constrain(draws[d]) for d in range(D)]
    theta = np.array([c.theta for c in cps])
    gamma = np.array([c.gamma for c in cps])
    sigma = np.array([np.nan if c.sigma is None else c.sigma for c in cps])
    tau = np.array([np.concatenate([c.alpha, c.tau]) if c.tau is not None
                    else np.full(theta.shape[1] - 1, c.gamma) for c in cps])
    return theta, tau, gamma, sigma


def collect(model, chains: list[ChainResult], cfg: SamplerConfig) -> PosteriorSamples:
    """Transform unconstrained chain output to constrained draws."""
    from .model import Formulation

    k = model.spec.k
    parts = [_constrain_chain(model, r.draws) for r in chains]
    theta = np.stack([p[0] for p in parts])
    tau_all = np.stack([p[1] for p in parts])
    gamma = np.stack([p[2] for p in parts])
    sigma = np.stack([p[3] for p in parts]) if model.spec.has_sigma else None
    hier = model.formulation is Formulation.HIERARCHICAL
    return PosteriorSamples(
        theta=theta, gamma=gamma, sigma=sigma,
        tau=tau_all[:, :, k - 1:].copy() if hier else None,
        alpha=tau_all[:, :, :k - 1].copy() if hier else None,
        unconstrained=np.stack([r.draws for r in chains]),
        divergences=np.array([int(r.divergent.sum()) for r in chains]),
        treedepth_hits=np.array([int((r.treedepth >= cfg.max_treedepth).sum()) for r in chains]),
        warmup_cpu=np.array([r.warmup_cpu for r in chains]),
        sample_cpu=np.array([r.sample_cpu for r in chains]),
        warmup_wall=np.array([r.warmup_wall for r in chains]),
        sample_wall=np.array([r.sample_wall for r in chains]),
        stepsize=np.array([r.stepsize for r in chains]),
        locations=model.spec.grid.locations.copy(),
        config=cfg,
    )


def nuts_run(spec, y, cfg: SamplerConfig, formulation="hierarchical") -> PosteriorSamples:
    """Fit ``spec`` to ``y`` with NUTS and return constrained draws."""
    from .model import TrendModel

    model = TrendModel(spec, y, formulation)
    chains = sample(model, cfg)
    return collect(model, chains, cfg)
