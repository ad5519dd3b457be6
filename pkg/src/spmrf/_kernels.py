"""Compiled (numba) kernels: the trend log-posterior and a NUTS transition.

The NUTS transition is generic over any jitted ``fn(x, data) -> (logp, grad)``.
Subtrees are built iteratively: leaf momenta and their running sums are kept
in preallocated buffers, so the U-turn checks of every completed sub-subtree
can be evaluated as soon as its last leaf is added. Within a subtree the
proposal is chosen by progressive multinomial sampling, which gives each leaf
the same selection probability as the recursive merge scheme.

Random numbers come from numba's internal generator; :func:`seed` resets it.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
HALF_LOG_2PI = 0.5 * LOG_2PI
LOG_2 = math.log(2.0)
SQRT_2 = math.sqrt(2.0)

# integer parameter slots
I_N, I_K, I_PRIOR, I_MARGINAL, I_OBS, I_HAS_GAMMA, I_HAS_SIGMA = range(7)
I_NU_LOCAL, I_ETA_LOCAL, I_GAMMA, I_SIGMA, I_DIM, I_REGULAR = range(7, 13)
N_INT = 13
# float parameter slots
F_MU, F_OMEGA, F_ZETA, F_SIGMA_SCALE, F_FIXED_GAMMA, F_FIXED_SIGMA, F_LIK_CONST = range(7)
N_FLOAT = 7

PRIOR_CODES = {"normal": 0, "laplace": 1, "horseshoe": 2}
OBS_CODES = {"normal": 0, "poisson": 1, "binomial": 2}


@nb.njit(cache=True, error_model="numpy")
def seed(s):
    np.random.seed(s)


@nb.njit(cache=True, error_model="numpy")
def _softplus(t):
    if t > 0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@nb.njit(cache=True, error_model="numpy")
def _expit(t):
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@nb.njit(cache=True, error_model="numpy")
def _sign(v):
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


@nb.njit(cache=True, error_model="numpy")
def trend_logp_grad(x, data):
    ip, fp, y, m, sqrt_d, r = data
    n = ip[I_N]
    k = ip[I_K]
    prior = ip[I_PRIOR]
    marginal = ip[I_MARGINAL] == 1
    obs = ip[I_OBS]
    grad = np.zeros(x.size)
    lp = 0.0

    # global and noise scales
    if ip[I_HAS_GAMMA] == 1:
        o = ip[I_GAMMA]
        gnu, geta = x[o], x[o + 1]
        groot = math.exp(0.5 * geta)
        gamma = fp[F_ZETA] * abs(gnu) * groot
        lp += -LOG_2PI - 0.5 * gnu * gnu - 0.5 * geta - 0.5 * math.exp(-geta)
    else:
        gnu = geta = groot = 0.0
        gamma = fp[F_FIXED_GAMMA]
    sigma = 1.0
    snu = seta = sroot = 0.0
    if obs == 0:
        if ip[I_HAS_SIGMA] == 1:
            o = ip[I_SIGMA]
            snu, seta = x[o], x[o + 1]
            sroot = math.exp(0.5 * seta)
            sigma = fp[F_SIGMA_SCALE] * abs(snu) * sroot
            lp += -LOG_2PI - 0.5 * snu * snu - 0.5 * seta - 0.5 * math.exp(-seta)
        else:
            sigma = fp[F_FIXED_SIGMA]

    # local scales and the scaled increments
    ns = n - 1
    tau = np.empty(ns)
    onu = ip[I_NU_LOCAL]
    oeta = ip[I_ETA_LOCAL]
    if marginal or prior == 0:
        for j in range(ns):
            tau[j] = gamma
    elif prior == 1:
        for j in range(ns):
            tau[j] = SQRT_2 * gamma * math.exp(0.5 * x[oeta + j])
    else:
        for j in range(ns):
            tau[j] = gamma * abs(x[onu + j]) * math.exp(0.5 * x[oeta + j])
    b = np.empty(n)
    b[0] = fp[F_MU] + fp[F_OMEGA] * x[0]
    for j in range(ns):
        b[j + 1] = sqrt_d[j] * tau[j] * x[j + 1]

    # theta = L^{-1} b
    theta = np.empty(n)
    theta[0] = b[0]
    if k == 1:
        for i in range(1, n):
            theta[i] = theta[i - 1] + b[i]
    else:
        D = b[1]
        theta[1] = theta[0] + D
        for j in range(1, n - 1):
            D = r[j - 1] * D + b[j + 1]
            theta[j + 1] = theta[j] + D

    # likelihood
    gth = np.empty(n)
    g_sigma = 0.0
    ll = fp[F_LIK_CONST]
    if obs == 0:
        ss = 0.0
        inv2 = 1.0 / (sigma * sigma)
        for i in range(n):
            res = y[i] - theta[i]
            ss += res * res
            gth[i] = res * inv2
        ll += -n * math.log(sigma) - 0.5 * ss * inv2
        g_sigma = -n / sigma + ss / (sigma * sigma * sigma)
    elif obs == 1:
        for i in range(n):
            rate = math.exp(theta[i])
            ll += y[i] * theta[i] - rate
            gth[i] = y[i] - rate
    else:
        for i in range(n):
            ll += y[i] * theta[i] - m[i] * _softplus(theta[i])
            gth[i] = y[i] - m[i] * _expit(theta[i])

    # adjoint: g_b = L^{-T} g_theta
    gb = np.empty(n)
    rc = np.empty(n + 1)
    rc[n] = 0.0
    for i in range(n - 1, -1, -1):
        rc[i] = rc[i + 1] + gth[i]
    gb[0] = rc[0]
    if k == 1:
        for i in range(1, n):
            gb[i] = rc[i]
    else:
        lam = rc[n - 1]
        gb[n - 1] = lam
        for j in range(n - 3, -1, -1):
            lam = rc[j + 1] + r[j] * lam
            gb[j + 1] = lam

    # standardised coordinates
    z0 = x[0]
    lp += -HALF_LOG_2PI - 0.5 * z0 * z0
    grad[0] = gb[0] * fp[F_OMEGA] - z0
    marginal_laplace = marginal and prior == 1
    for j in range(ns):
        zj = x[j + 1]
        s = sqrt_d[j] * tau[j]
        if marginal_laplace:
            lp += -LOG_2 - abs(zj)
            grad[j + 1] = gb[j + 1] * s - _sign(zj)
        else:
            lp += -HALF_LOG_2PI - 0.5 * zj * zj
            grad[j + 1] = gb[j + 1] * s - zj

    # local-scale auxiliaries; g_gamma collects d logp / d gamma
    g_gamma = 0.0
    if marginal or prior == 0:
        for j in range(ns):
            g_gamma += gb[j + 1] * x[j + 1] * sqrt_d[j]
    elif prior == 1:
        for j in range(ns):
            eta = x[oeta + j]
            e = math.exp(eta)
            gt = gb[j + 1] * x[j + 1] * sqrt_d[j]
            lp += eta - e
            grad[oeta + j] = 0.5 * gt * tau[j] + 1.0 - e
            g_gamma += gt * tau[j]
        g_gamma /= gamma
    else:
        for j in range(ns):
            nu = x[onu + j]
            eta = x[oeta + j]
            eme = math.exp(-eta)
            gt = gb[j + 1] * x[j + 1] * sqrt_d[j]
            lp += -LOG_2PI - 0.5 * nu * nu - 0.5 * eta - 0.5 * eme
            grad[onu + j] = gt * gamma * _sign(nu) * math.exp(0.5 * eta) - nu
            grad[oeta + j] = 0.5 * gt * tau[j] - 0.5 + 0.5 * eme
            g_gamma += gt * tau[j]
        g_gamma /= gamma

    if ip[I_HAS_GAMMA] == 1:
        o = ip[I_GAMMA]
        grad[o] = g_gamma * fp[F_ZETA] * _sign(gnu) * groot - gnu
        grad[o + 1] = 0.5 * g_gamma * gamma - 0.5 + 0.5 * math.exp(-geta)
    if obs == 0 and ip[I_HAS_SIGMA] == 1:
        o = ip[I_SIGMA]
        grad[o] = g_sigma * fp[F_SIGMA_SCALE] * _sign(snu) * sroot - snu
        grad[o + 1] = 0.5 * g_sigma * sigma - 0.5 + 0.5 * math.exp(-seta)
    return lp + ll, grad


@nb.njit(cache=True, error_model="numpy")
def trend_theta(x, data):
    """Latent trend and scales: ``(theta, tau_all, gamma, sigma)``."""
    ip, fp, y, m, sqrt_d, r = data
    n = ip[I_N]
    k = ip[I_K]
    prior = ip[I_PRIOR]
    if ip[I_HAS_GAMMA] == 1:
        o = ip[I_GAMMA]
        gamma = fp[F_ZETA] * abs(x[o]) * math.exp(0.5 * x[o + 1])
    else:
        gamma = fp[F_FIXED_GAMMA]
    sigma = np.nan
    if ip[I_OBS] == 0:
        if ip[I_HAS_SIGMA] == 1:
            o = ip[I_SIGMA]
            sigma = fp[F_SIGMA_SCALE] * abs(x[o]) * math.exp(0.5 * x[o + 1])
        else:
            sigma = fp[F_FIXED_SIGMA]
    ns = n - 1
    tau = np.empty(ns)
    for j in range(ns):
        if ip[I_MARGINAL] == 1 or prior == 0:
            tau[j] = gamma
        elif prior == 1:
            tau[j] = SQRT_2 * gamma * math.exp(0.5 * x[ip[I_ETA_LOCAL] + j])
        else:
            tau[j] = gamma * abs(x[ip[I_NU_LOCAL] + j]) * math.exp(0.5 * x[ip[I_ETA_LOCAL] + j])
    theta = np.empty(n)
    theta[0] = fp[F_MU] + fp[F_OMEGA] * x[0]
    if k == 1:
        for i in range(1, n):
            theta[i] = theta[i - 1] + sqrt_d[i - 1] * tau[i - 1] * x[i]
    else:
        D = sqrt_d[0] * tau[0] * x[1]
        theta[1] = theta[0] + D
        for j in range(1, n - 1):
            D = r[j - 1] * D + sqrt_d[j] * tau[j] * x[j + 1]
            theta[j + 1] = theta[j] + D
    return theta, tau, gamma, sigma


@nb.njit(cache=True, error_model="numpy")
def constrain_draws(draws, data):
    """Row-wise :func:`trend_theta` over a ``(draws, dim)`` matrix."""
    ip = data[0]
    n = ip[I_N]
    D = draws.shape[0]
    theta = np.empty((D, n))
    tau = np.empty((D, n - 1))
    gamma = np.empty(D)
    sigma = np.empty(D)
    for d in range(D):
        th, ta, g, s = trend_theta(draws[d], data)
        theta[d] = th
        tau[d] = ta
        gamma[d] = g
        sigma[d] = s
    return theta, tau, gamma, sigma


# ---------------------------------------------------------------------------
# NUTS


@nb.njit(cache=True, error_model="numpy")
def momentum(inv_metric):
    p = np.empty(inv_metric.size)
    for i in range(p.size):
        p[i] = np.random.standard_normal() / math.sqrt(inv_metric[i])
    return p


@nb.njit(cache=True, error_model="numpy")
def _hamiltonian(logp, p, inv_metric):
    kin = 0.0
    for i in range(p.size):
        kin += p[i] * inv_metric[i] * p[i]
    h = -logp + 0.5 * kin
    if math.isfinite(h):
        return h
    return np.inf


@nb.njit(cache=True, error_model="numpy")
def leapfrog(fn, data, x, p, g, eps, inv_metric):
    d = x.size
    p1 = np.empty(d)
    x1 = np.empty(d)
    for i in range(d):
        p1[i] = p[i] + 0.5 * eps * g[i]
        x1[i] = x[i] + eps * inv_metric[i] * p1[i]
    logp, g1 = fn(x1, data)
    for i in range(d):
        p1[i] += 0.5 * eps * g1[i]
    return x1, p1, g1, logp


@nb.njit(cache=True, error_model="numpy")
def _crit(ps_minus, ps_plus, rho):
    a = 0.0
    b = 0.0
    for i in range(rho.size):
        a += ps_plus[i] * rho[i]
        b += ps_minus[i] * rho[i]
    return a > 0.0 and b > 0.0


@nb.njit(cache=True, error_model="numpy")
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    hi = max(a, b)
    return hi + math.log1p(math.exp(-abs(a - b)))


@nb.njit(cache=True, error_model="numpy")
def transition(fn, data, x, logp, g, eps, inv_metric, max_depth, max_delta_h, P, S):
    """One multinomial NUTS iteration.

    ``P`` is a ``(2**max_depth, dim)`` leaf-momentum buffer and ``S`` a
    ``(2**max_depth + 1, dim)`` buffer of running momentum sums.

    Returns ``(x, logp, g, accept_stat, depth, n_leapfrog, divergent)``.
    """
    d = x.size
    p0 = momentum(inv_metric)
    h0 = _hamiltonian(logp, p0, inv_metric)
    xf, pf, gf, lpf = x, p0, g, logp
    xb, pb, gb, lpb = x, p0, g, logp
    ps_front = inv_metric * p0
    ps_back = ps_front.copy()
    p_front = p0
    p_back = p0
    rho = p0.copy()
    log_w = 0.0
    xs, lps, gs = x, logp, g
    n_leap = 0
    acc_sum = 0.0
    divergent = False
    depth = 0
    while depth < max_depth:
        forward = np.random.random() > 0.5
        sign = 1.0 if forward else -1.0
        if forward:
            xc, pc, gc, lpc = xf, pf, gf, lpf
        else:
            xc, pc, gc, lpc = xb, pb, gb, lpb
        # build a subtree of 2**depth leaves
        n_leaves = 1 << depth
        sub_lw = -np.inf
        sx, slp, sg = xc, lpc, gc
        valid = True
        for i in range(d):
            S[0, i] = 0.0
        for leaf in range(n_leaves):
            xc, pc, gc, lpc = leapfrog(fn, data, xc, pc, gc, sign * eps, inv_metric)
            n_leap += 1
            h = _hamiltonian(lpc, pc, inv_metric)
            if h - h0 > max_delta_h:
                divergent = True
                valid = False
                break
            lw = h0 - h
            acc_sum += 1.0 if lw > 0 else math.exp(lw)
            new_lw = _logaddexp(sub_lw, lw)
            if np.random.random() < math.exp(lw - new_lw):
                sx, slp, sg = xc, lpc, gc
            sub_lw = new_lw
            for i in range(d):
                P[leaf, i] = pc[i]
                S[leaf + 1, i] = S[leaf, i] + pc[i]
            # U-turn checks for every sub-subtree completed by this leaf
            size = 2
            while (leaf + 1) % size == 0 and size <= n_leaves:
                a = leaf + 1 - size
                mid = a + size // 2 - 1
                rho_ab = S[leaf + 1] - S[a]
                ps_a = inv_metric * P[a]
                ps_b = inv_metric * P[leaf]
                ok = _crit(ps_a, ps_b, rho_ab)
                if ok:
                    ok = _crit(ps_a, inv_metric * P[mid + 1], S[mid + 1] - S[a] + P[mid + 1])
                if ok:
                    ok = _crit(inv_metric * P[mid], ps_b, S[leaf + 1] - S[mid + 1] + P[mid])
                if not ok:
                    valid = False
                    break
                size *= 2
            if not valid:
                break
        if not valid:
            break
        depth += 1
        if sub_lw > log_w or np.random.random() < math.exp(sub_lw - log_w):
            xs, lps, gs = sx, slp, sg
        log_w = _logaddexp(log_w, sub_lw)
        sub_rho = S[n_leaves].copy()
        sub_pbeg = P[0].copy()
        sub_pend = P[n_leaves - 1].copy()
        ps_beg = inv_metric * sub_pbeg
        ps_end = inv_metric * sub_pend
        rho_old = rho
        rho = rho_old + sub_rho
        if forward:
            xf, pf, gf, lpf = xc, pc, gc, lpc
            persist = (_crit(ps_back, ps_end, rho)
                       and _crit(ps_back, ps_beg, rho_old + sub_pbeg)
                       and _crit(ps_front, ps_end, sub_rho + p_front))
            p_front = sub_pend
            ps_front = ps_end
        else:
            xb, pb, gb, lpb = xc, pc, gc, lpc
            persist = (_crit(ps_end, ps_front, rho)
                       and _crit(ps_end, ps_back, sub_rho + p_back)
                       and _crit(ps_beg, ps_front, rho_old + sub_pbeg))
            p_back = sub_pend
            ps_back = ps_end
        if not persist:
            break
    accept = acc_sum / n_leap if n_leap > 0 else 0.0
    return xs, lps, gs, accept, depth, n_leap, divergent
