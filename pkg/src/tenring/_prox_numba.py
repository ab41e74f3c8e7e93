"""Numba kernels for the generalized nonconvex penalties.

Penalty kinds are encoded as integers (see penalties.KIND_CODES); unused
parameters are passed as 0.  The scalar prox enumerates the candidate
minimizers of every branch (stationary points, branch boundaries, 0, and the
flat-region point) and keeps the lowest objective, breaking ties toward the
smaller magnitude.
"""

import math

import numpy as np
from numba import njit

L1, LP, LOG, MCP, CAP_L1, CAP_LP, CAP_LOG, CAP_MCP = 0, 1, 2, 3, 4, 5, 6, 7


@njit(cache=True)
def _psi_base(kind, p, theta, eta, x):
    # uncapped penalties at x >= 0
    if kind == L1:
        return x
    if kind == LP:
        return x ** p
    if kind == LOG:
        return math.log1p(x / theta)
    # MCP
    if x <= eta:
        return x - x * x / (2.0 * eta)
    return eta / 2.0


@njit(cache=True)
def _cap_scale(kind, p, theta, eta, cap):
    # scale c such that the capped penalty is min(1, c * psi_base(x))
    if kind == CAP_L1:
        return 1.0 / cap
    if kind == CAP_LP:
        return 1.0 / cap ** p
    if kind == CAP_LOG:
        return 1.0 / math.log1p(cap / theta)
    return 2.0 * eta / (cap * (2.0 * eta - cap))


@njit(cache=True)
def psi_nonneg(kind, p, theta, eta, cap, x):
    if kind <= MCP:
        return _psi_base(kind, p, theta, eta, x)
    base = kind - 4
    val = _cap_scale(kind, p, theta, eta, cap) * _psi_base(base, p, theta, eta, x)
    return val if val < 1.0 else 1.0


@njit(cache=True)
def psi_eval(kind, p, theta, eta, cap, x):
    return psi_nonneg(kind, p, theta, eta, cap, abs(x))


@njit(cache=True)
def _objective(kind, p, theta, eta, cap, mu, x, t):
    return mu * psi_nonneg(kind, p, theta, eta, cap, x) + 0.5 * (x - t) * (x - t)


@njit(cache=True)
def _lp_root(p, mu, t):
    # interior stationary point of mu*x^p + 0.5(x-t)^2 above the hard threshold,
    # or -1.0 when t is at/below the threshold
    beta = (2.0 * mu * (1.0 - p)) ** (1.0 / (2.0 - p))
    h = beta + mu * p * beta ** (p - 1.0)
    if t <= h:
        return -1.0
    x = t
    for _ in range(100):
        g = x + mu * p * x ** (p - 1.0) - t
        gp = 1.0 + mu * p * (p - 1.0) * x ** (p - 2.0)
        step = g / gp
        x -= step
        if abs(step) < 1e-12:
            break
    return x


@njit(cache=True)
def _log_roots(theta, mu, t):
    # real roots of x^2 + (theta - t) x + (mu - t*theta) = 0
    disc = (t + theta) * (t + theta) - 4.0 * mu
    if disc < 0.0:
        return -1.0, -1.0
    s = math.sqrt(disc)
    return 0.5 * (t - theta + s), 0.5 * (t - theta - s)


@njit(cache=True)
def _mcp_stationary(eta, mu, t):
    denom = 1.0 - mu / eta
    if denom <= 0.0:
        return -1.0
    x = (t - mu) / denom
    if x < 0.0:
        return 0.0
    return x if x < eta else eta


@njit(cache=True)
def prox_nonneg(kind, p, theta, eta, cap, mu, t):
    """argmin_{x>=0} mu*psi(x) + (x-t)^2/2 for t >= 0."""
    if mu == 0.0:
        return t
    if kind == L1:
        x = t - mu
        return x if x > 0.0 else 0.0

    cands = np.empty(6)
    ncand = 0
    cands[ncand] = 0.0
    ncand += 1

    if kind <= MCP:
        mu_e = mu
        hi = t  # minimizer never exceeds t
    else:
        mu_e = mu * _cap_scale(kind, p, theta, eta, cap)
        hi = cap if cap < t else t
        cands[ncand] = hi
        ncand += 1
        # flat region beyond the cap point
        cands[ncand] = t if t > cap else cap
        ncand += 1

    base = kind if kind <= MCP else kind - 4
    if base == L1:
        x = t - mu_e
        if x < 0.0:
            x = 0.0
        cands[ncand] = x if x < hi else hi
        ncand += 1
    elif base == LP:
        x = _lp_root(p, mu_e, t)
        if x > 0.0:
            cands[ncand] = x if x < hi else hi
            ncand += 1
    elif base == LOG:
        r1, r2 = _log_roots(theta, mu_e, t)
        for r in (r1, r2):
            if r > 0.0:
                cands[ncand] = r if r < hi else hi
                ncand += 1
    else:  # MCP
        x = _mcp_stationary(eta, mu_e, t)
        if x >= 0.0:
            cands[ncand] = x if x < hi else hi
            ncand += 1
        cands[ncand] = eta if eta < hi else hi
        ncand += 1
        if t > eta:
            cands[ncand] = t if t < hi else hi
            ncand += 1

    best_x = cands[0]
    best_obj = _objective(kind, p, theta, eta, cap, mu, best_x, t)
    for i in range(1, ncand):
        x = cands[i]
        obj = _objective(kind, p, theta, eta, cap, mu, x, t)
        if obj < best_obj or (obj == best_obj and x < best_x):
            best_obj = obj
            best_x = x
    return best_x


@njit(cache=True)
def prox_scalar(kind, p, theta, eta, cap, mu, v):
    if v >= 0.0:
        return prox_nonneg(kind, p, theta, eta, cap, mu, v)
    return -prox_nonneg(kind, p, theta, eta, cap, mu, -v)


@njit(cache=True)
def prox_array(kind, p, theta, eta, cap, mu, values):
    out = np.empty_like(values)
    flat_in = values.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = prox_scalar(kind, p, theta, eta, cap, mu, flat_in[i])
    return out


@njit(cache=True)
def psi_eval_array(kind, p, theta, eta, cap, values):
    out = np.empty_like(values)
    flat_in = values.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = psi_nonneg(kind, p, theta, eta, cap, abs(flat_in[i]))
    return out


@njit(cache=True)
def tube_threshold(kind, p, theta, eta, cap, lam, t3d):
    n1, n2, n3 = t3d.shape
    out = np.zeros_like(t3d)
    for i in range(n1):
        for j in range(n2):
            s = 0.0
            for b in range(n3):
                s += t3d[i, j, b] * t3d[i, j, b]
            nrm = math.sqrt(s)
            if nrm > 0.0:
                scale = prox_nonneg(kind, p, theta, eta, cap, lam, nrm) / nrm
                if scale != 0.0:
                    for b in range(n3):
                        out[i, j, b] = scale * t3d[i, j, b]
    return out
