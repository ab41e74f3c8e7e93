"""Generalized nonconvex penalties, their scalar proximal operators, and the
entrywise / tubewise thresholding operator built on them.

Eight penalty families are supported: L1, Lp (0<p<1), Log, MCP, and their
capped variants, which saturate at 1 beyond the cap point.  All are even,
zero at zero, and nondecreasing on [0, inf).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import kernels

KIND_CODES = {
    "L1": 0,
    "Lp": 1,
    "Log": 2,
    "MCP": 3,
    "CappedL1": 4,
    "CappedLp": 5,
    "CappedLog": 6,
    "CappedMCP": 7,
}

_NEEDS_P = {"Lp", "CappedLp"}
_NEEDS_THETA = {"Log", "CappedLog"}
_NEEDS_ETA = {"MCP", "CappedMCP"}
_CAPPED = {"CappedL1", "CappedLp", "CappedLog", "CappedMCP"}


@dataclass(frozen=True)
class PenaltySpec:
    """One penalty function psi with its parameters.

    p: exponent for Lp/CappedLp, in (0, 1).
    theta: scale for Log/CappedLog, > 0.
    eta: knee for MCP/CappedMCP, > 0.
    cap: saturation point for capped kinds, > 0 (and < eta for CappedMCP).
    """

    kind: str
    p: float = 0.5
    theta: float = 0.1
    eta: float = 2.0
    cap: float = 1.0

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind in _NEEDS_P and not (0.0 < self.p < 1.0):
            raise ValueError(f"{self.kind} requires 0 < p < 1, got {self.p}")
        if self.kind in _NEEDS_THETA and not (self.theta > 0.0):
            raise ValueError(f"{self.kind} requires theta > 0, got {self.theta}")
        if self.kind in _NEEDS_ETA and not (self.eta > 0.0):
            raise ValueError(f"{self.kind} requires eta > 0, got {self.eta}")
        if self.kind in _CAPPED and not (self.cap > 0.0):
            raise ValueError(f"{self.kind} requires cap > 0, got {self.cap}")
        if self.kind == "CappedMCP" and not (self.cap < self.eta):
            raise ValueError(f"CappedMCP requires cap < eta, got cap={self.cap}, eta={self.eta}")

    @property
    def code(self):
        return KIND_CODES[self.kind]

    def _args(self):
        return self.code, float(self.p), float(self.theta), float(self.eta), float(self.cap)


def eval_penalty(spec: PenaltySpec, x):
    """psi(x) for a scalar x."""
    return float(kernels().psi_eval(*spec._args(), float(x)))


def eval_penalty_array(spec: PenaltySpec, values):
    """psi applied entrywise to an array."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    return kernels().psi_eval_array(*spec._args(), values)


def prox(spec: PenaltySpec, mu, v):
    """Global minimizer of mu*psi(x) + (x - v)^2 / 2."""
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    return float(kernels().prox_scalar(*spec._args(), float(mu), float(v)))


def prox_array(spec: PenaltySpec, mu, values):
    """prox applied entrywise to an array."""
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    values = np.ascontiguousarray(values, dtype=np.float64)
    return kernels().prox_array(*spec._args(), float(mu), values)


def prox_objective(spec: PenaltySpec, mu, x, v):
    """mu*psi(x) + (x - v)^2 / 2, the quantity prox minimizes."""
    return mu * eval_penalty(spec, x) + 0.5 * (x - v) ** 2


def brute_force_prox(spec: PenaltySpec, mu, v, grid_width=1e-4):
    """Test oracle: grid minimizer over [0, |v|] refined by trisection.

    Independent of the closed-form prox path; the grid is evaluated with the
    exact penalty, then the best cell is narrowed to width 1e-10.
    """
    if grid_width <= 0:
        raise ValueError("grid_width must be positive")
    t = abs(float(v))
    if t == 0.0:
        return 0.0
    grid = np.arange(0.0, t + grid_width, grid_width)
    grid[-1] = t
    objs = mu * eval_penalty_array(spec, grid) + 0.5 * (grid - t) ** 2
    i = int(np.argmin(objs))
    lo = max(0.0, grid[i] - grid_width)
    hi = min(t, grid[i] + grid_width)

    def fdiff(a, b):
        # f(a) - f(b) with the quadratic part in product form, so comparisons
        # stay meaningful far below the absolute objective scale
        return (mu * (eval_penalty(spec, a) - eval_penalty(spec, b))
                + 0.5 * (a + b - 2.0 * t) * (a - b))

    while hi - lo > 1e-10:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if fdiff(m1, m2) <= 0:
            hi = m2
        else:
            lo = m1
    best = 0.5 * (lo + hi)
    for x in (0.0, t, float(grid[i])):
        if fdiff(x, best) < 0:
            best = x
    return float(np.sign(v) * best)


def threshold_tensor(a, spec: PenaltySpec, lam, mode):
    """Generalized thresholding of a tensor.

    mode='entrywise' applies prox to every entry; mode='tubewise' shrinks the
    Frobenius norm of each mode-3 tube and rescales it, mapping zero tubes to
    zero.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    a = np.ascontiguousarray(a, dtype=np.float64)
    if mode == "entrywise":
        return kernels().prox_array(*spec._args(), float(lam), a)
    if mode == "tubewise":
        if a.ndim != 3:
            raise ValueError("tubewise thresholding requires an order-3 tensor")
        return kernels().tube_threshold(*spec._args(), float(lam), a)
    raise ValueError(f"mode must be 'entrywise' or 'tubewise', got {mode!r}")
