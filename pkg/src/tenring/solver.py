"""ADMM solver for the tensor-ring anomaly detection model.

The observed cube M splits into a background B and an anomaly tensor E.  In
the default mode the background is a tensor ring whose core gradients are
split into a spectrally penalized low-rank part L and an entrywise-sparse
residual S; E carries a tubewise group-sparsity penalty.  Alternative
regularizer modes swap the background prior: the spectral penalty can act
directly on the gradients of B, or on the mode-2 unfoldings of the cores.
"""

from dataclasses import dataclass, field

import numpy as np

from .penalties import PenaltySpec, prox_array, threshold_tensor
from .ring import TRCores, random_init, subchain_matrix, tr_contract
from .tensor import (check_tensor3, diff_eigenvalues, fold_k, frobenius,
                     gradient, gradient_adjoint, mode_k_unfold,
                     reversed_mode_k_unfold)
from .transforms import TransformSpec, gntsvt

__all__ = [
    "SolverConfig", "SolverState", "TraceRecord", "SolveOutput", "SolverAbort",
    "solve", "detection_map", "update_cores", "update_sparse_parts",
    "update_lowrank_parts", "update_anomaly", "update_multipliers",
    "config_to_dict", "config_from_dict",
]

REGULARIZER_MODES = ("EUNTRFR", "UNTRFR", "GNTCTV_direct", "EGNTCTV_direct",
                     "GNCTV_unfold")


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters; defaults follow the reference configuration
    (mu0=1e-3, mu growth 1.1 capped at 1e10, tolerance 1e-5, 500 iterations,
    FFT transform, Capped-Log penalties)."""

    alpha: float = 1e-3
    beta: float = 5e-3
    ranks: tuple = (6, 6, 6)
    phi: PenaltySpec = field(default_factory=lambda: PenaltySpec("CappedLog"))
    psi: PenaltySpec = field(default_factory=lambda: PenaltySpec("CappedLog"))
    transform: str = "fft"
    gamma_set: tuple = (1, 2, 3)
    mu0: float = 1e-3
    mu_max: float = 1e10
    growth: float = 1.1
    tol: float = 1e-5
    max_iter: int = 500
    seed: int = 0
    regularizer_mode: str = "EUNTRFR"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if len(self.ranks) != 3 or any(r < 1 for r in self.ranks):
            raise ValueError(f"ranks must be three positive integers, got {self.ranks}")
        gs = tuple(sorted(set(int(k) for k in self.gamma_set)))
        if not gs or any(k not in (1, 2, 3) for k in gs):
            raise ValueError(f"gamma_set must be a nonempty subset of {{1,2,3}}, got {self.gamma_set}")
        object.__setattr__(self, "gamma_set", gs)
        if self.transform not in ("fft", "dct", "identity"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.mu0 <= 0 or self.mu_max < self.mu0:
            raise ValueError("require 0 < mu0 <= mu_max")
        if self.growth < 1.0:
            raise ValueError(f"growth must be >= 1, got {self.growth}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.regularizer_mode not in REGULARIZER_MODES:
            raise ValueError(f"regularizer_mode must be one of {REGULARIZER_MODES}, "
                             f"got {self.regularizer_mode!r}")

    @property
    def gamma(self):
        return len(self.gamma_set)


@dataclass
class SolverState:
    """All ADMM variables for the ring-based modes."""

    cores: TRCores
    L: dict                  # (n, k) -> tensor of core-n shape
    S: dict
    Q: dict
    E: np.ndarray
    Y: np.ndarray
    mu: float
    iteration: int = 0
    regularized: bool = False


@dataclass
class TraceRecord:
    iteration: int
    error: float
    fit_residual: float      # ||M - B - E||_F with B the model background
    split_residual: float    # max over split constraints ||target - L - S||_F
    mu: float
    regularized: bool = False


@dataclass
class SolveOutput:
    background: np.ndarray
    anomaly: np.ndarray
    detection_map: np.ndarray
    trace: list
    converged: bool
    iterations: int
    state: object = None


class SolverAbort(RuntimeError):
    """Raised when an iterate goes non-finite; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def detection_map(E):
    """Per-pixel Frobenius norm of the anomaly tube."""
    E = np.asarray(E, dtype=np.float64)
    return np.sqrt((E * E).sum(axis=2))


def _penalty_dict(spec: PenaltySpec):
    return {"kind": spec.kind, "p": spec.p, "theta": spec.theta,
            "eta": spec.eta, "cap": spec.cap}


def config_to_dict(config: SolverConfig):
    return {
        "alpha": config.alpha, "beta": config.beta, "ranks": list(config.ranks),
        "phi": _penalty_dict(config.phi), "psi": _penalty_dict(config.psi),
        "transform": config.transform, "gamma_set": list(config.gamma_set),
        "mu0": config.mu0, "mu_max": config.mu_max, "growth": config.growth,
        "tol": config.tol, "max_iter": config.max_iter, "seed": config.seed,
        "regularizer_mode": config.regularizer_mode,
    }


def config_from_dict(d):
    d = dict(d)
    d["ranks"] = tuple(d["ranks"])
    d["gamma_set"] = tuple(d["gamma_set"])
    d["phi"] = PenaltySpec(**d["phi"])
    d["psi"] = PenaltySpec(**d["psi"])
    return SolverConfig(**d)


def _core_transform_spec(config, core):
    return TransformSpec(config.transform, core.shape[2])


def solve_sylvester(a_eigs, bmat, c):
    """Solve A X + X B = C with A the circulant difference Gram matrix given
    by its DFT eigenvalues (zeros when the gradient term is absent) and B
    symmetric PSD.  Returns (X, regularized)."""
    om, v = np.linalg.eigh(bmat)
    regularized = False
    if float(a_eigs.min()) + float(om.min()) < 1e-12:
        om = om + 1e-12
        regularized = True
    ct = np.fft.fft(c @ v, axis=0)
    xt = ct / (a_eigs[:, None] + om[None, :])
    x = np.fft.ifft(xt, axis=0).real @ v.T
    return x, regularized


def init_state(M, config: SolverConfig):
    """Zero-initialized splits and multipliers, standard-normal cores."""
    dims = M.shape
    cores = random_init(dims, config.ranks, config.seed)
    zeros = lambda n: np.zeros_like(cores.cores[n - 1])
    L = {(n, k): zeros(n) for n in (1, 2, 3) for k in config.gamma_set}
    S = {key: np.zeros_like(val) for key, val in L.items()}
    Q = {key: np.zeros_like(val) for key, val in L.items()}
    return SolverState(cores=cores, L=L, S=S, Q=Q,
                       E=np.zeros(dims), Y=np.zeros(dims), mu=config.mu0)


def update_cores(state: SolverState, M, config: SolverConfig):
    """Per-core Sylvester solve coupling the fit term with the mode-2
    gradient split (when direction 2 is active)."""
    mu = state.mu
    F = M - state.E + state.Y / mu
    has_grad = 2 in config.gamma_set
    for n in (1, 2, 3):
        core = state.cores.cores[n - 1]
        rn, nn, rn1 = core.shape
        r1 = subchain_matrix(state.cores, n)
        c = reversed_mode_k_unfold(F, n) @ r1.T
        if has_grad:
            g = (mode_k_unfold(state.L[(n, 2)], 2) + mode_k_unfold(state.S[(n, 2)], 2)
                 - mode_k_unfold(state.Q[(n, 2)], 2) / mu)
            c = c + (np.roll(g, 1, axis=0) - g)     # D^T g
            a_eigs = diff_eigenvalues(nn)
        else:
            a_eigs = np.zeros(nn)
        x, reg = solve_sylvester(a_eigs, r1 @ r1.T, c)
        state.regularized = state.regularized or reg
        state.cores.cores[n - 1] = fold_k(x, (rn, nn, rn1), 2)
    return state


def update_sparse_parts(state: SolverState, config: SolverConfig):
    """Entrywise shrinkage of the gradient-split residuals."""
    lam = config.alpha / state.mu
    for (n, k), s in state.S.items():
        target = (gradient(state.cores.cores[n - 1], k) - state.L[(n, k)]
                  + state.Q[(n, k)] / state.mu)
        state.S[(n, k)] = threshold_tensor(target, config.psi, lam, "entrywise")
    return state


def update_lowrank_parts(state: SolverState, config: SolverConfig):
    """Spectral shrinkage (GNTSVT) of the gradient-split low-rank parts."""
    tau = 1.0 / (config.gamma * state.mu)
    for (n, k) in state.L:
        core = state.cores.cores[n - 1]
        target = gradient(core, k) - state.S[(n, k)] + state.Q[(n, k)] / state.mu
        state.L[(n, k)] = gntsvt(target, _core_transform_spec(config, core),
                                 config.phi, tau)
    return state


def update_anomaly(state: SolverState, M, config: SolverConfig):
    """Tubewise shrinkage of the fit residual."""
    target = M - tr_contract(state.cores) + state.Y / state.mu
    state.E = threshold_tensor(target, config.psi, config.beta / state.mu, "tubewise")
    return state


def update_multipliers(state: SolverState, M, config: SolverConfig):
    """Dual ascent on both constraint families, then grow mu."""
    mu = state.mu
    state.Y = state.Y + mu * (M - tr_contract(state.cores) - state.E)
    for (n, k), q in state.Q.items():
        resid = (gradient(state.cores.cores[n - 1], k)
                 - state.L[(n, k)] - state.S[(n, k)])
        state.Q[(n, k)] = q + mu * resid
    state.mu = min(config.mu_max, config.growth * mu)
    return state


def _relative_change(b_new, b_prev):
    denom = frobenius(b_prev)
    diff = frobenius(b_new - b_prev)
    return diff / denom if denom > 1e-30 else diff


def _check_finite(arrays, trace):
    for a in arrays:
        if not np.isfinite(a).all():
            raise SolverAbort("solver iterate went non-finite", trace)


def _split_residual_ring(state):
    worst = 0.0
    for (n, k) in state.L:
        r = (gradient(state.cores.cores[n - 1], k)
             - state.L[(n, k)] - state.S[(n, k)])
        worst = max(worst, frobenius(r))
    return worst


def _solve_ring(M, config, progress, keep_state):
    with_sparse = config.regularizer_mode == "EUNTRFR"
    state = init_state(M, config)
    b_prev = tr_contract(state.cores)
    trace = []
    converged = False
    B = b_prev
    for it in range(1, config.max_iter + 1):
        state.regularized = False
        mu_used = state.mu
        update_cores(state, M, config)
        if with_sparse:
            update_sparse_parts(state, config)
        update_lowrank_parts(state, config)
        update_anomaly(state, M, config)
        split_res = _split_residual_ring(state)
        update_multipliers(state, M, config)
        B = tr_contract(state.cores)
        fit_res = frobenius(M - B - state.E)
        error = _relative_change(B, b_prev)
        state.iteration = it
        rec = TraceRecord(iteration=it, error=error, fit_residual=fit_res,
                          split_residual=split_res, mu=mu_used,
                          regularized=state.regularized)
        trace.append(rec)
        _check_finite([B, state.E], trace)
        if progress is not None:
            progress(rec)
        if error <= config.tol:
            converged = True
            break
        b_prev = B
    return SolveOutput(background=B, anomaly=state.E,
                       detection_map=detection_map(state.E), trace=trace,
                       converged=converged, iterations=len(trace),
                       state=state if keep_state else None)


def _grad_weights(dims, gamma_set):
    """3-D spectrum of I + sum_k D_k^T D_k for the direct-background update."""
    w = np.ones(dims)
    for k in gamma_set:
        lam = diff_eigenvalues(dims[k - 1])
        shape = [1, 1, 1]
        shape[k - 1] = dims[k - 1]
        w = w + lam.reshape(shape)
    return w


def _solve_direct(M, config, progress, keep_state):
    """Spectral penalty on the gradients of a free background tensor."""
    enhanced = config.regularizer_mode == "EGNTCTV_direct"
    dims = M.shape
    spec = TransformSpec(config.transform, dims[2])
    gs = config.gamma_set
    B = np.zeros(dims)
    L = {k: np.zeros(dims) for k in gs}
    S = {k: np.zeros(dims) for k in gs}
    Q = {k: np.zeros(dims) for k in gs}
    E = np.zeros(dims)
    Y = np.zeros(dims)
    mu = config.mu0
    weights = _grad_weights(dims, gs)
    trace = []
    converged = False
    b_prev = B
    for it in range(1, config.max_iter + 1):
        mu_used = mu
        rhs = M - E + Y / mu
        for k in gs:
            rhs = rhs + gradient_adjoint(L[k] + S[k] - Q[k] / mu, k)
        B = np.fft.ifftn(np.fft.fftn(rhs) / weights).real
        if enhanced:
            for k in gs:
                target = gradient(B, k) - L[k] + Q[k] / mu
                S[k] = threshold_tensor(target, config.psi, config.alpha / mu,
                                        "entrywise")
        tau = 1.0 / (config.gamma * mu)
        for k in gs:
            target = gradient(B, k) - S[k] + Q[k] / mu
            L[k] = gntsvt(target, spec, config.phi, tau)
        E = threshold_tensor(M - B + Y / mu, config.psi, config.beta / mu,
                             "tubewise")
        split_res = max(frobenius(gradient(B, k) - L[k] - S[k]) for k in gs)
        Y = Y + mu * (M - B - E)
        for k in gs:
            Q[k] = Q[k] + mu * (gradient(B, k) - L[k] - S[k])
        mu = min(config.mu_max, config.growth * mu)
        fit_res = frobenius(M - B - E)
        error = _relative_change(B, b_prev)
        rec = TraceRecord(iteration=it, error=error, fit_residual=fit_res,
                          split_residual=split_res, mu=mu_used)
        trace.append(rec)
        _check_finite([B, E], trace)
        if progress is not None:
            progress(rec)
        if error <= config.tol:
            converged = True
            break
        b_prev = B
    final = {"B": B, "L": L, "S": S, "Q": Q, "E": E, "Y": Y, "mu": mu}
    return SolveOutput(background=B, anomaly=E, detection_map=detection_map(E),
                       trace=trace, converged=converged, iterations=len(trace),
                       state=final if keep_state else None)


def _solve_unfold(M, config, progress, keep_state):
    """Matrix-level spectral penalty on the mode-2 gradient of each core's
    unfolding (no tensor transform involved)."""
    state = init_state(M, config)
    cores = state.cores
    Z = {n: np.zeros((cores.cores[n - 1].shape[1],
                      cores.cores[n - 1].shape[0] * cores.cores[n - 1].shape[2]))
         for n in (1, 2, 3)}
    Qm = {n: np.zeros_like(Z[n]) for n in (1, 2, 3)}
    E = np.zeros(M.shape)
    Y = np.zeros(M.shape)
    mu = config.mu0
    trace = []
    converged = False
    b_prev = tr_contract(cores)
    for it in range(1, config.max_iter + 1):
        mu_used = mu
        regularized = False
        F = M - E + Y / mu
        for n in (1, 2, 3):
            core = cores.cores[n - 1]
            rn, nn, rn1 = core.shape
            r1 = subchain_matrix(cores, n)
            g = Z[n] - Qm[n] / mu
            c = reversed_mode_k_unfold(F, n) @ r1.T + (np.roll(g, 1, axis=0) - g)
            x, reg = solve_sylvester(diff_eigenvalues(nn), r1 @ r1.T, c)
            regularized = regularized or reg
            cores.cores[n - 1] = fold_k(x, (rn, nn, rn1), 2)
        for n in (1, 2, 3):
            g2 = mode_k_unfold(cores.cores[n - 1], 2)
            dg = np.roll(g2, -1, axis=0) - g2
            u, sig, vh = np.linalg.svd(dg + Qm[n] / mu, full_matrices=False)
            Z[n] = (u * prox_array(config.phi, 1.0 / mu, sig)) @ vh
        recon = tr_contract(cores)
        E = threshold_tensor(M - recon + Y / mu, config.psi, config.beta / mu,
                             "tubewise")
        split_res = 0.0
        for n in (1, 2, 3):
            g2 = mode_k_unfold(cores.cores[n - 1], 2)
            resid = (np.roll(g2, -1, axis=0) - g2) - Z[n]
            split_res = max(split_res, float(np.linalg.norm(resid)))
            Qm[n] = Qm[n] + mu * resid
        Y = Y + mu * (M - recon - E)
        mu = min(config.mu_max, config.growth * mu)
        B = recon
        fit_res = frobenius(M - B - E)
        error = _relative_change(B, b_prev)
        rec = TraceRecord(iteration=it, error=error, fit_residual=fit_res,
                          split_residual=split_res, mu=mu_used,
                          regularized=regularized)
        trace.append(rec)
        _check_finite([B, E], trace)
        if progress is not None:
            progress(rec)
        if error <= config.tol:
            converged = True
            break
        b_prev = B
    final = {"cores": cores, "Z": Z, "Qm": Qm, "E": E, "Y": Y, "mu": mu}
    return SolveOutput(background=B, anomaly=E,
                       detection_map=detection_map(E), trace=trace,
                       converged=converged, iterations=len(trace),
                       state=final if keep_state else None)


def solve(M, config: SolverConfig, progress=None, keep_state=False):
    """Run the ADMM loop until the background stabilizes or max_iter.

    progress, when given, is called once per iteration with the TraceRecord.
    keep_state attaches the final SolverState (ring modes only).
    """
    M = check_tensor3(M, "observation")
    if config.regularizer_mode in ("EUNTRFR", "UNTRFR"):
        return _solve_ring(M, config, progress, keep_state)
    if config.regularizer_mode in ("GNTCTV_direct", "EGNTCTV_direct"):
        return _solve_direct(M, config, progress, keep_state)
    return _solve_unfold(M, config, progress, keep_state)
