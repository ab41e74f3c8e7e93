"""Tensor-ring cores: contraction, subchains, and the unfolding identity
linking a ring to the reversed mode-k unfoldings of its contraction.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import frobenius, mode_k_unfold, reversed_mode_k_unfold

__all__ = ["TRCores", "tr_contract", "subchain", "subchain_matrix",
           "unfolding_identity_check", "random_init"]


@dataclass
class TRCores:
    """Three cyclically contracted cores; core n has shape (r_n, n_n, r_{n+1})
    with r_4 = r_1."""

    cores: list

    def __post_init__(self):
        if len(self.cores) != 3:
            raise ValueError("expected exactly 3 cores")
        self.cores = [np.asarray(c, dtype=np.float64) for c in self.cores]
        for n in range(3):
            c, nxt = self.cores[n], self.cores[(n + 1) % 3]
            if c.ndim != 3:
                raise ValueError(f"core {n + 1} must be order-3, got shape {c.shape}")
            if c.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"rank mismatch between core {n + 1} (tail {c.shape[2]}) and "
                    f"core {(n + 1) % 3 + 1} (head {nxt.shape[0]})")

    @property
    def ranks(self):
        return tuple(c.shape[0] for c in self.cores)

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.cores)

    def copy(self):
        return TRCores([c.copy() for c in self.cores])


def tr_contract(cores: TRCores):
    """Contract the ring: entry (i,j,k) is Tr(G1[:,i,:] G2[:,j,:] G3[:,k,:])."""
    g1, g2, g3 = cores.cores
    return np.einsum("aib,bjc,cka->ijk", g1, g2, g3, optimize=True)


def subchain(cores: TRCores, skip):
    """Merge the two cores other than `skip` into one tensor of shape
    (r_{skip+1}, prod of their mode sizes, r_skip); the merged mode runs
    cyclically from skip+1 with the earlier mode fastest."""
    if skip not in (1, 2, 3):
        raise ValueError(f"skip must be 1, 2 or 3, got {skip}")
    a = cores.cores[skip % 3]          # core skip+1: (r_{skip+1}, n_a, r_{skip+2})
    b = cores.cores[(skip + 1) % 3]    # core skip+2: (r_{skip+2}, n_b, r_skip)
    merged = np.einsum("aib,bjc->aijc", a, b, optimize=True)
    ra, na, nb, rc = merged.shape
    return merged.transpose(0, 2, 1, 3).reshape(ra, nb * na, rc)


def subchain_matrix(cores: TRCores, skip):
    """R1 of the core update: transpose of the reversed mode-2 unfolding of
    the subchain, shape (r_skip * r_{skip+1}, prod of other mode sizes)."""
    return reversed_mode_k_unfold(subchain(cores, skip), 2).T


def unfolding_identity_check(cores: TRCores):
    """Max over k of the relative residual between the reversed mode-k
    unfolding of the contraction and core_k(2) @ subchain_unfold^T."""
    full = tr_contract(cores)
    worst = 0.0
    for k in (1, 2, 3):
        lhs = reversed_mode_k_unfold(full, k)
        rhs = mode_k_unfold(cores.cores[k - 1], 2) @ subchain_matrix(cores, k)
        denom = frobenius(lhs)
        resid = frobenius(lhs - rhs)
        worst = max(worst, resid / denom if denom > 0 else 0.0)
    return worst


def random_init(dims, ranks, seed):
    """Standard-normal cores from a seeded generator; same seed, same cores."""
    if len(dims) != 3 or len(ranks) != 3:
        raise ValueError("dims and ranks must have length 3")
    if any(r < 1 for r in ranks):
        raise ValueError(f"ranks must be >= 1, got {ranks}")
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((ranks[n], dims[n], ranks[(n + 1) % 3]))
             for n in range(3)]
    return TRCores(cores)
