"""Dense order-3 tensor primitives: unfoldings, mode products, circulant gradients, norms.

Tensors are plain float64 numpy arrays of shape (n1, n2, n3).  The canonical
linear layout is i1-fastest (Fortran order); it only matters for file I/O and
for the column ordering of the unfolding matrices defined below.
"""

import numpy as np

__all__ = [
    "check_tensor3",
    "mode_k_unfold",
    "reversed_mode_k_unfold",
    "fold_k",
    "reversed_fold_k",
    "mode_k_product",
    "diff_matrix",
    "diff_eigenvalues",
    "gradient",
    "gradient_adjoint",
    "frobenius",
    "l1_norm",
    "linf_norm",
    "lf1_norm",
    "inner_product",
]


def check_tensor3(t, name="tensor"):
    """Validate and return a float64 order-3 tensor; rejects NaN/Inf up front."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"{name} must be order-3, got shape {t.shape}")
    if t.size and not np.isfinite(t).all():
        raise ValueError(f"{name} contains non-finite entries")
    return t


def _check_mode(k):
    if k not in (1, 2, 3):
        raise ValueError(f"mode index must be 1, 2 or 3, got {k}")


# Column orderings, as permutations (row axis, slow col axis, fast col axis).
# Classical: remaining modes in increasing order, earlier-listed fastest.
# Reversed: modes cycled starting at k+1, earliest-listed fastest.
_CLASSICAL_PERM = {1: (0, 2, 1), 2: (1, 2, 0), 3: (2, 1, 0)}
_REVERSED_PERM = {1: (0, 2, 1), 2: (1, 0, 2), 3: (2, 1, 0)}


def _unfold(t, perm):
    a = np.transpose(t, perm)
    return np.ascontiguousarray(a).reshape(a.shape[0], -1)


def _fold(m, dims, perm):
    shape = tuple(dims[p] for p in perm)
    if m.shape != (shape[0], shape[1] * shape[2]):
        raise ValueError(f"matrix shape {m.shape} inconsistent with dims {tuple(dims)}")
    a = np.asarray(m, dtype=np.float64).reshape(shape)
    return np.transpose(a, np.argsort(perm))


def mode_k_unfold(t, k):
    """Classical mode-k unfolding, n_k x prod(other dims)."""
    _check_mode(k)
    return _unfold(np.asarray(t, dtype=np.float64), _CLASSICAL_PERM[k])


def reversed_mode_k_unfold(t, k):
    """Reversed mode-k unfolding: columns cycle through modes starting at k+1."""
    _check_mode(k)
    return _unfold(np.asarray(t, dtype=np.float64), _REVERSED_PERM[k])


def fold_k(m, dims, k):
    """Inverse of mode_k_unfold."""
    _check_mode(k)
    return _fold(m, dims, _CLASSICAL_PERM[k])


def reversed_fold_k(m, dims, k):
    """Inverse of reversed_mode_k_unfold."""
    _check_mode(k)
    return _fold(m, dims, _REVERSED_PERM[k])


def mode_k_product(t, m, k):
    """Mode-k product t x_k m; satisfies unfold_k(result) == m @ unfold_k(t)."""
    _check_mode(k)
    t = np.asarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    axis = k - 1
    if m.ndim != 2 or m.shape[1] != t.shape[axis]:
        raise ValueError(f"matrix shape {m.shape} incompatible with mode-{k} size {t.shape[axis]}")
    out = np.tensordot(m, t, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def diff_matrix(n):
    """Circulant forward-difference matrix with rows shifted from (-1, 1, 0, ...)."""
    d = np.zeros((n, n))
    idx = np.arange(n)
    d[idx, idx] += -1.0
    d[idx, (idx + 1) % n] += 1.0
    return d


def diff_eigenvalues(n):
    """Eigenvalues of D^T D for the size-n circulant difference (DFT order)."""
    return 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2


def gradient(t, k):
    """Circulant difference along mode k: equals t x_k diff_matrix(n_k)."""
    _check_mode(k)
    t = np.asarray(t, dtype=np.float64)
    return np.roll(t, -1, axis=k - 1) - t


def gradient_adjoint(t, k):
    """Adjoint of gradient: t x_k diff_matrix(n_k)^T."""
    _check_mode(k)
    t = np.asarray(t, dtype=np.float64)
    return np.roll(t, 1, axis=k - 1) - t


def frobenius(t):
    return float(np.linalg.norm(np.asarray(t).ravel()))


def l1_norm(t):
    return float(np.abs(t).sum())


def linf_norm(t):
    t = np.asarray(t)
    return float(np.abs(t).max()) if t.size else 0.0


def lf1_norm(t):
    """Sum over spatial positions of the Frobenius norm of each mode-3 tube."""
    t = np.asarray(t, dtype=np.float64)
    return float(np.sqrt((t * t).sum(axis=2)).sum())


def inner_product(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))
