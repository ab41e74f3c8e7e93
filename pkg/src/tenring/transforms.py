"""Invertible mode-3 transforms, the tensor-tensor product, T-SVD, and the
generalized nonconvex singular-value thresholding operator.

All spectral work happens face-by-face in the transform domain.  For the FFT
the spectrum of a real tensor is conjugate-symmetric; factorizations compute
the unique half and mirror the rest so spatial-domain factors stay real.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

from .backend import kernels
from .penalties import PenaltySpec, prox_array
from .tensor import gradient

__all__ = [
    "TransformSpec",
    "apply_transform",
    "inverse_transform",
    "t_product",
    "identity_tensor",
    "TSVDFactors",
    "tsvd",
    "spectral_singular_values",
    "phi_spectral_norm",
    "gntsvt",
    "gntctv_norm",
]

_KINDS = ("fft", "dct", "identity")


@dataclass(frozen=True)
class TransformSpec:
    """Mode-3 transform: kind in {fft, dct, identity} and its length n3.

    rho is the Parseval constant: ||t||_F^2 == ||L(t)||_F^2 / rho.  The
    unnormalized DFT gives rho = n3; orthonormal DCT-II and identity give 1.
    """

    kind: str
    n3: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"transform kind must be one of {_KINDS}, got {self.kind!r}")
        if self.n3 < 1:
            raise ValueError(f"n3 must be positive, got {self.n3}")

    @property
    def rho(self):
        return float(self.n3) if self.kind == "fft" else 1.0


def _check_len(t, spec):
    if t.shape[2] != spec.n3:
        raise ValueError(f"mode-3 length {t.shape[2]} does not match transform n3={spec.n3}")


def apply_transform(t, spec: TransformSpec):
    t = np.asarray(t, dtype=np.float64)
    _check_len(t, spec)
    if spec.kind == "fft":
        return np.fft.fft(t, axis=2)
    if spec.kind == "dct":
        return dct(t, axis=2, type=2, norm="ortho")
    return t.copy()


def inverse_transform(s, spec: TransformSpec):
    s = np.asarray(s)
    _check_len(s, spec)
    if spec.kind == "fft":
        return np.fft.ifft(s, axis=2).real
    s = s.real if np.iscomplexobj(s) else s
    if spec.kind == "dct":
        return idct(s, axis=2, type=2, norm="ortho")
    return np.array(s, dtype=np.float64)


def t_product(a, b, spec: TransformSpec):
    """Tensor-tensor product: face-wise matrix products in the transform domain."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    _check_len(a, spec)
    ah = np.moveaxis(apply_transform(a, spec), 2, 0)
    bh = np.moveaxis(apply_transform(b, spec), 2, 0)
    ch = np.moveaxis(np.matmul(ah, bh), 0, 2)
    return inverse_transform(ch, spec)


def identity_tensor(n, spec: TransformSpec):
    """The t-identity: every transform-domain face is the n x n identity."""
    eye = np.broadcast_to(np.eye(n)[:, :, None], (n, n, spec.n3))
    return inverse_transform(np.ascontiguousarray(eye), spec)


def _unique_faces(spec: TransformSpec):
    """Indices of spectrally independent faces; the rest mirror by conjugation."""
    if spec.kind == "fft":
        return range(spec.n3 // 2 + 1)
    return range(spec.n3)


def _mirror(face_stack, j, spec):
    return np.conj(face_stack[spec.n3 - j])


@dataclass
class TSVDFactors:
    """Transform-domain T-SVD factors of an n1 x n2 x n3 tensor.

    u_hat[j], vh_hat[j] are the per-face SVD factors, sigma[:, j] the face's
    singular values (nonnegative, nonincreasing).  Spatial-domain factor
    tensors are recovered through the inverse transform.
    """

    u_hat: np.ndarray      # (n3, n1, m)
    sigma: np.ndarray      # (m, n3)
    vh_hat: np.ndarray     # (n3, m, n2)
    spec: TransformSpec

    @property
    def u(self):
        return inverse_transform(np.moveaxis(self.u_hat, 0, 2), self.spec)

    @property
    def v(self):
        vf = np.conj(np.transpose(self.vh_hat, (0, 2, 1)))
        return inverse_transform(np.moveaxis(vf, 0, 2), self.spec)

    @property
    def k_tensor(self):
        m = self.sigma.shape[0]
        kh = np.zeros((m, m, self.spec.n3))
        idx = np.arange(m)
        kh[idx, idx, :] = self.sigma
        return inverse_transform(kh, self.spec)

    def reconstruct(self):
        ch = self.u_hat * self.sigma.T[:, None, :] @ self.vh_hat
        return inverse_transform(np.moveaxis(ch, 0, 2), self.spec)


def tsvd(a, spec: TransformSpec):
    """Transform-based T-SVD; reconstruct() reproduces the input."""
    a = np.asarray(a, dtype=np.float64)
    if not np.isfinite(a).all():
        raise ValueError("tsvd input must be finite")
    _check_len(a, spec)
    n1, n2, n3 = a.shape
    m = min(n1, n2)
    ah = np.moveaxis(apply_transform(a, spec), 2, 0)
    cdtype = ah.dtype if np.iscomplexobj(ah) else np.float64
    u_hat = np.empty((n3, n1, m), dtype=cdtype)
    vh_hat = np.empty((n3, m, n2), dtype=cdtype)
    sigma = np.empty((m, n3))
    uniq = list(_unique_faces(spec))
    uu, ss, vv = np.linalg.svd(ah[uniq], full_matrices=False)
    u_hat[uniq], sigma[:, uniq], vh_hat[uniq] = uu, ss.T, vv
    for j in range(len(uniq), n3):
        u_hat[j] = _mirror(u_hat, j, spec)
        sigma[:, j] = sigma[:, n3 - j]
        vh_hat[j] = _mirror(vh_hat, j, spec)
    return TSVDFactors(u_hat=u_hat, sigma=sigma, vh_hat=vh_hat, spec=spec)


def spectral_singular_values(a, spec: TransformSpec):
    """Per-face singular values of the transform-domain tensor, (m, n3)."""
    a = np.asarray(a, dtype=np.float64)
    _check_len(a, spec)
    ah = np.moveaxis(apply_transform(a, spec), 2, 0)
    return np.linalg.svd(ah, compute_uv=False).T


def phi_spectral_norm(a, spec: TransformSpec, phi: PenaltySpec):
    """Sum of phi over all transform-domain singular values, scaled by 1/rho."""
    from .penalties import eval_penalty_array

    sig = spectral_singular_values(a, spec)
    return float(eval_penalty_array(phi, sig).sum() / spec.rho)


# transform-domain singular values below this are treated as exact zeros
# before the prox, so branch selection is not driven by roundoff
_SIGMA_FLOOR = 1e-14


def gntsvt(a, spec: TransformSpec, phi: PenaltySpec, tau):
    """Singular-value prox under the transform: each transform-domain singular
    value sigma becomes prox(phi, tau, sigma); minimizes
    tau*||X||_{phi,L} + ||X - a||_F^2 / 2."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    a = np.asarray(a, dtype=np.float64)
    if not np.isfinite(a).all():
        raise ValueError("gntsvt input must be finite")
    _check_len(a, spec)
    n3 = spec.n3
    ah = np.moveaxis(apply_transform(a, spec), 2, 0)
    uniq = list(_unique_faces(spec))
    uu, ss, vv = np.linalg.svd(ah[uniq], full_matrices=False)
    ss[ss < _SIGMA_FLOOR] = 0.0
    shrunk = prox_array(phi, tau, ss)
    ch = np.empty_like(ah)
    ch[uniq] = (uu * shrunk[:, None, :]) @ vv
    for j in range(len(uniq), n3):
        ch[j] = _mirror(ch, j, spec)
    return inverse_transform(np.moveaxis(ch, 0, 2), spec)


def gntctv_norm(t, gamma_set, spec: TransformSpec, phi: PenaltySpec):
    """Average over directions in gamma_set of the spectral penalty of the
    circulant gradient tensors."""
    gamma_set = sorted(set(gamma_set))
    if not gamma_set:
        raise ValueError("gamma_set must be nonempty")
    if any(k not in (1, 2, 3) for k in gamma_set):
        raise ValueError(f"gamma_set must be a subset of {{1,2,3}}, got {gamma_set}")
    t = np.asarray(t, dtype=np.float64)
    total = 0.0
    for k in gamma_set:
        total += phi_spectral_norm(gradient(t, k), spec, phi)
    return total / len(gamma_set)
