"""Bit-exact tensor file I/O, band normalization, and synthetic scenes with
planted anomalies.

File layout: magic "TNS3", u32 version (=1), three u64 dims, then
little-endian float64 payload with index i1 fastest, then i2, then i3.
Masks travel in the same container with dims (n1, n2, 1) and {0,1} values.
"""

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .ring import TRCores, random_init, tr_contract
from .tensor import check_tensor3

__all__ = [
    "TensorFileError", "BadMagicError", "VersionError", "TruncatedError",
    "read_tensor", "write_tensor", "read_mask", "write_mask",
    "band_normalize", "SyntheticScene", "generate_synthetic",
]

MAGIC = b"TNS3"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


class TensorFileError(Exception):
    code = "tensor-file"


class BadMagicError(TensorFileError):
    code = "bad-magic"


class VersionError(TensorFileError):
    code = "bad-version"


class TruncatedError(TensorFileError):
    code = "truncated"


def write_tensor(path, t):
    """Write a tensor atomically (temp file + rename)."""
    t = check_tensor3(t)
    payload = np.asfortranarray(t).tobytes(order="F")
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, *t.shape))
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_tensor(path):
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedError(f"{path}: file shorter than header")
        magic, version, n1, n2, n3 = _HEADER.unpack(header)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise VersionError(f"{path}: unsupported version {version}")
        expected = 8 * n1 * n2 * n3
        payload = fh.read(expected)
        if len(payload) < expected:
            raise TruncatedError(
                f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8")
    t = values.reshape((n1, n2, n3), order="F")
    return check_tensor3(t, path)


def write_mask(path, mask):
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("mask values must be 0 or 1")
    write_tensor(path, mask[:, :, None])


def read_mask(path):
    t = read_tensor(path)
    if t.shape[2] != 1 or not np.isin(t, (0.0, 1.0)).all():
        raise TensorFileError(f"{path}: not a valid mask container")
    return t[:, :, 0].astype(bool)


def band_normalize(t):
    """Min-max scale each band (mode-3 slice) to [0, 1]; constant bands to 0."""
    t = check_tensor3(t)
    lo = t.min(axis=(0, 1), keepdims=True)
    hi = t.max(axis=(0, 1), keepdims=True)
    span = hi - lo
    out = np.where(span > 0, (t - lo) / np.where(span > 0, span, 1.0), 0.0)
    return out


@dataclass
class SyntheticScene:
    tensor: np.ndarray
    mask: np.ndarray
    metadata: dict = field(default_factory=dict)


def _circulant_smooth(core, window=3):
    """Cyclic moving average along mode 2; keeps the ring structure intact."""
    out = np.zeros_like(core)
    for off in range(-(window // 2), window // 2 + 1):
        out += np.roll(core, off, axis=1)
    return out / window


def generate_synthetic(dims, ranks, n_anomalies, anomaly_strength, noise_sigma,
                       seed, smooth_window=3):
    """Low-rank smooth background from smoothed random ring cores plus
    spectrally deviant tubes at n_anomalies random pixels."""
    n1, n2, n3 = dims
    if n_anomalies >= n1 * n2:
        raise ValueError(f"n_anomalies={n_anomalies} must be < {n1 * n2}")
    if n_anomalies < 0 or anomaly_strength < 0 or noise_sigma < 0:
        raise ValueError("n_anomalies, anomaly_strength and noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    cores = random_init(dims, ranks, rng.integers(0, 2**63 - 1))
    cores = TRCores([_circulant_smooth(c, smooth_window) for c in cores.cores])
    background = tr_contract(cores)
    tensor = background.copy()
    mask = np.zeros((n1, n2), dtype=bool)
    flat = rng.choice(n1 * n2, size=n_anomalies, replace=False)
    mean_norm = float(np.sqrt((background ** 2).sum(axis=2)).mean())
    for pos in flat:
        i, j = divmod(int(pos), n2)
        tube = background[i, j, :]
        tube_norm = float(np.linalg.norm(tube))
        direction = rng.standard_normal(n3)
        if tube_norm > 0:
            direction -= (direction @ tube) / tube_norm**2 * tube
        dir_norm = float(np.linalg.norm(direction))
        if dir_norm == 0.0:
            direction = np.ones(n3)
            dir_norm = float(np.linalg.norm(direction))
        scale = anomaly_strength * (tube_norm if tube_norm > 0 else max(mean_norm, 1.0))
        tensor[i, j, :] += direction / dir_norm * scale
        mask[i, j] = True
    if noise_sigma > 0:
        tensor += noise_sigma * rng.standard_normal(dims)
    meta = {"dims": list(dims), "ranks": list(ranks), "n_anomalies": int(n_anomalies),
            "anomaly_strength": float(anomaly_strength),
            "noise_sigma": float(noise_sigma), "seed": int(seed)}
    return SyntheticScene(tensor=tensor, mask=mask, metadata=meta)
