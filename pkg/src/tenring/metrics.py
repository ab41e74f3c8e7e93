"""Detection-map evaluation: 3-D ROC curves, the six AUC summaries, and
box-whisker separability statistics.

Thresholds are the sorted unique scores augmented with {0, 1, 1+eps}, so the
curves are exact rather than grid-sampled.  PD/PF use score >= threshold.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "check_mask", "normalize_map", "RocCurve", "roc3d", "AucReport",
    "auc_report", "separability_stats", "curve_to_csv", "report_to_json",
    "SNPR_SENTINEL",
]

SNPR_SENTINEL = 1e15


def check_mask(mask, scores_shape=None):
    """Validate a {0,1} ground-truth mask with both classes present."""
    mask = np.asarray(mask)
    if mask.ndim == 3 and mask.shape[2] == 1:
        mask = mask[:, :, 0]
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    vals = np.unique(mask)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError("mask values must be 0 or 1")
    mask = mask.astype(bool)
    if scores_shape is not None and mask.shape != tuple(scores_shape):
        raise ValueError(f"mask shape {mask.shape} != scores shape {scores_shape}")
    if mask.all() or not mask.any():
        raise ValueError("mask needs at least one anomaly and one background pixel")
    return mask


def normalize_map(t):
    """Min-max scale a nonnegative map to [0, 1]; constant maps become zeros."""
    t = np.asarray(t, dtype=np.float64)
    if t.size and t.min() < 0:
        raise ValueError("detection map must be nonnegative")
    lo, hi = float(t.min()), float(t.max())
    if hi - lo <= 0:
        return np.zeros_like(t)
    return (t - lo) / (hi - lo)


@dataclass
class RocCurve:
    """Samples (tau, PD, PF) with tau strictly increasing from 0 past 1."""

    tau: np.ndarray
    pd: np.ndarray
    pf: np.ndarray


def roc3d(scores, mask):
    """Exact ROC over all observed score thresholds.

    PD(tau) is the fraction of anomaly pixels scoring >= tau, PF(tau) the
    fraction of background pixels scoring >= tau.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = check_mask(mask, scores.shape)
    if scores.min() < 0 or scores.max() > 1:
        raise ValueError("scores must lie in [0, 1]; normalize the map first")
    eps = 1e-9
    taus = np.unique(np.concatenate([scores.ravel(), [0.0, 1.0, 1.0 + eps]]))
    anom = np.sort(scores[mask])
    bg = np.sort(scores[~mask])
    # count of values >= tau via binary search on the sorted class scores
    pd = (anom.size - np.searchsorted(anom, taus, side="left")) / anom.size
    pf = (bg.size - np.searchsorted(bg, taus, side="left")) / bg.size
    return RocCurve(tau=taus, pd=pd, pf=pf)


@dataclass
class AucReport:
    auc_pd_pf: float
    auc_pd_tau: float
    auc_pf_tau: float
    odp: float
    snpr: float
    tdbs: float
    snpr_degenerate: bool = False


def _step_area(tau, y):
    """Exact integral over [0, 1] of the piecewise-constant curve whose value
    on (tau_{i-1}, tau_i] is y_i."""
    t = np.minimum(tau, 1.0)
    area = float(np.sum(np.diff(t) * y[1:]))
    if tau[0] > 0:
        area += float(min(tau[0], 1.0) * y[0])
    return area


def auc_report(curve: RocCurve):
    """Integrate the three 2-D projections and form the composite scores."""
    order = np.argsort(curve.pf, kind="stable")
    auc_pd_pf = float(np.trapezoid(curve.pd[order], curve.pf[order]))
    auc_pd_tau = _step_area(curve.tau, curve.pd)
    auc_pf_tau = _step_area(curve.tau, curve.pf)
    odp = auc_pd_pf + auc_pd_tau - auc_pf_tau
    tdbs = auc_pd_tau - auc_pf_tau
    degenerate = auc_pf_tau == 0.0
    snpr = SNPR_SENTINEL if degenerate else auc_pd_tau / auc_pf_tau
    return AucReport(auc_pd_pf=auc_pd_pf, auc_pd_tau=auc_pd_tau,
                     auc_pf_tau=auc_pf_tau, odp=odp, snpr=snpr, tdbs=tdbs,
                     snpr_degenerate=degenerate)


def separability_stats(scores, mask):
    """Box-whisker summary (min/Q1/median/Q3/max) per class plus the gap
    between the anomaly lower quartile and the background upper quartile."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = check_mask(mask, scores.shape)
    out = {}
    for name, vals in (("anomaly", scores[mask]), ("background", scores[~mask])):
        qs = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
        out[name] = {"min": float(qs[0]), "q1": float(qs[1]),
                     "median": float(qs[2]), "q3": float(qs[3]),
                     "max": float(qs[4])}
    out["gap"] = out["anomaly"]["q1"] - out["background"]["q3"]
    return out


def curve_to_csv(curve: RocCurve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "pd", "pf"])
        for row in zip(curve.tau, curve.pd, curve.pf):
            writer.writerow([f"{v:.12g}" for v in row])


def report_to_json(report: AucReport, path=None):
    obj = {
        "auc_pd_pf": report.auc_pd_pf,
        "auc_pd_tau": report.auc_pd_tau,
        "auc_pf_tau": report.auc_pf_tau,
        "odp": report.odp,
        "snpr": report.snpr,
        "tdbs": report.tdbs,
    }
    if report.snpr_degenerate:
        obj["snpr_degenerate"] = True
    text = json.dumps(obj, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return obj
