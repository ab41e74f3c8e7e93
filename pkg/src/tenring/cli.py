"""Command-line front end: detect / sweep / synth / metrics / info.

Exit codes: 0 success (or iteration cap), 2 bad input, 3 solver abort.
All artifacts are written atomically (temp file + rename).
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import dataio, metrics
from .backend import worker_count
from .penalties import KIND_CODES, PenaltySpec
from .solver import (SolverAbort, SolverConfig, config_from_dict,
                     config_to_dict, solve)

PAPER_GRID = [1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3,
              1e-2, 5e-2, 0.1, 0.5, 1.0, 5.0, 10.0]

SWEEP_FIELDS = ["alpha", "beta", "penalty", "r1", "r2", "r3",
                "auc_pd_pf", "auc_pd_tau", "auc_pf_tau", "odp", "snpr", "tdbs"]


def _atomic_text(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_ranks(text):
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"ranks must be three comma-separated integers, got {text!r}")
    return tuple(parts)


def _penalty_from_args(args, prefix):
    kind = getattr(args, prefix)
    return PenaltySpec(kind=kind,
                       p=getattr(args, f"{prefix}_p"),
                       theta=getattr(args, f"{prefix}_theta"),
                       eta=getattr(args, f"{prefix}_eta"),
                       cap=getattr(args, f"{prefix}_cap"))


def _add_penalty_flags(parser, prefix, default_kind="CappedLog"):
    kinds = sorted(KIND_CODES)
    parser.add_argument(f"--{prefix}", choices=kinds, default=default_kind)
    parser.add_argument(f"--{prefix}-p", type=float, default=0.5)
    parser.add_argument(f"--{prefix}-theta", type=float, default=0.1)
    parser.add_argument(f"--{prefix}-eta", type=float, default=2.0)
    parser.add_argument(f"--{prefix}-cap", type=float, default=1.0)


def _add_solver_flags(parser):
    parser.add_argument("--alpha", type=float, default=1e-3)
    parser.add_argument("--beta", type=float, default=5e-3)
    parser.add_argument("--ranks", type=_parse_ranks, default=(6, 6, 6),
                        help="TR ranks r1,r2,r3")
    _add_penalty_flags(parser, "phi")
    _add_penalty_flags(parser, "psi")
    parser.add_argument("--transform", choices=["fft", "dct", "identity"],
                        default="fft")
    parser.add_argument("--gamma-set", default="1,2,3",
                        help="comma-separated gradient directions")
    parser.add_argument("--mu0", type=float, default=1e-3)
    parser.add_argument("--mu-max", type=float, default=1e10)
    parser.add_argument("--growth", type=float, default=1.1)
    parser.add_argument("--tol", type=float, default=1e-5)
    parser.add_argument("--max-iter", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--regularizer-mode", default="EUNTRFR",
                        choices=["EUNTRFR", "UNTRFR", "GNTCTV_direct",
                                 "EGNTCTV_direct", "GNCTV_unfold"])


def _config_from_args(args):
    gamma = tuple(int(x) for x in args.gamma_set.split(","))
    return SolverConfig(alpha=args.alpha, beta=args.beta, ranks=args.ranks,
                        phi=_penalty_from_args(args, "phi"),
                        psi=_penalty_from_args(args, "psi"),
                        transform=args.transform, gamma_set=gamma,
                        mu0=args.mu0, mu_max=args.mu_max, growth=args.growth,
                        tol=args.tol, max_iter=args.max_iter, seed=args.seed,
                        regularizer_mode=args.regularizer_mode)


def _now():
    return datetime.now(timezone.utc).isoformat()


def cmd_detect(args):
    config = _config_from_args(args)
    tensor = dataio.read_tensor(args.input)
    if args.band_normalize:
        tensor = dataio.band_normalize(tensor)
    started = _now()
    t0 = time.perf_counter()
    out = solve(tensor, config)
    wall = time.perf_counter() - t0
    os.makedirs(args.out_dir, exist_ok=True)
    paths = {name: os.path.join(args.out_dir, f"{name}.tns3")
             for name in ("background", "anomaly", "map")}
    dataio.write_tensor(paths["background"], out.background)
    dataio.write_tensor(paths["anomaly"], out.anomaly)
    dataio.write_tensor(paths["map"], out.detection_map[:, :, None])
    report_path = None
    if args.mask:
        mask = dataio.read_mask(args.mask)
        curve = metrics.roc3d(metrics.normalize_map(out.detection_map), mask)
        report = metrics.auc_report(curve)
        report_path = os.path.join(args.out_dir, "report.json")
        _atomic_text(report_path, json.dumps(metrics.report_to_json(report), indent=2) + "\n")
        metrics.curve_to_csv(curve, os.path.join(args.out_dir, "roc.csv"))
    final = out.trace[-1]
    manifest = {
        "config": config_to_dict(config),
        "input": os.path.abspath(args.input),
        "mask": os.path.abspath(args.mask) if args.mask else None,
        "outputs": {k: os.path.abspath(v) for k, v in paths.items()},
        "report": os.path.abspath(report_path) if report_path else None,
        "started": started,
        "finished": _now(),
        "band_normalized": bool(args.band_normalize),
        "trace_summary": {
            "iterations": out.iterations,
            "converged": out.converged,
            "final_error": final.error,
            "final_fit_residual": final.fit_residual,
            "final_split_residual": final.split_residual,
            "wall_seconds": wall,
        },
    }
    _atomic_text(os.path.join(args.out_dir, "manifest.json"),
                 json.dumps(manifest, indent=2) + "\n")
    print(f"detect: {out.iterations} iterations, "
          f"{'converged' if out.converged else 'iteration cap'}, "
          f"error {final.error:.3e}")
    return 0


def _sweep_row(job):
    config_dict, tensor_path, normalize, mask_path = job
    config = config_from_dict(config_dict)
    tensor = dataio.read_tensor(tensor_path)
    if normalize:
        tensor = dataio.band_normalize(tensor)
    mask = dataio.read_mask(mask_path)
    out = solve(tensor, config)
    curve = metrics.roc3d(metrics.normalize_map(out.detection_map), mask)
    rep = metrics.auc_report(curve)
    return [config.alpha, config.beta, config.phi.kind, *config.ranks,
            rep.auc_pd_pf, rep.auc_pd_tau, rep.auc_pf_tau,
            rep.odp, rep.snpr, rep.tdbs]


def _parse_float_list(text):
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise ValueError(f"empty value list {text!r}")
    return vals


def build_sweep_combos(args):
    """Grid rows in deterministic lexicographic order (alpha, beta, penalty, ranks)."""
    if args.paper_grid:
        alphas, betas = list(PAPER_GRID), list(PAPER_GRID)
    else:
        alphas = _parse_float_list(args.alphas)
        betas = _parse_float_list(args.betas)
    penalties = [k.strip() for k in args.penalties.split(",") if k.strip()]
    for k in penalties:
        if k not in KIND_CODES:
            raise ValueError(f"unknown penalty kind {k!r}")
    ranks_list = [_parse_ranks(r) for r in args.ranks_list.split(";") if r.strip()]
    if not (alphas and betas and penalties and ranks_list):
        raise ValueError("sweep grid is empty")
    return [(a, b, pen, rk)
            for a in alphas for b in betas for pen in penalties
            for rk in ranks_list]


def cmd_sweep(args):
    base = _config_from_args(args)
    combos = build_sweep_combos(args)
    done = 0
    if args.resume and os.path.exists(args.out):
        with open(args.out) as fh:
            done = max(0, sum(1 for _ in fh) - 1)
    jobs = []
    for a, b, pen, rk in combos[done:]:
        phi = PenaltySpec(pen, p=base.phi.p, theta=base.phi.theta,
                          eta=base.phi.eta, cap=base.phi.cap)
        cfg = SolverConfig(alpha=a, beta=b, ranks=rk, phi=phi, psi=phi,
                           transform=base.transform, gamma_set=base.gamma_set,
                           mu0=base.mu0, mu_max=base.mu_max, growth=base.growth,
                           tol=base.tol, max_iter=base.max_iter, seed=base.seed,
                           regularizer_mode=base.regularizer_mode)
        jobs.append((config_to_dict(cfg), args.input, args.band_normalize,
                     args.mask))

    workers = worker_count()
    mode = "a" if (args.resume and done > 0) else "w"
    with open(args.out, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(SWEEP_FIELDS)
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_sweep_row, jobs):
                    writer.writerow(row)
                    fh.flush()
        else:
            for job in jobs:
                writer.writerow(_sweep_row(job))
                fh.flush()
    print(f"sweep: {done + len(jobs)} rows in {args.out} ({done} reused)")
    return 0


def cmd_synth(args):
    dims = tuple(int(x) for x in args.dims.split(","))
    if len(dims) != 3:
        raise ValueError("dims must be n1,n2,n3")
    scene = dataio.generate_synthetic(dims, _parse_ranks(args.ranks),
                                      args.n_anomalies, args.strength,
                                      args.noise, args.seed)
    dataio.write_tensor(args.out, scene.tensor)
    dataio.write_mask(args.out_mask, scene.mask.astype(float))
    meta_path = args.out + ".meta.json"
    _atomic_text(meta_path, json.dumps(scene.metadata, indent=2) + "\n")
    print(f"synth: wrote {args.out}, {args.out_mask}")
    return 0


def cmd_metrics(args):
    scores = dataio.read_tensor(args.map)
    if scores.shape[2] != 1:
        raise ValueError("detection map container must have dims (n1, n2, 1)")
    mask = dataio.read_mask(args.mask)
    curve = metrics.roc3d(metrics.normalize_map(scores[:, :, 0]), mask)
    report = metrics.auc_report(curve)
    obj = metrics.report_to_json(report)
    if args.out_json:
        _atomic_text(args.out_json, json.dumps(obj, indent=2) + "\n")
    if args.out_csv:
        metrics.curve_to_csv(curve, args.out_csv)
    print(json.dumps(obj, indent=2))
    return 0


def cmd_info(args):
    t = dataio.read_tensor(args.input)
    print(f"dims: {t.shape[0]} x {t.shape[1]} x {t.shape[2]}")
    print(f"min: {t.min():.6g}  max: {t.max():.6g}  frobenius: {np.linalg.norm(t):.6g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tenring",
                                     description="Tensor-ring anomaly detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run detection on a tensor file")
    p.add_argument("input")
    p.add_argument("--mask", default=None)
    p.add_argument("--out-dir", default="tenring-out")
    p.add_argument("--band-normalize", action=argparse.BooleanOptionalAction,
                   default=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="grid search over solver parameters")
    p.add_argument("input")
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--alphas", default="1e-3")
    p.add_argument("--betas", default="5e-3")
    p.add_argument("--penalties", default="CappedLog")
    p.add_argument("--ranks-list", default="6,6,6",
                   help="semicolon-separated rank triples")
    p.add_argument("--paper-grid", action="store_true",
                   help="use the 15-value reference grid for alpha and beta")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--band-normalize", action=argparse.BooleanOptionalAction,
                   default=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--dims", default="30,30,20")
    p.add_argument("--ranks", default="3,6,3")
    p.add_argument("--n-anomalies", type=int, default=8)
    p.add_argument("--strength", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-mask", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("metrics", help="evaluate a detection map against a mask")
    p.add_argument("--map", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("info", help="print tensor file header")
    p.add_argument("input")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (dataio.TensorFileError, FileNotFoundError, IsADirectoryError,
            PermissionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
