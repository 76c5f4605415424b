"""Batch command-line driver: config in, structured JSON/CSV out.

Exit codes: 0 success, 1 configuration/schema error, 2 unresolved clusters or
failed validation audits (partial results still written), 3 computation
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from . import asymptotics as asy
from .charfun import DEvaluator, eval_D, sample_D_grid
from .config import RunConfig, env_overrides, load_config
from .errors import ConfigError, TspecError, UnstableLimitError
from .gamma_recovery import gamma_direct, gamma_from_endpoint, gamma_from_omega
from .pipeline import (eigenvalues_from_records, run_spectrum, run_validate)
from .potential import Potential, derive_scalars
from .spectrumfile import read_spectrum, write_spectrum, write_spectrum_csv


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected re,im")
    return complex(float(parts[0]), float(parts[1]))


def _parse_region(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected sigma0,sigma1,tau0,tau1")
    return parts


def _parse_range(text: str):
    lo, _, hi = text.partition("..")
    if not hi:
        raise argparse.ArgumentTypeError("expected lo..hi")
    return int(lo), int(hi)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tspec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tspec {__version__}")
    parser.add_argument("--config", help="run-config JSON path")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--threads", type=int, help="worker pool size")
    parser.add_argument("--tol", type=float, help="override the integrator tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="locate and index transmission eigenvalues")
    sp.add_argument("--region", type=_parse_region, help="sigma0,sigma1,tau0,tau1")
    sp.add_argument("--depth", type=int, help="max subdivision depth")
    sp.add_argument("--n", type=_parse_range, help="targeted index range lo..hi")

    cf = sub.add_parser("charfun", help="evaluate the characteristic function")
    cfsub = cf.add_subparsers(dest="subcommand", required=True)
    cfe = cfsub.add_parser("eval", help="print D(k) at one point")
    cfe.add_argument("--k", type=_parse_pair, required=True, metavar="RE,IM")
    cfe.add_argument("--dump-kernel", metavar="PATH",
                     help="also write the kernel row K(0, t) as CSV (debugging)")
    cfe.add_argument("--kernel-mesh", type=int, default=128)
    cfg_ = cfsub.add_parser("grid", help="export D over a grid as CSV")
    cfg_.add_argument("--region", type=_parse_region)
    cfg_.add_argument("--nx", type=int, default=32)
    cfg_.add_argument("--ny", type=int, default=16)
    cfg_.add_argument("--dump-kernel", metavar="PATH",
                      help="also write the kernel row K(0, t) as CSV (debugging)")
    cfg_.add_argument("--kernel-mesh", type=int, default=128)

    ap = sub.add_parser("asymptotics", help="asymptotic predictions and residuals")
    apsub = ap.add_subparsers(dest="subcommand", required=True)
    app = apsub.add_parser("predict", help="emit sqrt-eigenvalue predictions")
    app.add_argument("--theorem", required=True, choices=asy.THEOREM_TAGS)
    app.add_argument("--n", type=_parse_range, required=True, metavar="LO..HI")
    apr = apsub.add_parser("residuals", help="join a spectrum with predictions")
    apr.add_argument("--spectrum", required=True)
    apr.add_argument("--theorem", choices=asy.THEOREM_TAGS)

    gm = sub.add_parser("gamma", help="recover the normalization constant")
    gm.add_argument("--route", required=True, choices=["omega", "endpoint", "direct"])
    gm.add_argument("--spectrum", required=True)
    gm.add_argument("--probe", type=float, default=0.37)

    va = sub.add_parser("validate", help="audit a spectrum file")
    va.add_argument("--spectrum")
    return parser


def _load_run_config(args) -> RunConfig:
    env = env_overrides()
    path = args.config or env.get("config")
    if not path:
        raise ConfigError("a --config file (or TSPEC_CONFIG) is required")
    cfg = load_config(path)
    threads = args.threads if args.threads is not None else env.get("threads")
    if threads is not None:
        cfg.threads = int(threads)
    tol = args.tol if args.tol is not None else env.get("tol")
    if tol is not None:
        cfg.tolerances = dict(cfg.tolerances, rtol=float(tol))
    out = args.out if args.out is not None else env.get("out")
    if out is not None:
        cfg.out = out
    return cfg


def _emit_json(obj, path=None):
    text = json.dumps(obj, indent=2, default=_jsonable) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(value):
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _cmd_spectrum(cfg: RunConfig, args) -> int:
    if args.region:
        cfg.spectrum = dict(cfg.spectrum, region=args.region)
    if args.depth:
        cfg.spectrum = dict(cfg.spectrum, depth=args.depth)
    if args.n:
        cfg.spectrum = dict(cfg.spectrum, n=list(args.n))
    run = run_spectrum(cfg)
    out = cfg.out or "spectrum.json"
    write_spectrum(out, run.header, run.records)
    if out.endswith(".json"):
        write_spectrum_csv(out[:-5] + ".csv", run.records)
    for w in run.header.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {len(run.records)} records to {out}", file=sys.stderr)
    return run.exit_code


def _dump_kernel_row(p: Potential, path: str, mesh: int):
    from .jost import kernel_iterate

    kg = kernel_iterate(p, mesh)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "K_0_t"])
        for j, val in enumerate(kg.values[0]):
            writer.writerow([repr(j * kg.h), repr(float(val))])
    print(f"wrote kernel row to {path}", file=sys.stderr)


def _cmd_charfun(cfg: RunConfig, args) -> int:
    p = Potential.from_dict(cfg.potential)
    if getattr(args, "dump_kernel", None):
        _dump_kernel_row(p, args.dump_kernel, args.kernel_mesh)
    if args.subcommand == "eval":
        sample = eval_D(p, args.k, variant=cfg.variant, rtol=cfg.rtol)
        _emit_json({"k": sample.k, "D": sample.value, "variant": sample.variant,
                    "h": sample.h}, cfg.out)
        return 0
    region = args.region or cfg.charfun.get("region") or [0.0, 10.0, 0.0, 3.0]
    samples = sample_D_grid(p, cfg.variant, region, args.nx, args.ny,
                            rtol=cfg.rtol, threads=cfg.threads)
    out = cfg.out or "charfun_grid.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_k", "im_k", "re_D", "im_D"])
        for s in samples:
            writer.writerow([repr(s.k.real), repr(s.k.imag),
                             repr(s.value.real), repr(s.value.imag)])
    print(f"wrote {len(samples)} samples to {out}", file=sys.stderr)
    failures = [s for s in samples if s.error]
    if failures:
        print(f"warning: {len(failures)} grid points failed", file=sys.stderr)
    return 0


def _load_spectrum_eigentuple(path):
    header, records, hash_ok = read_spectrum(path)
    if not hash_ok:
        print("warning: spectrum file content hash mismatch", file=sys.stderr)
    return header, records


def _cmd_asymptotics(cfg: RunConfig, args) -> int:
    p = Potential.from_dict(cfg.potential)
    scalars = derive_scalars(p)
    if args.subcommand == "predict":
        lo, hi = args.n
        pred = asy.predict_eigenvalues(scalars, args.theorem, range(lo, hi + 1))
        _emit_json({
            "theorem": pred.theorem_tag,
            "constants": pred.constants,
            "rows": [{"n": n, "branch": b, "sqrt_lambda": v, "mu": m, "correction": c}
                     for n, b, v, m, c in zip(pred.ns, pred.branches, pred.values,
                                              pred.mus, pred.corrections)],
        }, cfg.out)
        return 0
    header, records = _load_spectrum_eigentuple(args.spectrum)
    zeros = [ev for ev in eigenvalues_from_records(records)
             if ev.index is not None and ev.index >= 1]
    if not zeros:
        print("error: spectrum file has no indexed eigenvalues", file=sys.stderr)
        return 3
    from .pipeline import default_theorem_tag

    tag = args.theorem or default_theorem_tag(scalars, header.variant)
    pred = asy.predict_eigenvalues(scalars, tag, sorted({ev.index for ev in zeros}))
    report = asy.residual_report(zeros, pred)
    out = cfg.out or "residuals.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "re_eps", "im_eps", "abs_eps", "n_abs_eps"])
        for row in report.to_rows():
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
    summary = {"theorem": tag, "loglog_slope": report.loglog_slope,
               "tail_first": report.tail_first, "tail_second": report.tail_second,
               "tails_decreasing": report.tails_decreasing,
               "parity_fits": report.parity_fits}
    print(json.dumps(summary, indent=2, default=_jsonable), file=sys.stderr)
    print(f"wrote residual table to {out}", file=sys.stderr)
    return 0


def _cmd_gamma(cfg: RunConfig, args) -> int:
    p = Potential.from_dict(cfg.potential)
    scalars = derive_scalars(p)
    header, records = _load_spectrum_eigentuple(args.spectrum)
    zeros = eigenvalues_from_records(records)
    from .gamma_recovery import from_eigenvalues

    hp = from_eigenvalues(zeros, s=header.s)
    try:
        if args.route == "omega":
            est = gamma_from_omega(hp, scalars, cfg.variant,
                                   k0=cfg.gamma.get("k0"))
        elif args.route == "endpoint":
            est = gamma_from_endpoint(hp, scalars, cfg.variant,
                                      taus=cfg.gamma.get("taus"))
        else:
            dev = DEvaluator(p, cfg.variant, rtol=cfg.rtol)
            est = gamma_direct(dev, hp, args.probe)
    except UnstableLimitError as exc:
        _emit_json({"error": str(exc), "diagnostics": exc.diagnostics}, cfg.out)
        return 3
    _emit_json({"gamma": est.gamma, "route": est.route, "truncation": est.truncation,
                "probes": list(est.probes), "diagnostics": est.diagnostics}, cfg.out)
    return 0


def _cmd_validate(cfg: RunConfig, args) -> int:
    path = args.spectrum or cfg.validate.get("spectrum")
    if not path:
        raise ConfigError("validate needs --spectrum or validate.spectrum in the config")
    header, records, hash_ok = read_spectrum(path)
    report = run_validate(cfg, header, records, hash_ok)
    width = max(len(e.name) for e in report.entries)
    for e in report.entries:
        print(f"{e.name:<{width}}  {e.status.upper():<7}  {e.detail}")
    if cfg.out:
        _emit_json({"entries": [asdict(e) for e in report.entries],
                    "failed": report.failed}, cfg.out)
    return 2 if report.failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_run_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "spectrum":
            return _cmd_spectrum(cfg, args)
        if args.command == "charfun":
            return _cmd_charfun(cfg, args)
        if args.command == "asymptotics":
            return _cmd_asymptotics(cfg, args)
        if args.command == "gamma":
            return _cmd_gamma(cfg, args)
        if args.command == "validate":
            return _cmd_validate(cfg, args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TspecError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
