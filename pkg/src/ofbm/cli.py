"""Command line front end: validate, cov, specdens, simulate, verify.

Exit status: 0 success, 1 parse or validation failure, 2 numerical tolerance failure.
OFBM_NUM_THREADS caps the BLAS thread pools when set before the first numpy import.
"""
import os

if os.environ.get("OFBM_NUM_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["OFBM_NUM_THREADS"])

import argparse  # noqa: E402
import csv  # noqa: E402
import dataclasses  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__, covariance, model, simulate, spectrum, verify  # noqa: E402
from .errors import (  # noqa: E402
    AmbiguousEntry,
    CovarianceNotPsd,
    LrdRangeError,
    OfbmError,
    ToleranceNotMet,
)
from .io import load_document, model_to_document  # noqa: E402

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (ToleranceNotMet, CovarianceNotPsd, AmbiguousEntry)
RECONSTRUCTION_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse would exit with 2, which is reserved for tolerance failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def parse_grid(spec):
    """'a:b:n' (n evenly spaced points, ends included), 'v1,v2,...', or '' for an empty grid."""
    spec = (spec or "").strip()
    if not spec:
        return np.zeros(0)
    try:
        if ":" in spec:
            a, b, n = spec.split(":")
            n = int(n)
            if n < 0:
                raise ValueError
            return np.linspace(float(a), float(b), n)
        return np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise UsageError(f"bad grid spec {spec!r}; use 'start:stop:count' or a comma list") from None


def _fmt(v):
    return format(float(v), ".17g")


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config(doc, tol):
    return doc.quadrature if tol is None else dataclasses.replace(doc.quadrature, tol=tol)


def _complex_list(z):
    return [z.real, z.imag]


def validation_report(doc):
    m = doc.model
    ex = m.exponent
    report = {
        "name": doc.name,
        "dimension": m.n,
        "roots": [_complex_list(complex(h)) for h in ex.roots],
        "half_root": bool(ex.half_root),
        "flags": dict(m.flags),
        "proper_witness": model.check_proper(m).witness,
        "derived": {},
        "reconstruction_residual": 0.0,
    }
    derived = {}
    for kind in ("spectral", "time", "bm"):
        try:
            derived[kind] = model_to_document(m, kind)["parameterization"][kind]
        except model.ValidationError:
            continue
    report["derived"] = derived
    if m.time is not None:
        back = model.a_from_m(m.time, ex)
        res = max(np.abs(back.A1 - m.spectral.A1).max(), np.abs(back.A2 - m.spectral.A2).max())
        report["reconstruction_residual"] = float(res / m.a_scale)
    report["ok"] = report["reconstruction_residual"] <= RECONSTRUCTION_TOL
    return report


def cmd_validate(args):
    doc = load_document(args.model)
    report = validation_report(doc)
    _write_json(args.out, report)
    return EXIT_OK if report["ok"] else EXIT_INVALID


def cmd_cov(args):
    doc = load_document(args.model)
    config = _config(doc, args.tol)
    grid = parse_grid(args.grid)
    method = "full" if args.method == "full" else "auto"
    rows = []
    n = doc.model.n
    for s in grid:
        for t in grid:
            v, e = covariance.cov(doc.model, s, t, method=method, config=config, return_error=True)
            rows += [[_fmt(s), _fmt(t), i, j, _fmt(v[i, j]), _fmt(e[i, j])]
                     for i in range(n) for j in range(n)]
    _write_rows(args.out, ["s", "t", "i", "j", "value", "err"], rows)
    return EXIT_OK


def cmd_specdens(args):
    doc = load_document(args.model)
    m = doc.model
    grid = parse_grid(args.grid)
    n = m.n
    if args.mode == "dichotomy":
        rep = spectrum.dichotomy_classify(m, probes=grid if grid.size else None, diagnostic=args.diagnostic)
        if rep.banner:
            print(f"warning: {rep.banner}", file=sys.stderr)
        rows = [[i, j, rep.labels[i, j]] for i in range(n) for j in range(n)]
        _write_rows(args.out, ["i", "j", "label"], rows)
        return EXIT_OK
    if args.mode == "ct":
        vals = spectrum.ofgn_density_ct(m, grid) if grid.size else np.zeros((0, n, n))
        rows = [[_fmt(x), i, j, _fmt(v[i, j].real), _fmt(v[i, j].imag)]
                for x, v in zip(grid, vals) for i in range(n) for j in range(n)]
        _write_rows(args.out, ["x", "i", "j", "re", "im"], rows)
        return EXIT_OK
    tol = 1e-10 if args.tol is None else args.tol
    rows = []
    if grid.size:
        try:
            g = spectrum.ofgn_density_dt(m, grid, tol=tol)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for k, x in enumerate(g.frequencies):
            if g.tail_bound[k] > tol * max(1.0, np.abs(g.values[k]).max()):
                raise ToleranceNotMet(f"dt density at x = {x:g}: tail bound {g.tail_bound[k]:.3g}",
                                      float(g.tail_bound[k]))
            v = g.values[k]
            rows += [[_fmt(x), i, j, _fmt(v[i, j].real), _fmt(v[i, j].imag), int(g.K[k]),
                      _fmt(g.tail_bound[k])] for i in range(n) for j in range(n)]
    _write_rows(args.out, ["x", "i", "j", "re", "im", "K", "tail_bound"], rows)
    return EXIT_OK


def manifest_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def cmd_simulate(args):
    if not args.out or args.out == "-":
        raise UsageError("simulate needs --out PATH (a manifest is written next to it)")
    doc = load_document(args.model)
    m = doc.model
    times = parse_grid(args.grid)
    if args.n_paths < 0:
        raise UsageError("--n-paths must be >= 0")
    seed = args.seed
    manifest = {
        "version": __version__,
        "seed": seed,
        "method": args.method,
        "n_paths": args.n_paths,
        "times": [float(t) for t in times],
        "model_sha256": doc.sha256,
        "model": args.model,
    }
    if args.method == "spectral":
        freq = simulate.FrequencyGridSpec.for_grid(times, **doc.frequency)
        ens = simulate.simulate_spectral(m, times, args.n_paths, seed, freq=freq)
        manifest["frequency"] = {k: ens.info[k] for k in ("x_min", "x_max", "per_decade", "dx", "nodes")}
    else:
        ens = simulate.simulate_cholesky(m, times, args.n_paths, seed, config=_config(doc, args.tol))
        manifest["jitter"] = ens.info["jitter"]
    if args.n_paths > 0:
        rows = [[p, _fmt(t), i, _fmt(ens.paths[p, k, i])]
                for p in range(ens.n_paths) for k, t in enumerate(times) for i in range(m.n)]
        _write_rows(args.out, ["path", "t", "i", "value"], rows)
        manifest["paths_file"] = Path(args.out).name
    else:
        manifest["paths_file"] = None
    _write_json(manifest_path(args.out), manifest)
    return EXIT_OK


def cmd_verify(args):
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    failed = False
    out = []
    for name in names:
        rows, secs = verify.run_suite(name, tol=args.tol)
        for r in rows:
            failed |= not r.passed
            mark = "PASS" if r.passed else "FAIL"
            out.append(f"{mark}  {name:13s} {r.value:10.3e} <= {r.threshold:9.3e}  {r.name}")
        out.append(f"----  {name}: {sum(r.passed for r in rows)}/{len(rows)} passed in {secs:.1f}s")
    text = "\n".join(out) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser():
    p = _Parser(prog="ofbm", description="Operator fractional Brownian motion toolkit")
    p.add_argument("--version", action="version", version=f"ofbm {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=True):
        sp.add_argument("--model", required=True, help="model JSON path or fixture:NAME")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        if grid:
            sp.add_argument("--grid", default="", help="'start:stop:count' or comma list")
        sp.add_argument("--tol", type=float, default=None, help="numerical tolerance override")

    sp = sub.add_parser("validate", help="validation report as JSON")
    common(sp, grid=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("cov", help="covariance E X(s) X(t)^T over grid x grid")
    common(sp)
    sp.add_argument("--method", choices=("auto", "full"), default="auto")
    sp.set_defaults(func=cmd_cov)

    sp = sub.add_parser("specdens", help="spectral density tables or the dichotomy labels")
    common(sp)
    sp.add_argument("--mode", choices=("ct", "dt", "dichotomy"), default="dt")
    sp.add_argument("--diagnostic", action="store_true",
                    help="label entries outside the long-range setting instead of failing")
    sp.set_defaults(func=cmd_specdens)

    sp = sub.add_parser("simulate", help="sample paths plus a JSON manifest")
    common(sp)
    sp.add_argument("--n-paths", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--method", choices=("spectral", "cholesky"), default="spectral")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=sorted(verify.SUITES) + ["all"])
    sp.add_argument("--out", default=None)
    sp.add_argument("--tol", type=float, default=None, help="override the suite tolerance")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("ofbm: error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"ofbm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LrdRangeError as exc:
        print(f"ofbm: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except model.ValidationError as exc:
        print(f"ofbm: invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OfbmError, UsageError) as exc:
        print(f"ofbm: {exc}", file=sys.stderr)
        return EXIT_INVALID

