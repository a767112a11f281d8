"""Command-line interface.

Subcommands: ``classify``, ``verify``, ``scan``, ``oracle``, ``hset`` and
``boundaries``.  Results are JSON (CSV for ``scan``) with numbers printed to
12 significant digits.  Exit codes: 0 success, 2 invalid input, 3 search
failure or failed verification, 4 ambiguous phase.

Scan job files are flat ``key = value`` text; ``#`` starts a comment::

    exponents = 4,28,84
    lambda1 = 0.88
    lambda2 = 0.1108:0.1118:0.0005   # lo:hi:step, inclusive
    oracle = false
    oracle_grid = 2000
    workers = 2
    output = scan.csv

Keys ``lambda1`` .. ``lambda{n-1}`` give one axis per free weight; the last
weight is always derived.  Every computation is deterministic, so
``--seedless`` is accepted by every command and changes nothing.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .classifier import ClassifyOptions, classify, phase_scan, two_component_boundaries
from .errors import AmbiguousPhase, ParisiError, SearchFailure, ValidationError
from .hset import condition_kappa
from .kernels import Chain
from .measure import measure_from_dict, measure_to_dict, verify_parisi
from .mixture import make_mixture

__all__ = ["main", "build_parser", "parse_scan_job", "format_number"]

EXIT_OK, EXIT_INVALID, EXIT_SEARCH, EXIT_AMBIGUOUS = 0, 2, 3, 4
DIGITS = 12


def format_number(x):
    """Round a float to 12 significant digits (non-finite values become strings)."""
    x = float(x)
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return float(f"{x:.{DIGITS}g}")


def _round(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, int):
        return obj
    try:
        return format_number(obj)
    except (TypeError, ValueError):
        return str(obj)


def _emit(obj, out):
    out.write(json.dumps(_round(obj), indent=2) + "\n")


def _float_list(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: expected a comma-separated list of numbers") from exc


def _int_list(text, what):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: expected a comma-separated list of integers") from exc


def _spec_from_args(args):
    return make_mixture(_int_list(args.exponents, "--exponents"),
                        _float_list(args.weights, "--weights"),
                        derive_last=args.derive_last, diagnostic=args.diagnostic)


def _add_mixture_flags(p):
    p.add_argument("--exponents", required=True, help="comma list, e.g. 4,28,84")
    p.add_argument("--weights", required=True, help="comma list of weights")
    p.add_argument("--derive-last", action="store_true",
                   help="the last weight is one minus the given ones")
    p.add_argument("--diagnostic", action="store_true", help="allow exponent 2")


# ------------------------------------------------------------------ commands

def cmd_classify(args, out):
    spec = _spec_from_args(args)
    opts = ClassifyOptions(oracle=not args.no_oracle, oracle_grid=args.oracle_grid)
    res = classify(spec, opts)
    _emit({"phase": res.label.to_dict(), "energy": res.energy,
           "measure": measure_to_dict(res.measure),
           "verification": res.verification.to_dict(),
           "oracle_gap": res.oracle_gap,
           "criterion_agrees": res.criterion_agrees,
           "near_boundary": res.near_boundary}, out)
    return EXIT_OK


def cmd_verify(args, out):
    try:
        with open(args.measure) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read measure file: {exc}") from exc
    if "measure" in data and isinstance(data["measure"], dict):
        data = data["measure"]
    meas = measure_from_dict(data)
    rep = verify_parisi(meas.spec, meas, grid_size=args.grid)
    _emit(rep.to_dict(), out)
    return EXIT_OK if rep.passed else EXIT_SEARCH


def _parse_axis(text):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"range axis must be lo:hi:step, got {text!r}")
        try:
            return tuple(float(v) for v in parts)
        except ValueError as exc:
            raise ValidationError(f"bad range axis {text!r}") from exc
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"bad axis value {text!r}") from exc


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"bad boolean {text!r}")


def parse_scan_job(text):
    """Parse a scan job file into a dict of settings.

    Returns
    -------
    dict
        ``exponents``, ``axes`` (list), ``oracle``, ``oracle_grid``,
        ``workers`` and ``output`` (``None`` means standard output).
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected key = value")
        key, value = (v.strip() for v in line.split("=", 1))
        if key in raw:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    if "exponents" not in raw:
        raise ValidationError("scan job needs 'exponents'")
    exps = _int_list(raw.pop("exponents"), "exponents")
    axes = []
    for i in range(1, len(exps)):
        key = f"lambda{i}"
        if key not in raw:
            raise ValidationError(f"scan job needs {key!r}")
        axes.append(_parse_axis(raw.pop(key)))
    job = {"exponents": exps, "axes": axes, "oracle": True, "oracle_grid": 2000,
           "workers": 1, "output": None}
    try:
        if "oracle" in raw:
            job["oracle"] = _parse_bool(raw.pop("oracle"))
        if "oracle_grid" in raw:
            job["oracle_grid"] = int(raw.pop("oracle_grid"))
        if "workers" in raw:
            job["workers"] = int(raw.pop("workers"))
    except ValueError as exc:
        raise ValidationError(f"bad scan job value: {exc}") from exc
    if "output" in raw:
        job["output"] = raw.pop("output")
    if raw:
        raise ValidationError(f"unknown scan job keys: {sorted(raw)}")
    return job


SCAN_HEADER = ["lambda1", "lambda2", "phase_kind", "k", "composition", "f_set",
               "energy", "oracle_gap", "flags"]


def _csv_cell(v):
    if isinstance(v, float):
        return f"{v:.{DIGITS}g}"
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


def write_scan_csv(rows, fh):
    """Write scan rows under the fixed header."""
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(SCAN_HEADER)
    for row in rows:
        w = row["weights"]
        wr.writerow([_csv_cell(w[0]) if len(w) > 0 else "",
                     _csv_cell(w[1]) if len(w) > 1 else "",
                     row["phase_kind"], row["k"], _csv_cell(row["composition"]),
                     _csv_cell(row["f_set"]), _csv_cell(row["energy"]),
                     _csv_cell(row["oracle_gap"]), row["flags"]])


def cmd_scan(args, out):
    if args.job:
        try:
            with open(args.job) as fh:
                job = parse_scan_job(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read scan job: {exc}") from exc
    else:
        if not args.exponents:
            raise ValidationError("scan needs a job file or --exponents")
        job = {"exponents": _int_list(args.exponents, "--exponents"),
               "axes": [_parse_axis(a) for a in (args.axis or [])],
               "oracle": not args.no_oracle, "oracle_grid": args.oracle_grid,
               "workers": args.workers, "output": args.output}
    opts = ClassifyOptions(oracle=job["oracle"], oracle_grid=job["oracle_grid"])
    rows = phase_scan(job["exponents"], job["axes"], opts, workers=job["workers"])
    if job["output"]:
        with open(job["output"], "w", newline="") as fh:
            write_scan_csv(rows, fh)
    else:
        write_scan_csv(rows, out)
    return EXIT_OK


def cmd_oracle(args, out):
    from .oracle import extract_phase, minimize_cs, write_phi_csv
    spec = _spec_from_args(args)
    sol = minimize_cs(spec, N=args.N)
    payload = sol.to_dict()
    try:
        payload["phase"] = extract_phase(spec, sol)
    except SearchFailure as exc:
        payload["phase"] = {"error": str(exc)}
    if args.phi_csv:
        write_phi_csv(sol, args.phi_csv)
    _emit(payload, out)
    return EXIT_OK


def cmd_hset(args, out):
    spec = _spec_from_args(args)
    chain = Chain(_float_list(args.chain, "--chain"))
    rep = condition_kappa(spec, chain)
    _emit(rep.to_dict(), out)
    return EXIT_OK


def cmd_boundaries(args, out):
    table = two_component_boundaries(args.p, args.s)
    _emit(table, out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="parisi-zero",
        description="Phase classification of spherical mixed p-spin models at zero temperature.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seedless", action="store_true",
                        help="accepted for compatibility; every command is deterministic")

    p = sub.add_parser("classify", parents=[common], help="classify one mixture")
    _add_mixture_flags(p)
    p.add_argument("--no-oracle", action="store_true", help="skip the convex cross-check")
    p.add_argument("--oracle-grid", type=int, default=2000)
    p.add_argument("--json", action="store_true", help="JSON output (the default format)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", parents=[common], help="verify a measure JSON file")
    p.add_argument("--measure", required=True)
    p.add_argument("--grid", type=int, default=4096)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", parents=[common], help="classify a grid of weights")
    p.add_argument("job", nargs="?", help="scan job file")
    p.add_argument("--exponents")
    p.add_argument("--axis", action="append",
                   help="one per free weight: a value or lo:hi:step (repeatable)")
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--oracle-grid", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="CSV path (default: standard output)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("oracle", parents=[common], help="minimize the functional on a grid")
    _add_mixture_flags(p)
    p.add_argument("--N", type=int, default=2000, help="grid intervals")
    p.add_argument("--phi-csv", help="also write the tail to this CSV path")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("hset", parents=[common], help="kernel margins of a chain")
    _add_mixture_flags(p)
    p.add_argument("--chain", required=True, help="comma list, e.g. 0,0.9345,0.975,1")
    p.set_defaults(func=cmd_hset)

    p = sub.add_parser("boundaries", parents=[common],
                       help="phase boundaries of lam x^p + (1 - lam) x^s")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.set_defaults(func=cmd_boundaries)
    return parser


def main(argv=None, out=None, err=None):
    """Run the CLI; returns the exit code."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except AmbiguousPhase as exc:
        err.write(f"ambiguous phase: {exc}\n")
        return EXIT_AMBIGUOUS
    except ValidationError as exc:
        err.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except SearchFailure as exc:
        err.write(f"{type(exc).__name__}: {exc}\n")
        if exc.details:
            _emit({"error": type(exc).__name__, "reason": exc.reason,
                   "details": exc.details}, out)
        return EXIT_SEARCH
    except ParisiError as exc:
        err.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_SEARCH
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
