"""Command-line front end.

    phaseplane reduce  --system EXPR | --catalog NAME [--PARAM VALUE]... --amplitude A
    phaseplane period  ... --amplitude A [--method symmetric|two-branch] [--compare-oracle]
    phaseplane closure ... --amplitudes lo:hi:n [--find-root]
    phaseplane sweep   ... --amplitudes lo:hi:n [--compare-oracle]

Data goes to stdout (or --out); diagnostics go to stderr.  Exit codes:
0 success, 2 bad input, 3 no oscillation, 4 numerical failure, 5 oracle
disagreement above --max-rel-diff.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from typing import Sequence

import numpy as np

from . import catalog
from .errors import DomainError, NoOscillation, NotClosed, NumericalFailure, ParseError
from .oracle import measure_period, simulate
from .period import PeriodEstimate, period_two_branch, symmetric_from_report
from .reduction import closure_defect, find_limit_cycle_amplitude
from .system import OscillatorSystem

log = logging.getLogger("phaseplane")

EXIT_OK, EXIT_INPUT, EXIT_NO_OSC, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4, 5
REDUCE_POINTS = 1001


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """'lo:hi:n' to n equally spaced values, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must look like lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"range must look like lo:hi:n, got {text!r}") from None
    if n < 1 or (n == 1 and lo != hi):
        raise UsageError(f"range {text!r} needs n >= 2 (or lo == hi with n = 1)")
    return [float(a) for a in np.linspace(lo, hi, n)]


def _catalog_params(extra: Sequence[str]) -> dict:
    params = {}
    it = iter(extra)
    for flag in it:
        if not flag.startswith("--") or len(flag) < 3:
            raise UsageError(f"unexpected argument {flag!r}")
        name, eq, value = flag[2:].partition("=")
        if not eq:
            try:
                value = next(it)
            except StopIteration:
                raise UsageError(f"parameter {flag} needs a value") from None
        params[name] = value
    return params


def build_system(args, extra: Sequence[str]) -> OscillatorSystem:
    if args.system is not None:
        if extra:
            raise UsageError(f"unexpected arguments {' '.join(extra)}")
        return OscillatorSystem.from_text(args.system)
    try:
        return catalog.get(args.catalog, _catalog_params(extra))
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0]) if exc.args else str(exc)) from None


# computations shared by the subcommands =======================================

def oracle_period(sys_: OscillatorSystem, A: float, T_guess: float, tol: float) -> float:
    t_end = 1.5 * T_guess + 1.0
    for _ in range(6):
        try:
            return measure_period(simulate(sys_, A, 0.0, t_end, tol))[0]
        except NumericalFailure:
            t_end *= 4.0
    return measure_period(simulate(sys_, A, 0.0, t_end, tol))[0]


def compute_period(sys_: OscillatorSystem, A: float, tol: float, method: str,
                   compare_oracle: bool) -> dict:
    report = closure_defect(sys_, A, tol)
    if method == "symmetric":
        est: PeriodEstimate = symmetric_from_report(report, tol)
    else:
        est = period_two_branch(report, tol)
    out = {"T": est.T, "omega": est.omega, "err": est.err, "method": est.method}
    if compare_oracle:
        T_o = oracle_period(sys_, A, est.T, tol)
        out["oracle_T"] = T_o
        out["rel_diff"] = abs(est.T - T_o) / abs(T_o)
    return out


def reduce_table(sys_: OscillatorSystem, A: float, tol: float) -> list[dict]:
    report = closure_defect(sys_, A, tol)
    if not report.branches:
        raise NoOscillation(f"no oscillation from A={A!r}")
    turning = [A, report.lower_turning, report.return_point]
    xs = np.linspace(min(turning), max(turning), REDUCE_POINTS)
    cols = {}
    for br in report.branches:
        name = "upper" if br.spec.velocity_sign > 0 else "lower"
        lo, hi = br.span
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        inside = (xs >= lo - slack) & (xs <= hi + slack)
        u = np.full_like(xs, math.nan)
        u[inside] = br.u(np.clip(xs[inside], lo, hi))
        u[inside] = np.maximum(u[inside], 0.0)
        cols[f"u_{name}"] = u
        cols[f"phi_{name}"] = br.spec.velocity_sign * np.sqrt(u)
    rows = []
    for i, x in enumerate(xs):
        rows.append({"x": float(x),
                     "u_lower": float(cols["u_lower"][i]), "u_upper": float(cols["u_upper"][i]),
                     "phi_lower": float(cols["phi_lower"][i]),
                     "phi_upper": float(cols["phi_upper"][i])})
    return rows


def closure_rows(sys_: OscillatorSystem, amplitudes: Sequence[float], tol: float) -> list[dict]:
    rows = []
    for A in amplitudes:
        rep = closure_defect(sys_, A, tol, strict=False)
        rows.append({"A": A, "x_L": rep.lower_turning, "x_R": rep.return_point,
                     "defect": rep.defect, "verdict": rep.verdict})
    return rows


# output =======================================================================

def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    # NaN marks "not on this branch"; JSON has no NaN, so use null
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def write_table(rows: list[dict], columns: Sequence[str], fmt: str, stream,
                trailer: dict | None = None) -> None:
    if fmt == "json":
        doc = {"rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        if trailer is not None:
            doc["summary"] = trailer
        stream.write(json.dumps(doc, allow_nan=False) + "\n")
        return
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in columns])
    if trailer is not None:
        stream.write("# " + json.dumps(trailer) + "\n")


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# subcommands ==================================================================

def cmd_reduce(args, sys_):
    rows = reduce_table(sys_, args.amplitude, args.tol)
    return (rows, ["x", "u_lower", "u_upper", "phi_lower", "phi_upper"], None), EXIT_OK


def cmd_period(args, sys_):
    res = compute_period(sys_, args.amplitude, args.tol, args.method, args.compare_oracle)
    code = EXIT_OK
    if args.max_rel_diff is not None and res.get("rel_diff", 0.0) > args.max_rel_diff:
        print(f"phaseplane: rel_diff {res['rel_diff']:.3g} exceeds --max-rel-diff "
              f"{args.max_rel_diff:g}", file=sys.stderr)
        code = EXIT_MISMATCH
    return res, code


def cmd_closure(args, sys_):
    amps = parse_range(args.amplitudes)
    rows = closure_rows(sys_, amps, args.tol)
    trailer = None
    if args.find_root:
        lo, hi = min(amps), max(amps)
        # narrow the bracket to the first sign change seen in the scan
        scan = [(r["A"], r["defect"]) for r in rows if math.isfinite(r["defect"])]
        for (a0, d0), (a1, d1) in zip(scan, scan[1:]):
            if (d0 > 0) != (d1 > 0):
                lo, hi = a0, a1
                break
        A_star = find_limit_cycle_amplitude(sys_, lo, hi, integ_tol=args.tol)
        rep = closure_defect(sys_, A_star, args.tol)
        trailer = {"A_star": A_star, "defect": rep.defect, "bracket": [lo, hi]}
        for fact in catalog.facts(sys_.name, sys_.params) if sys_.name else []:
            if fact.name == "A*":
                trailer["oracle_A"] = fact.value
                trailer["abs_diff"] = abs(A_star - fact.value)
    return (rows, ["A", "x_L", "x_R", "defect", "verdict"], trailer), EXIT_OK


def cmd_sweep(args, sys_):
    amps = parse_range(args.amplitudes)
    rows = []
    code = EXIT_OK
    for A in amps:
        res = compute_period(sys_, A, args.tol, args.method, args.compare_oracle)
        rows.append({"A": A, **res})
        if args.max_rel_diff is not None and res.get("rel_diff", 0.0) > args.max_rel_diff:
            print(f"phaseplane: A={A!r}: rel_diff {res['rel_diff']:.3g} exceeds "
                  f"--max-rel-diff {args.max_rel_diff:g}", file=sys.stderr)
            code = EXIT_MISMATCH
    cols = ["A", "T", "omega", "err"]
    if args.compare_oracle:
        cols += ["oracle_T", "rel_diff"]
    return (rows, cols, None), code


COMMANDS = {"reduce": cmd_reduce, "period": cmd_period, "closure": cmd_closure,
            "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    # no abbreviations: catalog parameters such as --s or --c must not be
    # mistaken for prefixes of --system or --catalog
    p = argparse.ArgumentParser(prog="phaseplane", allow_abbrev=False,
                                description="Phase-plane reduction of x'' = f(x, x').")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, single: bool):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--system", metavar="EXPR", help="f(x, v) as an expression")
        src.add_argument("--catalog", metavar="NAME",
                         help=f"named oscillator: {', '.join(catalog.names())}; "
                              "parameters follow as --NAME VALUE")
        if single:
            sp.add_argument("--amplitude", type=float, required=True, metavar="A")
        else:
            sp.add_argument("--amplitudes", required=True, metavar="LO:HI:N")
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--out", metavar="PATH", help="write data here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--report", metavar="PATH", help="also write a JSON run report")
        sp.add_argument("-v", "--verbose", action="store_true")

    def period_opts(sp):
        sp.add_argument("--method", choices=("symmetric", "two-branch"), default="two-branch")
        sp.add_argument("--compare-oracle", action="store_true")
        sp.add_argument("--max-rel-diff", type=float, default=None)

    sp = sub.add_parser("reduce", allow_abbrev=False, help="tabulate u(x) and phi(x) on both branches")
    common(sp, True)
    sp = sub.add_parser("period", allow_abbrev=False, help="period of the orbit through (A, 0)")
    common(sp, True)
    period_opts(sp)
    sp = sub.add_parser("closure", allow_abbrev=False, help="closure defect across amplitudes")
    common(sp, False)
    sp.add_argument("--find-root", action="store_true",
                    help="locate the limit-cycle amplitude inside the range")
    sp = sub.add_parser("sweep", allow_abbrev=False, help="amplitude-period curve")
    common(sp, False)
    period_opts(sp)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # expressions such as "-x" look like options to argparse; glue them on
    argv_parsed = []
    it = iter(argv)
    for tok in it:
        if tok == "--system":
            nxt = next(it, None)
            tok = tok if nxt is None else f"--system={nxt}"
        argv_parsed.append(tok)
    args, extra = parser.parse_known_args(argv_parsed)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.tol <= 0:
        parser.error("--tol must be positive")
    started = time.perf_counter()
    try:
        sys_ = build_system(args, extra)
        log.info("system %s", sys_.describe())
        result, code = COMMANDS[args.command](args, sys_)
    except (UsageError, ParseError) as exc:
        print(f"phaseplane: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoOscillation as exc:
        print(f"phaseplane: no oscillation: {exc}", file=sys.stderr)
        return EXIT_NO_OSC
    except (NumericalFailure, NotClosed, DomainError) as exc:
        print(f"phaseplane: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    stream, close = _open_out(args.out)
    try:
        if args.command == "period":
            if args.format == "csv":
                write_table([result], list(result), "csv", stream)
            else:
                stream.write(json.dumps(result) + "\n")
        else:
            rows, cols, trailer = result
            write_table(rows, cols, args.format or "csv", stream, trailer)
    finally:
        if close:
            stream.close()

    if args.report:
        report = {
            "command": ["phaseplane", *argv],
            "system": sys_.describe(),
            "amplitudes": ([args.amplitude] if hasattr(args, "amplitude")
                           else parse_range(args.amplitudes)),
            "tolerances": {"tol": args.tol},
            "results": result if args.command == "period" else
            {"rows": result[0], "summary": result[2]},
            "exit_code": code,
            "wall_time_s": time.perf_counter() - started,
        }
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(_json_value(report), fh, indent=2, allow_nan=False)
            fh.write("\n")
    return code


def run() -> None:
    sys.exit(main())
