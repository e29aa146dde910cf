"""Command-line front end.

Standard output carries only the report (deterministic for a given command
line); progress and diagnostics go to standard error.

Exit codes: 0 all checks pass, 1 a check provably failed, 2 indeterminate
(precision insufficient), 64 usage error, 65 unreadable or corrupt cache,
69 precision or capacity limit reached.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, ball, exact, inequalities, series
from .ball import BallCoefficientTable, BallReal, PrecisionExhausted
from .cache import CACHE_DIR_ENV, CacheError, cache_filename, cache_load, cache_store, default_cache_dir
from .exact import CapacityError, ExactCoefficientTable

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE = 0, 1, 2
EXIT_USAGE, EXIT_DATAERR, EXIT_UNAVAILABLE = 64, 65, 69

REPORT_SCHEMA = 1
DEFAULT_N_MAX = 20000
SUITES = ("inequalities", "two-adic", "integrality", "oracles", "all")

log = logging.getLogger("orthounity")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2, which is taken
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# Formatting
# ----------------------------------------------------------------------------


def _decimal(q: Fraction, digits: int) -> str:
    if q == 0:
        return "0"
    with ball.working_precision(max(64, int(digits * 3.33) + 32)):
        return ball.to_arb(q).str(digits, radius=False)


def _fmt_value(value, digits: int = 20) -> str:
    if isinstance(value, BallReal):
        return f"{_decimal(value.midpoint, digits)} +/- {float(value.radius):.3e}"
    return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)


def _value_json(value) -> dict:
    if isinstance(value, BallReal):
        return {"mid": _decimal(value.midpoint, 30), "rad": f"{float(value.radius):.6e}"}
    return {"num": str(value.numerator), "den": str(value.denominator)}


def _provenance(table) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "engine": table.engine,
        "n_max": table.n_max,
        "precision_bits": getattr(table, "precision_bits", None),
    }


def _header_line(table) -> str:
    prov = _provenance(table)
    prec = prov["precision_bits"]
    return f"# engine={prov['engine']} n_max={prov['n_max']}" + (f" precision_bits={prec}" if prec else "")


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# ----------------------------------------------------------------------------
# Table acquisition
# ----------------------------------------------------------------------------


def _cache_path(args, engine: str, n_max: int) -> Path | None:
    if args.cache:
        return Path(args.cache)
    if os.environ.get(CACHE_DIR_ENV):
        return default_cache_dir() / cache_filename(engine, n_max, args.precision or "auto")
    return None


def _compute(args, engine: str, n_max: int):
    if engine == "exact":
        return exact.exact_coefficients(n_max, cap=math.inf if args.force else exact.EXACT_CAP)
    return ball.ball_coefficients(
        n_max,
        initial_precision_bits=args.precision,
        max_precision_bits=max(args.max_precision, args.precision or 0),
    )


def load_table(args, engine: str | None = None, n_max: int | None = None):
    engine = engine or args.engine
    n_max = args.n_max if n_max is None else n_max
    if engine == "exact" and n_max > exact.EXACT_CAP and not args.force:
        raise UsageError(f"--n-max {n_max} exceeds the exact-engine cap {exact.EXACT_CAP}; pass --force")
    path = _cache_path(args, engine, n_max)
    table = None
    if path is not None and path.exists():
        table = cache_load(path, expect_engine=engine)
        if table.n_max < n_max:
            log.info("cache %s holds n_max=%d < %d; recomputing", path, table.n_max, n_max)
            table = None
        elif engine == "ball" and isinstance(table, ExactCoefficientTable):
            table = ball.ball_table_from_exact(table.truncated(n_max), args.precision or ball.default_precision(n_max))
        elif engine == "ball" and args.precision and table.precision_bits < args.precision:
            log.info("cache %s has %d bits < %d requested; recomputing", path, table.precision_bits, args.precision)
            table = None
        else:
            log.info("loaded %s table n_max=%d from %s", table.engine, table.n_max, path)
            if table.n_max > n_max:
                table = table.truncated(n_max)
    if table is None:
        log.info("computing %s table up to n=%d", engine, n_max)
        table = _compute(args, engine, n_max)
        if path is not None:
            cache_store(path, table)
            log.info("stored cache %s", path)
    return table


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def _selected(args, table) -> list[int]:
    if args.index:
        bad = [n for n in args.index if not 0 <= n <= table.n_max]
        if bad:
            raise UsageError(f"index {bad[0]} outside 0..{table.n_max}")
        return sorted(set(args.index))
    return list(range(table.n_max + 1))


def _column_output(args, table, column: str, extra: dict | None = None) -> str:
    values = getattr(table, column)
    rows = _selected(args, table)
    fmt = args.format
    if fmt == "json":
        out = _provenance(table)
        out["column"] = column
        out["rows"] = [dict(n=n, **_value_json(values[n])) for n in rows]
        if extra:
            out.update(extra)
        return _dump_json(out)
    if fmt == "csv":
        if column == "coeffs" and not args.index:
            buf = io.StringIO()
            (ball if isinstance(table, BallCoefficientTable) else exact).write_csv(table, buf)
            return buf.getvalue()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if isinstance(table, BallCoefficientTable):
            writer.writerow(("n", "midpoint", "radius"))
            for n in rows:
                writer.writerow((n, _decimal(values[n].midpoint, 30), f"{float(values[n].radius):.6e}"))
        else:
            writer.writerow(("n", "numerator", "denominator"))
            for n in rows:
                writer.writerow((n, values[n].numerator, values[n].denominator))
        return buf.getvalue()
    lines = [_header_line(table)]
    lines += [f"{n} {_fmt_value(values[n])}" for n in rows]
    if extra:
        lines += [f"# {key}: {value}" for key, value in extra.items()]
    return "\n".join(lines)


def cmd_coeffs(args) -> int:
    _emit(_column_output(args, load_table(args), "coeffs"))
    return EXIT_OK


def cmd_sums(args) -> int:
    _emit(_column_output(args, load_table(args), "partial_sums"))
    return EXIT_OK


def cmd_norms(args) -> int:
    table = load_table(args)
    extra = None
    if table.n_max >= 2:
        k = ball.estimate_K(table)
        extra = {
            "K_lower": _decimal(k.lower, 16),
            "K_upper": _decimal(k.upper, 16),
            "K_width": f"{float(k.width):.3e}",
        }
    _emit(_column_output(args, table, "norms_sq", extra))
    return EXIT_OK


def _suite_inequalities(table, args) -> tuple[int, dict]:
    report = inequalities.verify_inequality_suite(table, max(args.n_lo, 1))
    status = EXIT_FAIL if report.failures else EXIT_INDETERMINATE if report.indeterminates else EXIT_OK
    detail = {
        "summary": report.summary(),
        "problems": [r.as_dict() for r in report.failures + report.indeterminates][:100],
    }
    if report.indeterminates:
        detail["needed_bits"] = max(r.needed_bits or 0 for r in report.indeterminates)
    return status, detail


def _exact_only(table, suite):
    if not isinstance(table, ExactCoefficientTable):
        raise UsageError(f"suite {suite} needs --engine exact")


def _suite_two_adic(table, args) -> tuple[int, dict]:
    _exact_only(table, "two-adic")
    bad = []
    for n in range(max(args.n_lo, 1), table.n_max + 1):
        check = exact.verify_two_adic_valuation(n, table.coeffs[n])
        if not check.passed:
            bad.append({"n": n, "expected": check.expected, "actual": check.actual})
    return (EXIT_FAIL if bad else EXIT_OK), {"checked": table.n_max - max(args.n_lo, 1) + 1, "failures": bad}


def _suite_integrality(table, args) -> tuple[int, dict]:
    _exact_only(table, "integrality")
    ns = range(max(args.n_lo, 1), table.n_max + 1)
    factorial = [n for n in ns if not exact.verify_factorial_integrality(n, table.coeffs[n])]
    # the double-factorial form holds only at n = 1; reported, not judged
    double = [n for n in ns if exact.verify_integrality_and_lower_bound(n, table.coeffs[n])]
    detail = {"factorial_failures": factorial, "double_factorial_form_holds_at": double}
    return (EXIT_FAIL if factorial else EXIT_OK), detail


def _suite_oracles(table, args) -> tuple[int, dict]:
    _exact_only(table, "oracles")
    det_hi = min(table.n_max, 30)
    perm_hi = min(table.n_max, 14)
    bad = []
    for n in range(1, det_hi + 1):
        if exact.coefficient_via_determinant(n) != table.coeffs[n]:
            bad.append({"n": n, "oracle": "determinant"})
    for n in range(1, perm_hi + 1):
        if exact.coefficient_via_permutation_sum(n) != table.coeffs[n]:
            bad.append({"n": n, "oracle": "permutation"})
    residual = [n for n in range(1, table.n_max + 1) if exact.recurrence_residual(table.coeffs, n) != 0]
    bad += [{"n": n, "oracle": "recurrence"} for n in residual]
    detail = {"determinant_upto": det_hi, "permutation_upto": perm_hi, "failures": bad}
    return (EXIT_FAIL if bad else EXIT_OK), detail


_SUITE_FUNCS = {
    "inequalities": _suite_inequalities,
    "two-adic": _suite_two_adic,
    "integrality": _suite_integrality,
    "oracles": _suite_oracles,
}


def _worst(codes) -> int:
    codes = list(codes)
    if EXIT_FAIL in codes:
        return EXIT_FAIL
    if EXIT_INDETERMINATE in codes:
        return EXIT_INDETERMINATE
    return EXIT_OK


def cmd_verify(args) -> int:
    table = load_table(args)
    if args.suite == "all":
        names = ["inequalities"] + (["two-adic", "integrality", "oracles"] if table.engine == "exact" else [])
    else:
        names = [args.suite]
    results = {}
    for name in names:
        code, detail = _SUITE_FUNCS[name](table, args)
        results[name] = {"status": _STATUS[code], **detail}
    status = _worst(_CODE[r["status"]] for r in results.values())
    if args.format == "json":
        _emit(_dump_json({**_provenance(table), "suites": results, "status": _STATUS[status]}))
    else:
        lines = [_header_line(table)]
        for name, res in results.items():
            lines.append(f"{name}: {res['status']}")
            if name == "inequalities":
                for key, counts in res["summary"].items():
                    lines.append(
                        f"  {key}: pass={counts['pass']} fail={counts['fail']} indeterminate={counts['indeterminate']}"
                    )
        _emit("\n".join(lines))
    return status


_STATUS = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_INDETERMINATE: "indeterminate"}
_CODE = {v: k for k, v in _STATUS.items()}


def cmd_signs(args) -> int:
    table = load_table(args)
    report = analysis.detect_sign_changes(table)
    status = EXIT_OK if report.certified else EXIT_INDETERMINATE
    if args.format == "json":
        _emit(_dump_json({**_provenance(table), **report.to_dict(), "new_sign_starts": list(report.new_sign_starts)}))
    elif args.format == "csv":
        rows = ["k,index"] + [f"{k},{t}" for k, t in enumerate(report.indices)]
        _emit("\n".join(rows))
    else:
        lines = [" ".join(map(str, report.indices))]
        if report.ratios:
            lines.append("ratios: " + " ".join(f"{r:.6g}" for r in report.ratios))
        if report.ambiguous:
            lines.append("ambiguous: " + " ".join(map(str, report.ambiguous)))
        _emit("\n".join(lines))
    return status


def _abbrev(ns: list[int], keep: int = 8) -> str:
    if len(ns) <= keep:
        return " ".join(map(str, ns))
    return f"{' '.join(map(str, ns[:3]))} ... {' '.join(map(str, ns[-3:]))} ({len(ns)} points)"


def cmd_delta(args) -> int:
    table = load_table(args)
    points = []
    for n in args.n or []:
        if not 2 <= n <= table.n_max:
            raise UsageError(f"--n {n} outside 2..{table.n_max}")
        try:
            est = analysis.delta_point_estimate(table, n)
        except analysis.IndeterminateMagnitude:
            points.append((n, None))
            continue
        points.append((n, est))
    lo, hi = args.window if args.window else (2, table.n_max)
    fit = analysis.fit_envelope_slope(table, lo, hi)
    status = EXIT_INDETERMINATE if any(v is None for _, v in points) else EXIT_OK
    if args.format == "json":
        out = {
            **_provenance(table),
            "delta": {
                "points": [[n, None if v is None else _decimal(v.midpoint, 16)] for n, v in points],
                "slope": fit.slope,
                "half_width": fit.half_width,
                "window": list(fit.window),
                "envelope": fit.envelope,
            },
        }
        _emit(_dump_json(out))
    else:
        lines = [_header_line(table)]
        for n, v in points:
            if v is None:
                lines.append(f"n={n} ln|c_n|/ln n: indeterminate")
            else:
                offset = v.midpoint + Fraction(7, 3)
                lines.append(f"n={n} ln|c_n|/ln n = {_fmt_value(v, 16)} (offset from -7/3: {float(offset):+.6g})")
        lines.append(
            f"envelope slope on [{fit.window[0]}, {fit.window[1]}]: {fit.slope:.6g} +/- {fit.half_width:.3g} "
            f"(heuristic; envelope points {_abbrev(fit.envelope)})"
        )
        _emit("\n".join(lines))
    return status


def _checks_output(args, table, checks: list[tuple[series.SeriesCheck, float]], extra_lines=()) -> int:
    status = _worst(EXIT_OK if c.verdict(tol) == "pass" else EXIT_FAIL for c, tol in checks)
    if args.format == "json":
        _emit(_dump_json({**_provenance(table), "checks": [c.to_dict(tol) for c, tol in checks], "status": _STATUS[status]}))
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("kind", "params", "value", "radius", "tail_bound", "verdict"))
        for c, tol in checks:
            params = ";".join(f"{k}={v}" for k, v in c.params.items())
            writer.writerow((c.kind, params, repr(float(c.value.midpoint)), f"{float(c.value.radius):.3e}", f"{c.tail_bound:.3e}", c.verdict(tol)))
        _emit(buf.getvalue())
    else:
        lines = [_header_line(table)]
        for c, tol in checks:
            params = " ".join(f"{k}={v}" for k, v in c.params.items())
            rig = "" if c.rigorous else f" [non-rigorous, quadrature error estimate {c.error_estimate:.3e}]"
            lines.append(
                f"{c.kind} {params}: residual {_fmt_value(c.value, 12)}, tail <= {c.tail_bound:.3e}, "
                f"tolerance {tol:g}: {c.verdict(tol)}{rig}"
            )
        lines.extend(extra_lines)
        _emit("\n".join(lines))
    return status


def _tolerance(args, default: float) -> float:
    return args.tolerance if args.tolerance is not None else default


def cmd_identities(args) -> int:
    table = load_table(args)
    N = args.N if args.N is not None else table.n_max
    if not 0 <= N <= table.n_max:
        raise UsageError(f"--N {N} outside 0..{table.n_max}")
    tol = _tolerance(args, 1e-5)
    checks = [(series.identity_partial_sum(table, r, N).to_check(), tol) for r in args.r]
    checks += [(series.rearranged_identity(table, r, N), tol) for r in (0, 1) if N > r]
    extra = []
    if any(c.verdict(t) == "fail" for c, t in checks) or args.decay:
        for r in args.r:
            if N >> 4 > r + 1:
                extra.append(f"measured residual decay r={r}: N^-{series.residual_decay_rate(table, r, N):.3f}")
    return _checks_output(args, table, checks, extra)


def _t_tolerance(args, t: float) -> float:
    return _tolerance(args, 1e-6 if t <= 0.5 else 1e-3)


def cmd_functional(args) -> int:
    table = load_table(args)
    N = args.N if args.N is not None else table.n_max
    checks = [(series.functional_equation_residual(table, t, N), _t_tolerance(args, t)) for t in args.t]
    return _checks_output(args, table, checks)


def cmd_integral(args) -> int:
    table = load_table(args)
    N = args.N if args.N is not None else table.n_max
    checks = [
        (series.integral_equation_residual(table, t, N, args.quad_order), _t_tolerance(args, t)) for t in args.t
    ]
    return _checks_output(args, table, checks)


def cmd_dirichlet(args) -> int:
    table = load_table(args)
    N = args.N if args.N is not None else table.n_max
    s = complex(args.s, args.s_imag)
    if not s.real > -0.5:
        raise UsageError("Re(s) must exceed -1/2")
    point = series.dirichlet_partial(table, s, N)
    verdict = None
    if s == 0:
        verdict = "pass" if point.contains(-1) else "fail"
    out = {
        **_provenance(table),
        "kind": "dirichlet",
        "params": {"s": [s.real, s.imag], "N": N},
        "value": [_decimal(point.real.midpoint, 20), _decimal(point.imag.midpoint, 20)],
        "radius": [f"{float(point.real.radius):.3e}", f"{float(point.imag.radius):.3e}"],
        "tail_bound": point.tail_bound,
        "verdict": verdict,
    }
    if args.format == "json":
        _emit(_dump_json(out))
    else:
        lines = [
            _header_line(table),
            f"C_N(s) s={s.real:g}{s.imag:+g}i N={N}: re {_fmt_value(point.real)}, im {_fmt_value(point.imag)}",
            f"tail <= {point.tail_bound:.6g}",
        ]
        if verdict:
            lines.append(f"interval contains C(0) = -1: {verdict}")
        _emit("\n".join(lines))
    return EXIT_FAIL if verdict == "fail" else EXIT_OK


def cmd_cross_validate(args) -> int:
    exact_n = min(args.exact_n_max, args.n_max)
    table_b = load_table(args, engine="ball")
    # --cache names a single file, which holds the ball table here
    table_e = exact.exact_coefficients(exact_n) if args.cache else load_table(args, engine="exact", n_max=exact_n)
    report = ball.cross_validate(table_e, table_b, strict=False)
    status = EXIT_OK if report.ok else EXIT_FAIL
    out = {
        **_provenance(table_b),
        "exact_n_max": exact_n,
        "n_checked": report.n_checked,
        "max_normalized_discrepancy": report.max_normalized_discrepancy,
        "violations": [list(v) for v in report.violations[:100]],
        "status": _STATUS[status],
    }
    if args.format == "json":
        _emit(_dump_json(out))
    else:
        _emit(
            f"{_header_line(table_b)}\ncross-validate exact 0..{exact_n}: {_STATUS[status]} "
            f"(max |mid - exact|/radius = {report.max_normalized_discrepancy:.4g}, "
            f"violations {len(report.violations)})"
        )
    return status


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError("t must lie in [0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--engine", choices=("exact", "ball"), default="ball")
    common.add_argument("--n-max", type=_nonneg_int, default=DEFAULT_N_MAX)
    common.add_argument("--precision", type=int, default=None, help="initial working precision in bits (default: auto)")
    common.add_argument("--max-precision", type=int, default=ball.DEFAULT_MAX_PRECISION)
    common.add_argument("--tolerance", type=_positive_float, default=None)
    common.add_argument("--cache", metavar="PATH", help=f"cache file (default: ${CACHE_DIR_ENV}/<engine>-<n>.csv if set)")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--force", action="store_true", help="allow exact runs beyond the exact-engine cap")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress on stderr")

    parser = _Parser(prog="orthounity", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    for name, func, column in (
        ("coeffs", cmd_coeffs, "c_n"),
        ("sums", cmd_sums, "s_n"),
        ("norms", cmd_norms, "||p_n||^2 and the K enclosure"),
    ):
        p = add(name, func, f"print {column}")
        p.add_argument("--index", type=_nonneg_int, action="append", help="print only this n (repeatable)")

    p = add("verify", cmd_verify, "run a verification suite")
    p.add_argument("--suite", choices=SUITES, default="inequalities")
    p.add_argument("--n-lo", type=_nonneg_int, default=1)

    add("signs", cmd_signs, "certified sign changes of c_n")

    p = add("delta", cmd_delta, "decay exponent estimates")
    p.add_argument("--n", type=int, action="append", help="point estimate ln|c_n|/ln n (repeatable)")
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))

    p = add("identities", cmd_identities, "harmonic-number identities")
    p.add_argument("--r", type=_nonneg_int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--N", type=_nonneg_int)
    p.add_argument("--decay", action="store_true", help="always report the measured residual decay rate")

    for name, func in (("functional", cmd_functional), ("integral", cmd_integral)):
        p = add(name, func, f"{name} equation residuals")
        p.add_argument("--t", type=_unit_interval, nargs="+", default=[0.1, 0.5, 0.9])
        p.add_argument("--N", type=_nonneg_int)
        if name == "integral":
            p.add_argument("--quad-order", type=int, default=64)

    p = add("dirichlet", cmd_dirichlet, "partial sums of C(s)")
    p.add_argument("--s", type=float, default=0.0, help="real part")
    p.add_argument("--s-imag", type=float, default=0.0)
    p.add_argument("--N", type=int)

    p = add("cross-validate", cmd_cross_validate, "exact values inside ball enclosures")
    p.add_argument("--exact-n-max", type=_nonneg_int, default=500)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(message)s",
    )
    try:
        if args.engine == "ball" and args.n_max < 1:
            raise UsageError("the ball engine needs --n-max >= 1")
        if args.precision is not None and args.precision < 64:
            raise UsageError("--precision must be at least 64")
        return args.func(args)
    except UsageError as exc:
        print(f"orthounity: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CacheError as exc:
        print(f"orthounity: corrupt cache: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except (PrecisionExhausted, CapacityError) as exc:
        print(f"orthounity: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    except ValueError as exc:
        print(f"orthounity: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
