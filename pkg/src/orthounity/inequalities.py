"""Per-n checks of the growth inequalities for c_n, s_n and D(n).

Works on both engines.  On an exact table every comparison is decided; on a
ball table a comparison whose enclosure straddles the boundary is reported
as ``indeterminate`` instead of guessing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from flint import arb, fmpq

from .ball import BallCoefficientTable, working_precision
from .exact import ExactCoefficientTable

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"

# id -> (first n the statement covers, strict?)
INEQUALITIES = {
    "lemma1": (2, False),  # c_n^2 <= D(n)/n^3
    "lemma2": (1, False),  # s_n^2 <= D(n)/(2n+3)
    "lemma3": (1, False),  # D(n) <= n s_n^2 + (n+1) c_n^2/2 + sum_{k<n} (k+1) c_k^2
    "recursive": (2, False),  # c_n^2 <= 4/n^3 sum_{k<n} (k+1) c_k^2
    "prac": (1, False),  # c_n^2 <= 32/n
    "theorem": (1, True),  # c_n^2 < 30782/n^3
}


@dataclass(frozen=True)
class InequalityResult:
    n: int
    inequality_id: str
    status: str
    needed_bits: int | None = None

    def as_dict(self) -> dict:
        return {"n": self.n, "inequality_id": self.inequality_id, "status": self.status}


@dataclass
class InequalityReport:
    engine: str
    n_lo: int
    n_hi: int
    results: list[InequalityResult] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def count(self, status: str, inequality_id: str | None = None) -> int:
        return sum(
            1
            for r in self.results
            if r.status == status and (inequality_id is None or r.inequality_id == inequality_id)
        )

    @property
    def failures(self) -> list[InequalityResult]:
        return [r for r in self.results if r.status == FAIL]

    @property
    def indeterminates(self) -> list[InequalityResult]:
        return [r for r in self.results if r.status == INDETERMINATE]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.indeterminates

    def summary(self) -> dict[str, dict[str, int]]:
        return {
            key: {s: self.count(s, key) for s in (PASS, FAIL, INDETERMINATE)} for key in INEQUALITIES
        }

    def to_json(self, only_problems: bool = False) -> str:
        rows = self.failures + self.indeterminates if only_problems else self.results
        return json.dumps([r.as_dict() for r in rows])


def _differences(n, c, s, d, weighted):
    """lhs - rhs for every inequality at index n (same expression for both engines)."""
    c2 = c * c
    return {
        "lemma1": c2 - d / n**3,
        "lemma2": s * s - d / (2 * n + 3),
        "lemma3": d - (n * s * s + (n + 1) * c2 / 2 + weighted),
        "recursive": c2 - 4 * weighted / n**3,
        "prac": c2 - Fraction(32, n) if isinstance(c2, Fraction) else c2 - fmpq(32, n),
        "theorem": c2 - Fraction(30782, n**3) if isinstance(c2, Fraction) else c2 - fmpq(30782, n**3),
    }


def _exact_status(diff: Fraction, strict: bool) -> str:
    ok = diff < 0 if strict else diff <= 0
    return PASS if ok else FAIL


def _ball_status(diff: arb, strict: bool, precision: int) -> tuple[str, int | None]:
    if strict:
        if diff < 0:
            return PASS, None
        if diff >= 0:
            return FAIL, None
    else:
        if diff <= 0:
            return PASS, None
        if diff > 0:
            return FAIL, None
    mid = abs(float(diff.mid()))
    rad = float(diff.rad())
    if mid == 0.0:
        return INDETERMINATE, 2 * precision
    return INDETERMINATE, precision + max(1, math.ceil(math.log2(rad / mid))) + 8


def verify_inequality_suite(
    table: ExactCoefficientTable | BallCoefficientTable, n_lo: int = 1, n_hi: int | None = None
) -> InequalityReport:
    n_hi = table.n_max if n_hi is None else n_hi
    if not 0 <= n_lo <= n_hi <= table.n_max:
        raise ValueError(f"range [{n_lo}, {n_hi}] not within table 0..{table.n_max}")
    report = InequalityReport(table.engine, n_lo, n_hi)
    if isinstance(table, BallCoefficientTable):
        _run_ball(table, n_lo, n_hi, report)
    else:
        _run_exact(table, n_lo, n_hi, report)
    return report


def _record(report, n, diffs, decide):
    for key, (first, strict) in INEQUALITIES.items():
        if n < first:
            report.skipped.append((n, key))
            continue
        status, needed = decide(diffs[key], strict)
        report.results.append(InequalityResult(n, key, status, needed))


def _run_exact(table: ExactCoefficientTable, n_lo: int, n_hi: int, report: InequalityReport) -> None:
    weighted = Fraction(0)  # sum_{k<n} (k+1) c_k^2
    for n in range(n_hi + 1):
        c = table.coeffs[n]
        if n >= n_lo and n >= 1:
            diffs = _differences(n, c, table.partial_sums[n], table.energies[n], weighted)
            _record(report, n, diffs, lambda d, strict: (_exact_status(d, strict), None))
        elif n >= n_lo:
            report.skipped.extend((n, key) for key in INEQUALITIES)
        weighted += (n + 1) * c * c


def _run_ball(table: BallCoefficientTable, n_lo: int, n_hi: int, report: InequalityReport) -> None:
    prec = table.precision_bits + 32
    with working_precision(prec):
        weighted = arb(0)
        for n in range(n_hi + 1):
            c = table.coeffs[n].to_arb()
            if n >= n_lo and n >= 1:
                diffs = _differences(
                    n, c, table.partial_sums[n].to_arb(), table.energies[n].to_arb(), weighted
                )
                _record(report, n, diffs, lambda d, strict: _ball_status(d, strict, table.precision_bits))
            elif n >= n_lo:
                report.skipped.extend((n, key) for key in INEQUALITIES)
            weighted += (n + 1) * c * c
