import json
from fractions import Fraction

import pytest

from orthounity.ball import BallCoefficientTable, BallReal, ball_coefficients
from orthounity.exact import exact_coefficients
from orthounity.inequalities import FAIL, INDETERMINATE, INEQUALITIES, PASS, verify_inequality_suite


def brute_force_status(table, n):
    """Each inequality written out directly from the exact columns."""
    c, s, d = table.coeffs[n], table.partial_sums[n], table.energies[n]
    weighted = sum((k + 1) * table.coeffs[k] ** 2 for k in range(n))
    return {
        "lemma1": c * c <= d / n**3,
        "lemma2": s * s <= d / (2 * n + 3),
        "lemma3": d <= n * s * s + (n + 1) * c * c / 2 + weighted,
        "recursive": c * c <= 4 * weighted / n**3,
        "prac": c * c <= Fraction(32, n),
        "theorem": c * c < Fraction(30782, n**3),
    }


def test_exact_suite_matches_brute_force():
    t = exact_coefficients(80)
    report = verify_inequality_suite(t)
    by_key = {(r.n, r.inequality_id): r.status for r in report.results}
    for n in range(1, 81):
        expected = brute_force_status(t, n)
        for key, (first, _) in INEQUALITIES.items():
            if n >= first:
                assert by_key[(n, key)] == (PASS if expected[key] else FAIL)


def test_exact_suite_to_500(exact500):
    report = verify_inequality_suite(exact500, 1, 500)
    assert report.passed
    assert not report.failures and not report.indeterminates
    assert report.count(PASS) == 6 * 500 - 2


def test_lemma1_skips_n1():
    report = verify_inequality_suite(exact_coefficients(5), 1, 5)
    assert (1, "lemma1") in report.skipped and (1, "recursive") in report.skipped
    assert not any(r.n == 1 and r.inequality_id == "lemma1" for r in report.results)


def test_ball_suite_agrees_with_exact(exact500, ball2000):
    exact_report = verify_inequality_suite(exact500, 1, 500)
    ball_report = verify_inequality_suite(ball2000, 1, 500)
    assert [r.status for r in ball_report.results] == [r.status for r in exact_report.results]


def test_ball_suite_to_20000(ball20000):
    report = verify_inequality_suite(ball20000)
    assert not report.failures
    assert not report.indeterminates
    assert report.summary()["theorem"][PASS] == 20000


def test_wide_balls_are_indeterminate():
    t = ball_coefficients(20)
    loose = [BallReal(b.midpoint, Fraction(10), b.precision_bits) for b in t.coeffs]
    wide = BallCoefficientTable(tuple(loose), t.partial_sums, t.norms_sq, t.energies, t.precision_bits)
    report = verify_inequality_suite(wide, 2, 20)
    assert report.indeterminates and not report.passed
    assert all(r.needed_bits and r.needed_bits > t.precision_bits for r in report.indeterminates)


def test_json_schema(exact60):
    report = verify_inequality_suite(exact60, 2, 3)
    rows = json.loads(report.to_json())
    assert rows[0].keys() == {"n", "inequality_id", "status"}
    assert {r["status"] for r in rows} <= {PASS, FAIL, INDETERMINATE}
    assert json.loads(report.to_json(only_problems=True)) == []


def test_range_validation(exact60):
    with pytest.raises(ValueError):
        verify_inequality_suite(exact60, 5, 61)
    with pytest.raises(ValueError):
        verify_inequality_suite(exact60, 10, 5)
