import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthounity import ball
from orthounity.ball import (
    BallCoefficientTable,
    BallReal,
    ContainmentError,
    PrecisionExhausted,
    ball_coefficients,
    ball_table_from_exact,
    coefficient_error_ulps,
    cross_validate,
    estimate_K,
    fixed_point_midpoints,
    tail_bound,
)
from orthounity.exact import exact_coefficients

FIRST = [Fraction(1), Fraction(-3, 2), Fraction(5, 24), Fraction(77, 720), Fraction(277, 4480), Fraction(140173, 3628800)]


def shifted_expansion(m, n_max):
    """Coefficients d_n (n >= m, d_m = 1) of the orthorecursive expansion of x^m over x^{m+1}, ...

    This is also the response of the recurrence to a unit perturbation at index m.
    """
    d = {m: Fraction(1)}
    for n in range(m + 1, n_max + 1):
        d[n] = -(2 * n + 1) * sum(d[k] / (n + 1 + k) for k in range(m, n))
    return d


# ---------------------------------------------------------------- BallReal


def test_ball_basics():
    b = BallReal(Fraction(1, 2), Fraction(1, 8))
    assert b.lower == Fraction(3, 8) and b.upper == Fraction(5, 8)
    assert b.contains(Fraction(1, 2)) and not b.contains(1)
    assert b.sign() == 1 and (-b).sign() == -1
    assert BallReal(0, Fraction(1, 4)).sign() == 0
    with pytest.raises(ValueError):
        BallReal(1, -1)
    with pytest.raises(ValueError):
        BallReal(Fraction(1, 3))  # midpoints are dyadic


@settings(max_examples=80, deadline=None)
@given(st.fractions(max_denominator=10**6), st.fractions(max_denominator=10**6))
def test_ball_arithmetic_encloses_exact(x, y):
    bx = BallReal.from_rational(x, 64)
    by = BallReal.from_rational(y, 64)
    assert bx.contains(x) and by.contains(y)
    assert (bx + by).contains(x + y)
    assert (bx - by).contains(x - y)
    assert (bx * by).contains(x * y)
    if y:
        assert (bx / by).contains(x / y)


@given(st.integers(-(10**40), 10**40), st.integers(-300, 300))
def test_hex_round_trip(man, exp):
    q = Fraction(man) * Fraction(2) ** exp
    assert ball.dyadic_from_hex(ball.dyadic_to_hex(q)) == q


def test_hex_format():
    assert ball.dyadic_to_hex(Fraction(-3, 2)) == "-0x3p-1"
    assert ball.dyadic_to_hex(Fraction(0)) == "0x0p+0"
    with pytest.raises(ValueError):
        ball.dyadic_from_hex("0x1.8p0")


# ---------------------------------------------------------------- a-priori radius


def test_stability_lemma_oracle():
    # |d_n|^2 <= (2n+1)/(2m+1), the bound the radius model rests on
    for m in range(0, 8):
        d = shifted_expansion(m, m + 25)
        for n, value in d.items():
            assert value * value * (2 * m + 1) <= 2 * n + 1


def test_error_bound_sums_local_errors():
    for n in range(1, 200):
        total = sum(math.sqrt((2 * n + 1) / (2 * m + 1)) * (2 * m + 1) * math.ceil(m / 2) for m in range(1, n + 1))
        assert total <= coefficient_error_ulps(n) * (1 + 1e-12)


def test_fixed_point_midpoints_within_bound(exact500):
    for bits in (64, 128):
        values = fixed_point_midpoints(500, bits)
        for n in range(501):
            err = abs(Fraction(values[n], 1 << bits) - exact500.coeffs[n]) * (1 << bits)
            assert err <= coefficient_error_ulps(n), (bits, n)


def test_first_coefficients_contained():
    t = ball_coefficients(5)
    for b, c in zip(t.coeffs, FIRST):
        assert b.contains(c)
    assert t.coeffs[0] == BallReal(1, 0, t.precision_bits)


def test_containment_against_exact(exact500, ball2000):
    report = cross_validate(exact500, ball2000)
    assert report.ok and report.n_checked == 501
    assert report.max_normalized_discrepancy <= 1


def test_corrupted_ball_is_rejected(exact60):
    good = ball_coefficients(60)
    bad_coeffs = list(good.coeffs)
    b = bad_coeffs[17]
    bad_coeffs[17] = BallReal(b.midpoint + 4 * b.radius, b.radius, b.precision_bits)
    corrupted = BallCoefficientTable(tuple(bad_coeffs), good.partial_sums, good.norms_sq, good.energies, good.precision_bits)
    with pytest.raises(ContainmentError) as info:
        cross_validate(exact60, corrupted)
    assert ("coeffs", 17) in info.value.report.violations
    report = cross_validate(exact60, corrupted, strict=False)
    assert not report.ok


def test_zero_radius_requires_equality(exact60):
    good = ball_coefficients(60)
    coeffs = list(good.coeffs)
    coeffs[0] = BallReal(Fraction(1, 2), 0, good.precision_bits)
    bad = BallCoefficientTable(tuple(coeffs), good.partial_sums, good.norms_sq, good.energies, good.precision_bits)
    assert ("coeffs", 0) in cross_validate(exact60, bad, strict=False).violations


def test_escalation_nesting():
    low = ball_coefficients(400, initial_precision_bits=128)
    high = ball_coefficients(400, initial_precision_bits=256)
    assert high.precision_bits == 256
    for a, b in zip(low.coeffs, high.coeffs):
        assert a.overlaps(b)
        assert b.radius <= a.radius
    for a, b in zip(low.norms_sq, high.norms_sq):
        assert a.overlaps(b)


def test_escalation_doubles_precision():
    t = ball_coefficients(300, target_rel_radius=1e-40, initial_precision_bits=64)
    assert t.precision_bits > 64
    assert all(b.radius <= Fraction(1e-40) * abs(b.midpoint) for b in t.coeffs[1:])


def test_precision_exhausted():
    with pytest.raises(PrecisionExhausted) as info:
        ball_coefficients(200, target_rel_radius=1e-200, initial_precision_bits=64, max_precision_bits=256)
    assert info.value.precision_bits == 256


def test_determinism():
    a = ball_coefficients(300)
    b = ball_coefficients(300)
    assert a == b
    buf_a, buf_b = io.StringIO(), io.StringIO()
    ball.write_csv(a, buf_a)
    ball.write_csv(b, buf_b)
    assert buf_a.getvalue() == buf_b.getvalue()


def test_norms_monotone_and_in_unit_interval(ball20000):
    norms = ball20000.norms_sq
    for n in range(1, len(norms)):
        assert 0 <= norms[n].lower and norms[n].upper <= 1
        assert norms[n].lower <= norms[n - 1].upper


def test_cancellation_accounting(ball20000):
    # monitoring with generous slack, not a theorem
    worst = max(loss - ball.predicted_bits_lost(n) for n, loss in ball.bits_lost(ball20000) if n >= 2)
    assert worst < 32


def test_default_precision_reaches_20000(ball20000):
    assert ball20000.precision_bits == 256
    assert all(b.sign() != 0 for b in ball20000.coeffs)


# ---------------------------------------------------------------- K


def test_tail_bound_majorizes_direct_sum():
    # sum_{k>n} 30782/(k^3 (2k+1)) summed far out plus an integral remainder
    for n in (2, 10, 100, 1000):
        direct = sum(30782 / (k**3 * (2 * k + 1)) for k in range(n + 1, 200 * n))
        direct += 30782 / (6 * (200 * n - 1) ** 3)
        assert direct <= float(tail_bound(n))


def test_K_n2_example():
    t = exact_coefficients(2)
    est = estimate_K(t)
    assert est.upper == 1 - Fraction(9, 4) / 3 - Fraction(5, 24) ** 2 / 5 == Fraction(1, 4) - Fraction(25, 576) / 5
    assert est.lower == est.upper - tail_bound(2)


def test_K_shrinks(ball2000):
    widths = [estimate_K(ball2000.truncated(n)).width for n in (100, 500, 2000)]
    assert widths[0] > widths[1] > widths[2]
    lo, hi = estimate_K(ball2000.truncated(100)), estimate_K(ball2000)
    assert hi.lower >= lo.lower and hi.upper <= lo.upper


def test_exact_table_promotion(exact60):
    promoted = ball_table_from_exact(exact60, 128)
    assert cross_validate(exact60, promoted).ok
    assert promoted.coeffs[1].radius == 0  # -3/2 is dyadic


def test_ball_csv_round_trip_is_bit_exact(ball2000):
    buf = io.StringIO()
    ball.write_csv(ball2000, buf)
    back = ball.read_csv(io.StringIO(buf.getvalue()))
    assert back.coeffs == ball2000.coeffs
    assert back.norms_sq == ball2000.norms_sq
    assert buf.getvalue().splitlines()[0] == "n,midpoint_hex,radius_hex,precision_bits"


def test_ball_csv_rejects_mixed_precision():
    text = "n,midpoint_hex,radius_hex,precision_bits\n0,0x1p+0,0x0p+0,128\n1,-0x3p-1,0x0p+0,64\n"
    with pytest.raises(ValueError):
        ball.read_csv(io.StringIO(text))
