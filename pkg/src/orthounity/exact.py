"""Exact rational engine for the coefficients of the orthorecursive expansion of 1.

The coefficients are defined by ``c_0 = 1`` and, for ``n >= 1``,

    c_0/(n+1) + c_1/(n+2) + ... + c_n/(2n+1) = 0.

Everything here is exact: values are :class:`fractions.Fraction` instances,
which are always reduced with a positive denominator.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Sequence

ExactRational = Fraction

EXACT_CAP = 2000
DETERMINANT_CAP = 64
PERMUTATION_CAP = 20


class CapacityError(RuntimeError):
    """Requested size is beyond a configured engine cap."""


def odd_double_factorial(n: int) -> int:
    """(2n+1)!! = 1*3*5*...*(2n+1); the empty product for n = 0 is 1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = 1
    for j in range(3, 2 * n + 2, 2):
        out *= j
    return out


def binary_weight(n: int) -> int:
    return bin(n).count("1")


def two_adic_valuation(m: int) -> int:
    if m == 0:
        raise ValueError("v_2(0) is undefined")
    m = abs(m)
    return (m & -m).bit_length() - 1


# ----------------------------------------------------------------------------
# Polynomials over Q on [0, 1]
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactPolynomial:
    """Polynomial with rational coefficients, ``coefficients[k]`` multiplies x^k."""

    coefficients: tuple[Fraction, ...]

    def __init__(self, coefficients: Iterable) -> None:
        object.__setattr__(self, "coefficients", tuple(Fraction(a) for a in coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x) -> Fraction:
        acc = Fraction(0)
        for a in reversed(self.coefficients):
            acc = acc * x + a
        return acc

    def __add__(self, other: ExactPolynomial) -> ExactPolynomial:
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        return ExactPolynomial(x + (b[i] if i < len(b) else 0) for i, x in enumerate(a))

    def __neg__(self) -> ExactPolynomial:
        return ExactPolynomial(-a for a in self.coefficients)

    def __sub__(self, other: ExactPolynomial) -> ExactPolynomial:
        return self + (-other)

    def __mul__(self, other: ExactPolynomial) -> ExactPolynomial:
        a, b = self.coefficients, other.coefficients
        if not a or not b:
            return ExactPolynomial(())
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return ExactPolynomial(out)

    def derivative(self) -> ExactPolynomial:
        return ExactPolynomial(k * a for k, a in enumerate(self.coefficients) if k)

    @classmethod
    def monomial(cls, m: int, scale=1) -> ExactPolynomial:
        return cls([0] * m + [scale])

    def integral_01(self) -> Fraction:
        """Exact value of the integral of the polynomial over [0, 1]."""
        return sum((a / (k + 1) for k, a in enumerate(self.coefficients)), Fraction(0))


def inner_product_with_monomial(p: ExactPolynomial, m: int) -> Fraction:
    """<p, x^m> in L^2([0, 1]), i.e. sum_k p_k / (m + k + 1)."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return sum((a / (m + k + 1) for k, a in enumerate(p.coefficients)), Fraction(0))


# ----------------------------------------------------------------------------
# Recurrence
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactCoefficientTable:
    """c_n together with s_n = p_n(1), ||p_n||^2 and D(n) = ||p_n'||^2, n = 0..n_max."""

    coeffs: tuple[Fraction, ...]
    partial_sums: tuple[Fraction, ...]
    norms_sq: tuple[Fraction, ...]
    energies: tuple[Fraction, ...]

    engine = "exact"

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def polynomial(self, n: int) -> ExactPolynomial:
        """p_n(x) = c_0 + c_1 x + ... + c_n x^n."""
        return ExactPolynomial(self.coeffs[: n + 1])

    def truncated(self, n_max: int) -> ExactCoefficientTable:
        k = n_max + 1
        return ExactCoefficientTable(
            self.coeffs[:k], self.partial_sums[:k], self.norms_sq[:k], self.energies[:k]
        )


def _scaled_recurrence(n_max: int) -> list[int]:
    # c_n = A_n / (2n)!; (2n)!/((2k)! (n+1+k)) is an integer for k < n, so the
    # whole recurrence runs on integers without a single gcd.
    scaled = [1]
    for n in range(1, n_max + 1):
        ratio = 1
        total = 0
        for k in range(n - 1, -1, -1):
            ratio *= (2 * k + 1) * (2 * k + 2)
            total += scaled[k] * ratio // (n + 1 + k)
        scaled.append(-(2 * n + 1) * total)
    return scaled


def derived_columns(coeffs: Sequence[Fraction]):
    """Partial sums, squared norms and energies from a coefficient list, in one pass."""
    sums, norms, energies = [], [], []
    s = norm = energy = None
    for n, c in enumerate(coeffs):
        if n == 0:
            s, norm, energy = Fraction(c), Fraction(1), Fraction(0)
        else:
            k = n - 1
            # 2<p_k', x^k> = 2 s_k - c_k holds for k >= 2 only: p_0' = 0, and for
            # k = 1 the term <p_0, x^0> = 1 does not vanish.
            if k == 0:
                energy = c * c
            else:
                moment2 = 2 * s - coeffs[k] - (2 if k == 1 else 0)
                energy = energy + n * c * moment2 + Fraction(n * n, 2 * k + 1) * c * c
            s = s + c
            norm = norm - c * c / (2 * n + 1)
        sums.append(s)
        norms.append(norm)
        energies.append(energy)
    return tuple(sums), tuple(norms), tuple(energies)


def exact_coefficients(n_max: int, cap: int = EXACT_CAP) -> ExactCoefficientTable:
    """Exact c_0..c_{n_max} with the derived columns.

    Raises :class:`CapacityError` when ``n_max`` exceeds ``cap``; denominators
    grow like (2n)!, so large runs are slow rather than impossible.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if n_max > cap:
        raise CapacityError(f"n_max={n_max} exceeds the exact-engine cap {cap}")
    scaled = _scaled_recurrence(n_max)
    coeffs = []
    f = 1
    for n, a in enumerate(scaled):
        if n:
            f *= (2 * n - 1) * (2 * n)
        coeffs.append(Fraction(a, f))
    return ExactCoefficientTable(tuple(coeffs), *derived_columns(coeffs))


def recurrence_residual(coeffs: Sequence[Fraction], n: int) -> Fraction:
    """sum_{k<=n} c_k/(n+1+k); zero for every n >= 1."""
    return sum((coeffs[k] / (n + 1 + k) for k in range(n + 1)), Fraction(0))


# ----------------------------------------------------------------------------
# Determinant oracle
# ----------------------------------------------------------------------------


def bareiss_determinant(rows: Sequence[Sequence[int]]) -> int:
    """Determinant of an integer matrix by fraction-free Bareiss elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def rational_determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant; each row is cleared of denominators before Bareiss."""
    scales = []
    rows = []
    for row in matrix:
        row = [Fraction(x) for x in row]
        lcm = 1
        for x in row:
            d = x.denominator
            lcm = lcm * d // _gcd(lcm, d)
        scales.append(lcm)
        rows.append([int(x * lcm) for x in row])
    denom = 1
    for s in scales:
        denom *= s
    return Fraction(bareiss_determinant(rows), denom)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def determinant_matrix(n: int) -> list[list[Fraction]]:
    """A_n with entries 1/(i+j) when j - i <= 1 and 0 otherwise (1-based i, j)."""
    return [
        [Fraction(1, i + j) if j - i <= 1 else Fraction(0) for j in range(1, n + 1)]
        for i in range(1, n + 1)
    ]


def coefficient_via_determinant(n: int, cap: int = DETERMINANT_CAP) -> Fraction:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the determinant-oracle cap {cap}")
    sign = -1 if n % 2 else 1
    return sign * odd_double_factorial(n) * rational_determinant(determinant_matrix(n))


# ----------------------------------------------------------------------------
# Permutation-sum oracle
# ----------------------------------------------------------------------------


def _compositions(n: int):
    """All compositions of n as tuples of part sizes (2^(n-1) of them)."""
    for mask in range(1 << (n - 1)):
        parts = []
        run = 1
        for bit in range(n - 1):
            if mask >> bit & 1:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def _cycle_weight(a: int, length: int) -> Fraction:
    # cycle (a a+1 ... a+length-1): i -> i+1 except the last element -> a
    den = 2 * a + length - 1 if length > 1 else 2 * a
    for i in range(a, a + length - 1):
        den *= 2 * i + 1
    sign = -1 if (length - 1) % 2 else 1
    return Fraction(sign, den)


def coefficient_via_permutation_sum(n: int, cap: int = PERMUTATION_CAP) -> Fraction:
    """Signed sum over permutations with sigma(i) <= i + 1.

    Such permutations are exactly products of consecutive cycles
    (a a+1 ... b), one per part of a composition of n, so only the 2^(n-1)
    compositions are enumerated.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the permutation-oracle cap {cap}")
    weights: dict[tuple[int, int], Fraction] = {}
    total = Fraction(0)
    for parts in _compositions(n):
        term = Fraction(1)
        a = 1
        for length in parts:
            key = (a, length)
            if key not in weights:
                weights[key] = _cycle_weight(a, length)
            term *= weights[key]
            a += length
        total += term
    sign = -1 if n % 2 else 1
    return sign * odd_double_factorial(n) * total


def count_bounded_permutations(n: int) -> int:
    return 1 << (n - 1) if n >= 1 else 1


# ----------------------------------------------------------------------------
# Arithmetic theorems
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ValuationCheck:
    n: int
    expected: int
    actual: int | None

    @property
    def passed(self) -> bool:
        return self.actual == self.expected

    def __bool__(self) -> bool:
        return self.passed


def verify_two_adic_valuation(n: int, c: Fraction) -> ValuationCheck:
    """Check v_2(denominator of c_n) = 2n - b(n); b(n) counts binary ones of n."""
    c = Fraction(c)
    expected = 2 * n - binary_weight(n)
    actual = None if c == 0 else two_adic_valuation(c.denominator)
    return ValuationCheck(n, expected, actual)


def verify_integrality_and_lower_bound(n: int, c: Fraction) -> bool:
    """True iff c*(2n)!/(2n+1)!! is a nonzero integer and |c| >= (2n+1)!!/(2n)!.

    Only n = 1 satisfies this; already c_2*4!/5!! = 1/3. The property that does
    hold for every n is checked by :func:`verify_factorial_integrality`.
    """
    c = Fraction(c)
    dfact = odd_double_factorial(n)
    scaled = c * factorial(2 * n) / dfact
    if scaled.denominator != 1 or scaled == 0:
        return False
    return abs(c) >= Fraction(dfact, factorial(2 * n))


def verify_factorial_integrality(n: int, c: Fraction) -> bool:
    """True iff c*(2n)! is a nonzero integer, hence |c| >= 1/(2n)!."""
    scaled = Fraction(c) * factorial(2 * n)
    return scaled.denominator == 1 and scaled != 0 and abs(Fraction(c)) >= Fraction(1, factorial(2 * n))


# ----------------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------------

CSV_HEADER = ("n", "numerator", "denominator")


def write_csv(table: ExactCoefficientTable | Sequence[Fraction], fh) -> None:
    coeffs = table.coeffs if isinstance(table, ExactCoefficientTable) else table
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for n, c in enumerate(coeffs):
        writer.writerow((n, c.numerator, c.denominator))


def read_csv(fh) -> ExactCoefficientTable:
    reader = csv.reader(fh)
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    coeffs = []
    for row in reader:
        if not row:
            continue
        n, num, den = row
        if int(n) != len(coeffs):
            raise ValueError(f"row index {n} out of sequence")
        den = int(den)
        if den <= 0:
            raise ValueError("denominator must be positive")
        value = Fraction(int(num), den)
        if value.denominator != den:
            raise ValueError(f"row {n} is not in lowest terms")
        coeffs.append(value)
    if not coeffs:
        raise ValueError("empty coefficient table")
    return ExactCoefficientTable(tuple(coeffs), *derived_columns(coeffs))


def to_csv_string(table: ExactCoefficientTable) -> str:
    buf = io.StringIO()
    write_csv(table, buf)
    return buf.getvalue()


def to_json(table: ExactCoefficientTable | Sequence[Fraction]) -> str:
    coeffs = table.coeffs if isinstance(table, ExactCoefficientTable) else table
    rows = [{"n": n, "num": str(c.numerator), "den": str(c.denominator)} for n, c in enumerate(coeffs)]
    return json.dumps(rows)


def from_json(text: str) -> ExactCoefficientTable:
    rows = sorted(json.loads(text), key=lambda r: r["n"])
    if [r["n"] for r in rows] != list(range(len(rows))):
        raise ValueError("JSON rows must cover n = 0..n_max without gaps")
    coeffs = [Fraction(int(r["num"]), int(r["den"])) for r in rows]
    return ExactCoefficientTable(tuple(coeffs), *derived_columns(coeffs))
