"""Rigorous high-precision engine: every value is a ball (midpoint, radius).

Midpoints of c_n come from an exact fixed-point recurrence (integers scaled by
2^p, floor division by the small denominators n+1+k).  Propagating radii
operation by operation is useless here: the absolute sum of the recurrence
weights doubles the radius at each step, so a naive ball run would need about
n bits of precision to reach index n.  Instead the radius is an a-priori bound.

If step m commits a rounding error e_m, the induced error in later
coefficients is e_m * d_n, where (d_n) is the orthorecursive expansion of x^m
over x^{m+1}, x^{m+2}, ...  The same norm identity that bounds c_n gives
d_n^2 <= (2n+1)/(2m+1).  Each step of the fixed-point recurrence commits at
most (2m+1)*ceil(m/2) units of 2^-p, and summing gives

    |computed c_n - c_n| <= (2n+1) n (n+3) / 4 * 2^-p.

All derived quantities (s_n, ||p_n||^2, D(n), K) are then evaluated in arb
ball arithmetic from those enclosures.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from flint import arb, arf, ctx, fmpq

from .exact import ExactCoefficientTable

log = logging.getLogger(__name__)

TAIL_CONSTANT = 30782
DEFAULT_TARGET_REL_RADIUS = 1e-10
DEFAULT_MAX_PRECISION = 4096
_LIMB = 32
_LIMB_MASK = (1 << _LIMB) - 1


class PrecisionExhausted(RuntimeError):
    def __init__(self, n_failed: int, precision_bits: int, max_precision_bits: int):
        self.n_failed = n_failed
        self.precision_bits = precision_bits
        self.max_precision_bits = max_precision_bits
        super().__init__(
            f"relative radius target missed first at n={n_failed} with {precision_bits} bits; "
            f"doubling would exceed the {max_precision_bits}-bit limit"
        )


class ContainmentError(AssertionError):
    def __init__(self, report: CrossValidationReport):
        self.report = report
        column, n = report.violations[0]
        super().__init__(f"{len(report.violations)} containment violation(s), first: {column}[{n}]")


@contextmanager
def working_precision(bits: int) -> Iterator[None]:
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


# ----------------------------------------------------------------------------
# Dyadic helpers
# ----------------------------------------------------------------------------


def _man_exp(q: Fraction) -> tuple[int, int]:
    """q = man * 2**exp with man odd (or zero); q must be dyadic."""
    num, den = q.numerator, q.denominator
    if den & (den - 1):
        raise ValueError(f"{q} is not a dyadic rational")
    exp = -(den.bit_length() - 1)
    if num == 0:
        return 0, 0
    tz = (num & -num).bit_length() - 1
    return num >> tz, exp + tz


def _dyadic(man: int, exp: int) -> Fraction:
    return Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)


def _arf(q: Fraction) -> arf:
    return arf(_man_exp(q))


def _arf_to_fraction(x: arf) -> Fraction:
    man, exp = x.man_exp()
    return _dyadic(int(man), int(exp))


def dyadic_to_hex(q: Fraction) -> str:
    """Exact hexadecimal float literal, e.g. -3/2 -> '-0x3p-1'."""
    man, exp = _man_exp(Fraction(q))
    sign = "-" if man < 0 else ""
    return f"{sign}0x{abs(man):x}p{exp:+d}"


_HEX_RE = re.compile(r"^([+-]?)0x([0-9a-fA-F]+)p([+-]?\d+)$")


def dyadic_from_hex(text: str) -> Fraction:
    m = _HEX_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a hexadecimal float literal: {text!r}")
    man = int(m.group(2), 16)
    if m.group(1) == "-":
        man = -man
    return _dyadic(man, int(m.group(3)))


def to_arb(value) -> arb:
    """Enclose an int, Fraction, BallReal or arb at the current precision."""
    if isinstance(value, arb):
        return value
    if isinstance(value, BallReal):
        return value.to_arb()
    if isinstance(value, int):
        return arb(value)
    if isinstance(value, Fraction):
        return arb(fmpq(value.numerator, value.denominator))
    if isinstance(value, float):
        return arb(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a ball")


# ----------------------------------------------------------------------------
# BallReal
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BallReal:
    """The real interval [midpoint - radius, midpoint + radius].

    Midpoint and radius are exact dyadic rationals.  Arithmetic goes through
    arb, which rounds radii outward.
    """

    midpoint: Fraction
    radius: Fraction = Fraction(0)
    precision_bits: int = 128

    def __post_init__(self) -> None:
        object.__setattr__(self, "midpoint", Fraction(self.midpoint))
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        _man_exp(self.midpoint)
        _man_exp(self.radius)

    @classmethod
    def from_arb(cls, x: arb, precision_bits: int | None = None) -> BallReal:
        if not x.is_finite():
            raise ValueError("ball is not finite")
        return cls(_arf_to_fraction(x.mid()), _arf_to_fraction(x.rad()), precision_bits or ctx.prec)

    @classmethod
    def from_rational(cls, value, precision_bits: int) -> BallReal:
        """Smallest convenient ball around an arbitrary rational at the given precision."""
        value = Fraction(value)
        if value.denominator & (value.denominator - 1) == 0:
            return cls(value, Fraction(0), precision_bits)
        with working_precision(precision_bits):
            return cls.from_arb(to_arb(value), precision_bits)

    def to_arb(self) -> arb:
        if self.radius:
            return arb(_arf(self.midpoint), _arf(self.radius))
        return arb(_arf(self.midpoint))

    @property
    def lower(self) -> Fraction:
        return self.midpoint - self.radius

    @property
    def upper(self) -> Fraction:
        return self.midpoint + self.radius

    def contains(self, value) -> bool:
        if isinstance(value, BallReal):
            return self.lower <= value.lower and value.upper <= self.upper
        return self.lower <= Fraction(value) <= self.upper

    def overlaps(self, other: BallReal) -> bool:
        return self.lower <= other.upper and other.lower <= self.upper

    def sign(self) -> int:
        """+1 or -1 when the sign is certified, 0 when the ball touches zero."""
        if self.lower > 0:
            return 1
        if self.upper < 0:
            return -1
        return 0

    def relative_radius(self) -> float:
        if self.midpoint == 0:
            return math.inf
        return float(self.radius / abs(self.midpoint))

    def __float__(self) -> float:
        return float(self.midpoint)

    def __repr__(self) -> str:
        return f"BallReal({float(self.midpoint)!r} +/- {float(self.radius):.3g}, {self.precision_bits} bits)"

    def _binary(self, other, op) -> BallReal:
        prec = self.precision_bits
        if isinstance(other, BallReal):
            prec = max(prec, other.precision_bits)
        with working_precision(prec):
            return BallReal.from_arb(op(self.to_arb(), to_arb(other)), prec)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return BallReal(-self.midpoint, self.radius, self.precision_bits)

    def __abs__(self):
        with working_precision(self.precision_bits):
            return BallReal.from_arb(abs(self.to_arb()), self.precision_bits)


# ----------------------------------------------------------------------------
# Fixed-point recurrence
# ----------------------------------------------------------------------------


def default_precision(n_max: int) -> int:
    return 128 if n_max <= 2000 else 256


def coefficient_error_ulps(n: int) -> int:
    """Upper bound on |computed c_n - c_n| in units of 2^-p."""
    return -(-(2 * n + 1) * n * (n + 3) // 4)


def fixed_point_midpoints(n_max: int, precision_bits: int) -> list[int]:
    """Integers X_n with X_n / 2^p within coefficient_error_ulps(n) / 2^p of c_n.

    Each X_k is stored as a signed integer limb plus ``p/32`` fraction limbs so
    that floor(X_k / (n+1+k)) for all k at once is a short sequence of numpy
    long-division passes.
    """
    if precision_bits % _LIMB:
        raise ValueError("precision_bits must be a multiple of 32")
    n_limbs = precision_bits // _LIMB
    limbs = np.zeros((n_limbs + 1, n_max + 1), dtype=np.int64)
    values = [0] * (n_max + 1)

    def store(n: int, x: int) -> None:
        values[n] = x
        limbs[0, n] = x >> precision_bits
        for j in range(1, n_limbs + 1):
            limbs[j, n] = (x >> (precision_bits - _LIMB * j)) & _LIMB_MASK

    store(0, 1 << precision_bits)
    for n in range(1, n_max + 1):
        d = np.arange(n + 1, 2 * n + 1, dtype=np.int64)
        q, rem = np.divmod(limbs[0, :n], d)
        total = int(q.sum())
        for j in range(1, n_limbs + 1):
            q, rem = np.divmod((rem << _LIMB) | limbs[j, :n], d)
            total = (total << _LIMB) + int(q.sum())
        # every floor loses less than one unit; recentre the n lost units
        total += n // 2
        store(n, -(2 * n + 1) * total)
        if n % 2000 == 0:
            log.info("fixed-point recurrence: n=%d/%d at %d bits", n, n_max, precision_bits)
    return values


# ----------------------------------------------------------------------------
# Tables
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BallCoefficientTable:
    coeffs: tuple[BallReal, ...]
    partial_sums: tuple[BallReal, ...]
    norms_sq: tuple[BallReal, ...]
    energies: tuple[BallReal, ...]
    precision_bits: int

    engine = "ball"

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @cached_property
    def arb_coeffs(self) -> list[arb]:
        return [b.to_arb() for b in self.coeffs]

    def column(self, name: str) -> tuple[BallReal, ...]:
        return getattr(self, name)

    def truncated(self, n_max: int) -> BallCoefficientTable:
        k = n_max + 1
        return BallCoefficientTable(
            self.coeffs[:k], self.partial_sums[:k], self.norms_sq[:k], self.energies[:k], self.precision_bits
        )


COLUMNS = ("coeffs", "partial_sums", "norms_sq", "energies")


def _derive(coeffs: Sequence[BallReal], precision_bits: int) -> BallCoefficientTable:
    work = precision_bits + 32
    sums, norms, energies = [], [], []
    with working_precision(work):
        cs = [b.to_arb() for b in coeffs]
        s = cs[0]
        norm = arb(1)
        energy = arb(0)
        for n, c in enumerate(cs):
            if n:
                k = n - 1
                if k == 0:
                    energy = c * c
                else:
                    moment2 = 2 * s - cs[k] - (2 if k == 1 else 0)
                    energy = energy + n * c * moment2 + c * c * fmpq(n * n, 2 * k + 1)
                s = s + c
                norm = norm - c * c / (2 * n + 1)
            sums.append(BallReal.from_arb(s, precision_bits))
            norms.append(BallReal.from_arb(norm, precision_bits))
            energies.append(BallReal.from_arb(energy, precision_bits))
    return BallCoefficientTable(tuple(coeffs), tuple(sums), tuple(norms), tuple(energies), precision_bits)


def _normalise_precision(bits: int) -> int:
    bits = max(64, bits)
    return -(-bits // _LIMB) * _LIMB


def ball_coefficients(
    n_max: int,
    target_rel_radius: float = DEFAULT_TARGET_REL_RADIUS,
    initial_precision_bits: int | None = None,
    max_precision_bits: int = DEFAULT_MAX_PRECISION,
) -> BallCoefficientTable:
    """Certified enclosures of c_n, s_n, ||p_n||^2, D(n) for n = 0..n_max.

    Precision doubles until every c_n (n >= 1) has radius <= target_rel_radius
    * |midpoint|; :class:`PrecisionExhausted` is raised when that would need
    more than ``max_precision_bits``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if not target_rel_radius > 0:
        raise ValueError("target_rel_radius must be positive")
    bits = _normalise_precision(initial_precision_bits or default_precision(n_max))
    target = Fraction(target_rel_radius)
    while True:
        values = fixed_point_midpoints(n_max, bits)
        failed = next(
            (n for n in range(1, n_max + 1) if coefficient_error_ulps(n) > target * abs(values[n])),
            None,
        )
        if failed is None:
            break
        if bits * 2 > max_precision_bits:
            raise PrecisionExhausted(failed, bits, max_precision_bits)
        log.info("n=%d misses the radius target at %d bits; retrying at %d", failed, bits, 2 * bits)
        bits *= 2
    scale = Fraction(1, 1 << bits)
    coeffs = [BallReal(Fraction(1), Fraction(0), bits)]
    coeffs += [
        BallReal(values[n] * scale, coefficient_error_ulps(n) * scale, bits) for n in range(1, n_max + 1)
    ]
    return _derive(coeffs, bits)


def ball_table_from_exact(table: ExactCoefficientTable, precision_bits: int = 128) -> BallCoefficientTable:
    """Promote an exact table; dyadic values keep radius 0, others get a rounding radius."""
    columns = []
    for name in COLUMNS:
        columns.append(tuple(BallReal.from_rational(v, precision_bits) for v in getattr(table, name)))
    return BallCoefficientTable(*columns, precision_bits)


def bits_lost(table: BallCoefficientTable) -> list[tuple[int, float]]:
    """Per n >= 1, how many of the working bits the c_n enclosure does not resolve."""
    out = []
    for n in range(1, table.n_max + 1):
        b = table.coeffs[n]
        rel = b.radius / abs(b.midpoint)
        loss = table.precision_bits + math.log2(rel) if rel else 0.0
        out.append((n, loss))
    return out


def predicted_bits_lost(n: int) -> float:
    """Monitoring model: a-priori error growth plus the observed n^(-7/3) decay of |c_n|."""
    return math.log2(coefficient_error_ulps(n)) + 7 / 3 * math.log2(n)


# ----------------------------------------------------------------------------
# K = lim ||p_n||^2
# ----------------------------------------------------------------------------


def tail_bound(n: int) -> Fraction:
    """Majorant of sum_{k>n} c_k^2/(2k+1) from c_k^2 < 30782/k^3."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(TAIL_CONSTANT, 6 * n**3)


@dataclass(frozen=True)
class KEstimate:
    lower: Fraction
    upper: Fraction
    n_used: int

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value) -> bool:
        return self.lower <= Fraction(value) <= self.upper

    def intersects(self, lo, hi) -> bool:
        return self.lower <= Fraction(hi) and Fraction(lo) <= self.upper


def estimate_K(table: BallCoefficientTable | ExactCoefficientTable) -> KEstimate:
    """Rigorous interval for K from ||p_N||^2 (an upper bound) minus the tail majorant."""
    n = table.n_max
    if n < 2:
        raise ValueError("need n_max >= 2")
    norm = table.norms_sq[n]
    if isinstance(norm, BallReal):
        lo, hi = norm.lower, norm.upper
    else:
        lo = hi = norm
    return KEstimate(lo - tail_bound(n), hi, n)


# ----------------------------------------------------------------------------
# Cross-validation
# ----------------------------------------------------------------------------


@dataclass
class CrossValidationReport:
    n_checked: int
    max_normalized_discrepancy: float
    violations: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def cross_validate(
    exact: ExactCoefficientTable, ball: BallCoefficientTable, strict: bool = True
) -> CrossValidationReport:
    """Check every exact value on the common range lies inside the corresponding ball."""
    upto = min(exact.n_max, ball.n_max)
    worst = 0.0
    violations = []
    for name in COLUMNS:
        xs, bs = getattr(exact, name), getattr(ball, name)
        for n in range(upto + 1):
            x, b = xs[n], bs[n]
            gap = abs(b.midpoint - x)
            if b.radius == 0:
                if gap:
                    violations.append((name, n))
                continue
            if gap > b.radius:
                violations.append((name, n))
            worst = max(worst, float(gap / b.radius))
    report = CrossValidationReport(upto + 1, worst, violations)
    if strict and violations:
        raise ContainmentError(report)
    return report


# ----------------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------------

CSV_HEADER = ("n", "midpoint_hex", "radius_hex", "precision_bits")


def write_csv(table: BallCoefficientTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for n, b in enumerate(table.coeffs):
        writer.writerow((n, dyadic_to_hex(b.midpoint), dyadic_to_hex(b.radius), b.precision_bits))


def read_csv(fh) -> BallCoefficientTable:
    reader = csv.reader(fh)
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    coeffs = []
    bits = None
    for row in reader:
        if not row:
            continue
        n, mid, rad, prec = row
        if int(n) != len(coeffs):
            raise ValueError(f"row index {n} out of sequence")
        prec = int(prec)
        if bits is None:
            bits = prec
        elif prec != bits:
            raise ValueError("mixed precisions in one table")
        coeffs.append(BallReal(dyadic_from_hex(mid), dyadic_from_hex(rad), prec))
    if not coeffs:
        raise ValueError("empty coefficient table")
    return _derive(coeffs, bits)
