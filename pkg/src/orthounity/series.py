"""Series built from c_n: harmonic-number identities, the generating-function
equations and the Dirichlet series C(s).

All sums are evaluated in arb.  Truncation tails use the proven bound
|c_n| <= sqrt(30782) n^(-3/2), never the conjectured faster decay.  The
quadrature check is the one place where the error is only estimated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from flint import acb, arb, fmpq

from .ball import BallCoefficientTable, BallReal, TAIL_CONSTANT, to_arb, working_precision
from .exact import ExactCoefficientTable

Table = ExactCoefficientTable | BallCoefficientTable


def _precision(table) -> int:
    return getattr(table, "precision_bits", 128)


def _coeff_arbs(table, upto: int) -> list[arb]:
    if isinstance(table, BallCoefficientTable):
        return table.arb_coeffs[: upto + 1]
    return [to_arb(c) for c in table.coeffs[: upto + 1]]


def _sqrt_tail_constant() -> arb:
    return arb(TAIL_CONSTANT).sqrt()


def _as_fraction(t) -> Fraction:
    if isinstance(t, float):
        return Fraction(repr(t))
    return Fraction(t)


def _check_t(t: Fraction) -> None:
    if not 0 <= t < 1:
        raise ValueError(f"t must lie in [0, 1), got {t}")


@dataclass(frozen=True)
class SeriesCheck:
    """One numerical identity check.

    ``value`` encloses the residual of the truncated sum (rigorous unless
    ``rigorous`` is False); ``tail_bound`` majorizes the omitted terms.
    """

    kind: str
    params: dict
    value: BallReal
    tail_bound: float
    rigorous: bool = True
    error_estimate: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def residual_bound(self) -> float:
        """Bound on |residual of the truncated sum| (plus the quadrature estimate, if any)."""
        return float(abs(self.value.midpoint) + self.value.radius) + self.error_estimate

    @property
    def magnitude_bound(self) -> float:
        """residual_bound plus the truncation tail: a bound for the infinite series."""
        return self.residual_bound + self.tail_bound

    def verdict(self, tolerance: float) -> str:
        """Judged on the computed partial sum; see ``certified`` for the tail-inclusive test."""
        return "pass" if self.residual_bound <= tolerance else "fail"

    def certified(self, tolerance: float) -> bool:
        return self.rigorous and self.magnitude_bound <= tolerance

    def to_dict(self, tolerance: float | None = None) -> dict:
        out = {
            "kind": self.kind,
            "params": self.params,
            "value": float(self.value.midpoint),
            "radius": float(self.value.radius),
            "tail_bound": self.tail_bound,
            "rigorous": self.rigorous,
        }
        if self.error_estimate:
            out["error_estimate"] = self.error_estimate
        if tolerance is not None:
            out["verdict"] = self.verdict(tolerance)
            out["certified"] = self.certified(tolerance)
        out.update(self.notes)
        return out


# ----------------------------------------------------------------------------
# Harmonic numbers and h_r(n)
# ----------------------------------------------------------------------------


def harmonic_number(n: int) -> Fraction:
    """H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    num, den = 0, 1
    for k in range(1, n + 1):
        num, den = num * k + den, den * k
    return Fraction(num, den)


def _pi_squared_over_six() -> arb:
    return arb.pi() ** 2 / 6


def h_r(n: int, r: int, precision_bits: int = 128) -> Fraction | BallReal:
    """(H_{2n} - H_{n+r})/(n - r) for n != r, pi^2/6 - sum_{k<=2r} 1/k^2 on the diagonal."""
    if n < 0 or r < 0:
        raise ValueError("n and r must be >= 0")
    if n != r:
        return (harmonic_number(2 * n) - harmonic_number(n + r)) / (n - r)
    partial = sum((Fraction(1, k * k) for k in range(1, 2 * r + 1)), Fraction(0))
    with working_precision(precision_bits + 16):
        return BallReal.from_arb(_pi_squared_over_six() - to_arb(partial), precision_bits)


def h_r_telescoped(n: int, r: int, terms: int) -> Fraction:
    """Partial sum sum_{k=0}^{terms-1} 1/((k+n+r+1)(2n+k+1)); converges to h_r(n) like 1/terms."""
    return sum(
        (Fraction(1, (k + n + r + 1) * (2 * n + k + 1)) for k in range(terms)), Fraction(0)
    )


def _h_values(r: int, upto: int) -> list[arb]:
    """h_r(0..upto) in arb, with H_{2n} - H_{n+r} updated incrementally."""
    out = []
    diff = to_arb(harmonic_number(0) - harmonic_number(r))  # H_{2n} - H_{n+r} at n = 0
    diag = _pi_squared_over_six() - to_arb(sum((Fraction(1, k * k) for k in range(1, 2 * r + 1)), Fraction(0)))
    for n in range(upto + 1):
        if n:
            diff += fmpq(1, 2 * n - 1) + fmpq(1, 2 * n) - fmpq(1, n + r)
        out.append(diag if n == r else diff / (n - r))
    return out


def _h_tail(r: int, N: int) -> arb:
    # for n > r: 0 < h_r(n) <= 1/(n+r+1) <= 1/n, so the tail is at most
    # sqrt(C) sum_{n>N} n^(-5/2) <= sqrt(C) (2/3) N^(-3/2)
    return _sqrt_tail_constant() * fmpq(2, 3) / arb(N) ** fmpq(3, 2)


@dataclass(frozen=True)
class IdentityEvaluation:
    r: int
    N: int
    partial_sum: BallReal
    target: BallReal
    residual: BallReal
    tail_bound: float

    def to_check(self) -> SeriesCheck:
        return SeriesCheck("identity", {"r": self.r, "N": self.N}, self.residual, self.tail_bound)


def identity_partial_sum(table: Table, r: int, N: int) -> IdentityEvaluation:
    """sum_{n=0..N} c_n h_r(n) against its limit 1/(r+1)."""
    if not 0 <= N <= table.n_max:
        raise ValueError(f"N={N} outside table range 0..{table.n_max}")
    prec = _precision(table)
    with working_precision(prec + 32):
        cs = _coeff_arbs(table, N)
        hs = _h_values(r, N)
        total = arb(0)
        for c, h in zip(cs, hs):
            total += c * h
        target = arb(fmpq(1, r + 1))
        # the majorant h_r(n) <= 1/n needs every omitted n to exceed r
        tail = float(_h_tail(r, N).upper()) if N > r else math.inf
        return IdentityEvaluation(
            r,
            N,
            BallReal.from_arb(total, prec),
            BallReal.from_arb(target, prec),
            BallReal.from_arb(total - target, prec),
            tail,
        )


REARRANGED_TARGETS = {0: "1 - pi^2/6", 1: "pi^2/4 - 19/8"}


def rearranged_identity(table: Table, r: int, N: int) -> SeriesCheck:
    """The r = 0 and r = 1 identities with the transcendental terms moved to the right:

        sum_{n>=1} c_n (H_{2n} - H_n)/n        = 1 - pi^2/6
        sum_{n>=2} c_n (H_{2n} - H_{n+1})/(n-1) = pi^2/4 - 19/8
    """
    if r not in REARRANGED_TARGETS:
        raise ValueError("rearranged forms exist for r = 0 and r = 1 only")
    if not r < N <= table.n_max:
        raise ValueError("need r < N <= n_max")
    prec = _precision(table)
    with working_precision(prec + 32):
        cs = _coeff_arbs(table, N)
        hs = _h_values(r, N)
        total = arb(0)
        for n in range(r + 1, N + 1):
            total += cs[n] * hs[n]
        pi2 = arb.pi() ** 2
        target = 1 - pi2 / 6 if r == 0 else pi2 / 4 - fmpq(19, 8)
        return SeriesCheck(
            "identity_rearranged",
            {"r": r, "N": N, "target": REARRANGED_TARGETS[r]},
            BallReal.from_arb(total - target, prec),
            float(_h_tail(r, N).upper()),
            notes={"sum": float(total.mid()), "target_value": float(target.mid())},
        )


def residual_decay_rate(table: Table, r: int, N: int, blocks: int = 4) -> float:
    """Empirical exponent a in max|residual(M)| ~ M^-a.

    The running residual oscillates, so the maximum over each dyadic block
    (N/2^(j+1), N/2^j] is fitted by least squares against the block's right end.
    """
    lo = N >> blocks
    if lo <= r + 1:
        raise ValueError("N too small for the requested number of blocks")
    with working_precision(_precision(table) + 32):
        cs = _coeff_arbs(table, N)
        hs = _h_values(r, N)
        target = arb(fmpq(1, r + 1))
        total = arb(0)
        running = []
        for c, h in zip(cs, hs):
            total += c * h
            running.append(abs(float((total - target).mid())))
    xs, ys = [], []
    for j in range(blocks):
        a, b = N >> (j + 1), N >> j
        peak = max(running[a + 1 : b + 1])
        xs.append(math.log(b))
        ys.append(math.log(max(peak, 1e-300)))
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
    return -slope


# ----------------------------------------------------------------------------
# G_n(t) and the functional equation
# ----------------------------------------------------------------------------


def G(n: int, t, precision_bits: int = 128, method: str = "auto") -> BallReal:
    """G_n(t) = sum_{k>=0} t^k/(n+k+1) for 0 <= t < 1.

    ``series``: truncated sum plus the tail t^(K+1)/((n+K+2)(1-t)).
    ``closed``: -(ln(1-t) + t + t^2/2 + ... + t^n/n) / t^(n+1), evaluated with
    enough extra bits to absorb the cancellation.  ``auto`` picks series for
    t <= 1/2 and the closed form above.
    """
    t = _as_fraction(t)
    _check_t(t)
    if n < 0:
        raise ValueError("n must be >= 0")
    if method == "auto":
        method = "series" if t <= Fraction(1, 2) or n == 0 and t == 0 else "closed"
    if t == 0:
        return BallReal.from_rational(Fraction(1, n + 1), precision_bits)
    if method == "series":
        return _G_series(n, t, precision_bits)
    if method == "closed":
        return _G_closed(n, t, precision_bits)
    raise ValueError(f"unknown method {method!r}")


def _G_series(n: int, t: Fraction, prec: int) -> BallReal:
    with working_precision(prec + 32):
        ta = to_arb(t)
        # t^(K+1) < 2^-(prec+8)
        K = int(math.ceil((prec + 8) * math.log(2) / -math.log(float(t)))) + 1
        total = arb(0)
        power = arb(1)
        for k in range(K + 1):
            total += power / (n + k + 1)
            power *= ta
        tail = power / ((n + K + 2) * (1 - ta))
        total += arb(0, tail.upper())
        return BallReal.from_arb(total, prec)


def _G_closed(n: int, t: Fraction, prec: int) -> BallReal:
    extra = int((n + 1) * math.log2(1 / float(t))) + 64
    with working_precision(prec + extra):
        ta = to_arb(t)
        acc = (1 - ta).log()
        power = arb(1)
        for k in range(1, n + 1):
            power *= ta
            acc += power / k
        return BallReal.from_arb(-acc / (power * ta), prec)


def _G_even_values(t: arb, tf: Fraction, N: int) -> list[arb]:
    """G_0(t), G_2(t), ..., G_{2N}(t) by the stable downward recurrence
    G_m = 1/(m+1) + t G_{m+1}, started from a crude enclosure at m = 2N + 64."""
    top = 2 * N + 64
    lo = fmpq(1, top + 1)
    hi = to_arb(Fraction(1, top + 1) / (1 - tf)).upper()
    g = arb(lo).union(hi)
    out = [None] * (N + 1)
    for m in range(top - 1, -1, -1):
        g = fmpq(1, m + 1) + t * g
        if m % 2 == 0 and m // 2 <= N:
            out[m // 2] = g
    return out


def functional_equation_residual(table: Table, t, N: int) -> SeriesCheck:
    """sum_{n<=N} c_n t^n G_{2n}(t) - 1, with the tail over n > N majorized."""
    tf = _as_fraction(t)
    _check_t(tf)
    if not 0 <= N <= table.n_max:
        raise ValueError(f"N={N} outside table range 0..{table.n_max}")
    prec = _precision(table)
    with working_precision(prec + 32):
        ta = to_arb(tf)
        cs = _coeff_arbs(table, N)
        gs = _G_even_values(ta, tf, N)
        total = arb(0)
        power = arb(1)
        for n in range(N + 1):
            total += cs[n] * power * gs[n]
            power *= ta
        if tf == 0:
            tail = 0.0
        else:
            # |c_n| t^n G_{2n}(t) <= sqrt(C) n^(-3/2) t^n / ((2n+1)(1-t))
            tail_arb = (
                _sqrt_tail_constant()
                * ta ** (N + 1)
                / ((1 - ta) ** 2 * (2 * N + 3) * arb(N + 1) ** fmpq(3, 2))
            )
            tail = float(tail_arb.upper())
        return SeriesCheck(
            "functional", {"t": str(tf), "N": N}, BallReal.from_arb(total - 1, prec), tail
        )


# ----------------------------------------------------------------------------
# Integral equation (Gauss-Legendre quadrature)
# ----------------------------------------------------------------------------


def gauss_legendre_nodes(order: int, precision_bits: int) -> list[tuple[arb, arb]]:
    """Nodes and weights on [0, 1]."""
    with working_precision(precision_bits):
        out = []
        for k in range(order):
            x, w = arb.legendre_p_root(order, k, weight=True)
            out.append(((x + 1) / 2, w / 2))
        return out


def _generating_function(cs: list[arb], y: arb, yf: float, N: int) -> arb:
    """F_N(y) = sum_{n<=N} c_n y^n, stopped early (with a rigorous tail) once y^n underflows."""
    total = arb(0)
    power = arb(1)
    cut = N
    for n in range(N + 1):
        total += cs[n] * power
        power *= y
        if n >= 2 and yf ** (n + 1) < 1e-300:
            cut = n
            break
    # sqrt(C) sum_{n>cut} y^n n^(-3/2) <= sqrt(C) y^(cut+1) / ((1-y)(cut+1)^(3/2))
    if cut < N and yf > 0:
        tail = _sqrt_tail_constant() * y ** (cut + 1) / ((1 - y) * arb(cut + 1) ** fmpq(3, 2))
        total += arb(0, tail.upper())
    return total


def _quadrature(cs: list[arb], ta: arb, tf: Fraction, N: int, order: int, prec: int) -> arb:
    total = arb(0)
    for x, w in gauss_legendre_nodes(order, prec):
        F = _generating_function(cs, ta * x * x, float(tf) * float(x.mid()) ** 2, N)
        total += w * F / (1 - ta * x)
    return total


def integral_equation_residual(table: Table, t, N: int, quad_order: int = 64) -> SeriesCheck:
    """integral_0^1 F_N(t x^2)/(1 - t x) dx - 1 by Gauss-Legendre quadrature.

    Truncation of F is bounded rigorously; the quadrature error is only
    estimated as |Q(order) - Q(2 order)|, so the result is flagged non-rigorous.
    """
    tf = _as_fraction(t)
    _check_t(tf)
    if not 0 <= N <= table.n_max:
        raise ValueError(f"N={N} outside table range 0..{table.n_max}")
    if quad_order < 1:
        raise ValueError("quad_order must be positive")
    prec = _precision(table)
    with working_precision(prec + 32):
        cs = _coeff_arbs(table, N)
        ta = to_arb(tf)
        q1 = _quadrature(cs, ta, tf, N, quad_order, prec + 32)
        q2 = _quadrature(cs, ta, tf, N, 2 * quad_order, prec + 32)
        estimate = float(abs(q1 - q2).upper())
        return SeriesCheck(
            "integral",
            {"t": str(tf), "N": N, "quad_order": quad_order},
            BallReal.from_arb(q2 - 1, prec),
            _integral_truncation_bound(tf, N),
            rigorous=False,
            error_estimate=estimate,
        )


def _integral_truncation_bound(tf: Fraction, N: int) -> float:
    # |F(y) - F_N(y)| <= sqrt(C) y^(N+1) / ((1-y)(N+1)^(3/2)) with y = t x^2 <= t,
    # and the kernel integrates to -ln(1-t)/t <= 1/(1-t)
    if tf == 0:
        return 0.0
    with working_precision(64):
        y = to_arb(tf)
        bound = _sqrt_tail_constant() * y ** (N + 1) / ((1 - y) * arb(N + 1) ** fmpq(3, 2) * (1 - to_arb(tf)))
        return float(bound.upper())


# ----------------------------------------------------------------------------
# Dirichlet series C(s)
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletPoint:
    s: complex
    N: int
    real: BallReal
    imag: BallReal
    tail_bound: float

    def contains(self, value: complex) -> bool:
        """Is ``value`` within partial +/- (radius + tail) in both coordinates?"""
        value = complex(value)
        re_ok = abs(Fraction(value.real) - self.real.midpoint) <= self.real.radius + Fraction(self.tail_bound)
        im_ok = abs(Fraction(value.imag) - self.imag.midpoint) <= self.imag.radius + Fraction(self.tail_bound)
        return re_ok and im_ok

    def to_check(self) -> SeriesCheck:
        return SeriesCheck(
            "dirichlet",
            {"s": [self.s.real, self.s.imag], "N": self.N},
            self.real,
            self.tail_bound,
            notes={"imag": float(self.imag.midpoint), "imag_radius": float(self.imag.radius)},
        )


def dirichlet_tail_bound(sigma: float, N: int) -> float:
    """sqrt(30782) * sum_{n>N} n^-(sigma+3/2), majorized by the first term plus an integral."""
    a = Fraction(repr(sigma)) + Fraction(3, 2)
    if a <= 1:
        raise ValueError("Re(s) must exceed -1/2")
    with working_precision(64):
        aa = to_arb(a)
        m = arb(N + 1)
        bound = _sqrt_tail_constant() * (m ** (-aa) + m ** (1 - aa) / (aa - 1))
        return float(bound.upper())


def dirichlet_partial(table: Table, s: complex, N: int) -> DirichletPoint:
    """sum_{n=1..N} c_n n^-s for Re(s) > -1/2; at s = 0 this is s_N - 1."""
    s = complex(s)
    if not s.real > -0.5:
        raise ValueError("Re(s) must exceed -1/2 (outside the proven convergence region)")
    if not 1 <= N <= table.n_max:
        raise ValueError(f"N={N} outside table range 1..{table.n_max}")
    prec = _precision(table)
    tail = dirichlet_tail_bound(s.real, N)
    if s == 0:
        re = table.partial_sums[N] - 1
        if not isinstance(re, BallReal):
            re = BallReal.from_rational(re, prec)
        return DirichletPoint(s, N, re, BallReal(0, 0, prec), tail)
    with working_precision(prec + 32):
        cs = _coeff_arbs(table, N)
        sa = acb(to_arb(Fraction(repr(s.real))), to_arb(Fraction(repr(s.imag))))
        total = acb(0)
        for n in range(1, N + 1):
            total += cs[n] * acb(n) ** (-sa)
        return DirichletPoint(
            s, N, BallReal.from_arb(total.real, prec), BallReal.from_arb(total.imag, prec), tail
        )
