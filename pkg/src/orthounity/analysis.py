"""Diagnostics for the sign pattern and decay of c_n.

None of this proves anything about the asymptotics.  Sign changes are
certified (the balls exclude zero), while slopes and periods are
estimators and are reported as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from flint import arb

from .ball import BallCoefficientTable, BallReal, to_arb, working_precision
from .exact import ExactCoefficientTable


class IndeterminateMagnitude(ValueError):
    """The enclosure of c_n contains zero, so ln|c_n| is unbounded."""


def _values(source) -> Sequence:
    if isinstance(source, (ExactCoefficientTable, BallCoefficientTable)):
        return source.coeffs
    return source


def certified_sign(value) -> int:
    """+1/-1, or 0 when the sign of ``value`` cannot be certified."""
    if isinstance(value, BallReal):
        return value.sign()
    if isinstance(value, arb):
        return 1 if value > 0 else -1 if value < 0 else 0
    return (value > 0) - (value < 0)


def _log_abs(value) -> float:
    """ln|value| for a Fraction / BallReal midpoint / float, without float underflow."""
    if isinstance(value, BallReal):
        value = value.midpoint
    if isinstance(value, Fraction):
        return math.log(abs(value.numerator)) - math.log(value.denominator)
    return math.log(abs(value))


# ----------------------------------------------------------------------------
# Sign changes
# ----------------------------------------------------------------------------


def sign_change_ratios(report_or_indices) -> list[float]:
    """t_{k+1}/t_k for consecutive nonzero change indices; t = 0 is skipped."""
    indices = getattr(report_or_indices, "indices", report_or_indices)
    usable = [t for t in indices if t > 0]
    if len(usable) < 2:
        raise ValueError("need at least two nonzero sign-change indices")
    return [b / a for a, b in zip(usable, usable[1:])]


@dataclass(frozen=True)
class SignChangeReport:
    """Indices N with c_N * c_{N+1} < 0 on 0..n_max-1.

    N = 0 is included even though the formal definition starts at N > 0.
    ``new_sign_starts`` lists N+1, the first index of each new sign run.
    """

    indices: tuple[int, ...]
    ambiguous: tuple[int, ...]
    n_max: int
    ratios: tuple[float, ...] = field(default=())

    @property
    def new_sign_starts(self) -> tuple[int, ...]:
        return tuple(t + 1 for t in self.indices)

    @property
    def outside_definition(self) -> tuple[int, ...]:
        return tuple(t for t in self.indices if t <= 0)

    @property
    def certified(self) -> bool:
        return not self.ambiguous

    def to_dict(self) -> dict:
        return {"indices": list(self.indices), "ratios": list(self.ratios), "ambiguous": list(self.ambiguous)}


def detect_sign_changes(source) -> SignChangeReport:
    values = _values(source)
    if not len(values):
        raise ValueError("empty sequence")
    signs = [certified_sign(v) for v in values]
    ambiguous = tuple(n for n, s in enumerate(signs) if s == 0)
    indices = tuple(n for n in range(len(signs) - 1) if signs[n] * signs[n + 1] < 0)
    try:
        ratios = tuple(sign_change_ratios(indices))
    except ValueError:
        ratios = ()
    return SignChangeReport(indices, ambiguous, len(values) - 1, ratios)


# ----------------------------------------------------------------------------
# Decay exponent
# ----------------------------------------------------------------------------


def delta_point_estimate(source, n: int) -> BallReal:
    """Enclosure of ln|c_n| / ln n."""
    if n < 2:
        raise ValueError("n must be >= 2")
    value = _values(source)[n]
    prec = getattr(source, "precision_bits", 128)
    with working_precision(prec + 32):
        c = to_arb(value)
        if certified_sign(c) == 0:
            raise IndeterminateMagnitude(f"enclosure of c_{n} contains zero")
        return BallReal.from_arb(abs(c).log() / arb(n).log(), prec)


@dataclass(frozen=True)
class DeltaEstimate:
    point_estimates: list[tuple[int, float]]
    envelope: list[int]
    slope: float
    half_width: float
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "points": [[n, v] for n, v in self.point_estimates],
            "slope": self.slope,
            "half_width": self.half_width,
        }


def _upper_hull(points: list[tuple[float, float, int]]) -> list[tuple[float, float, int]]:
    hull: list[tuple[float, float, int]] = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1, _), (x2, y2, _) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _local_maxima(pts: list[tuple[float, float, int]]) -> list[tuple[float, float, int]]:
    return [
        pts[i]
        for i in range(1, len(pts) - 1)
        if pts[i - 1][1] < pts[i][1] >= pts[i + 1][1]
        and pts[i - 1][2] == pts[i][2] - 1
        and pts[i + 1][2] == pts[i][2] + 1
    ]


def _ls_slope(points: list[tuple[float, float, int]]) -> float:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def fit_envelope_slope(source, n_lo: int, n_hi: int, min_points: int = 10) -> DeltaEstimate:
    """Heuristic decay exponent: least-squares slope of ln|c_n| against ln n over the
    local maxima of |c_n| in the window.

    With fewer than two interior maxima (a monotone stretch, or a window shorter
    than one oscillation) the upper convex hull in log-log coordinates is used
    instead; a pure power law is its own hull.  ``half_width`` is the largest
    deviation of a segment slope between consecutive envelope points from the fit
    (with only two envelope points: the difference from the hull fit).
    """
    values = _values(source)
    n_hi = min(n_hi, len(values) - 1)
    usable = [n for n in range(max(n_lo, 1), n_hi + 1) if certified_sign(values[n]) != 0]
    if len(usable) < min_points:
        raise ValueError(f"window [{n_lo}, {n_hi}] has {len(usable)} certified points, need {min_points}")
    pts = [(math.log(n), _log_abs(values[n]), n) for n in usable]
    point_estimates = [(n, y / x) for x, y, n in pts if n >= 2]
    hull = _upper_hull(pts)
    envelope = _local_maxima(pts)
    if len(envelope) < 2:
        envelope = hull
    slope = _ls_slope(envelope)
    if len(envelope) >= 3:
        xs = [p[0] for p in envelope]
        ys = [p[1] for p in envelope]
        edges = [(y2 - y1) / (x2 - x1) for x1, y1, x2, y2 in zip(xs, ys, xs[1:], ys[1:])]
        half_width = max(abs(e - slope) for e in edges)
    else:
        # two points fit exactly; fall back on disagreement with the hull fit
        half_width = abs(slope - _ls_slope(hull))
    return DeltaEstimate(point_estimates, [p[2] for p in envelope], slope, half_width, (n_lo, n_hi))


# ----------------------------------------------------------------------------
# Logarithmic oscillation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillationFit:
    """If c_n ~ n^-delta sin(P ln n + phi), consecutive zeros satisfy P ln(t_{k+1}/t_k) = pi."""

    period_estimates: list[float]
    limiting_ratio_estimate: float


def fit_oscillation(report_or_indices) -> OscillationFit:
    ratios = sign_change_ratios(report_or_indices)
    return OscillationFit([math.pi / math.log(r) for r in ratios], ratios[-1])
