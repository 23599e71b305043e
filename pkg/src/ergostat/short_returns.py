"""Very-short-return detection via exact forward interval arithmetic.

A center x is "bad" for Poissonian return counts when its ball meets one
of its own first few forward images: B(x, rho) and T^n B(x, rho)
intersect for some 1 <= n strictly below a_frak * |log rho|.  On these
1-D systems the forward image of a finite union of intervals is again a
finite union of intervals with exactly computable endpoints, so
membership is decided without sampling error.

Intersection tests use closed intervals with a 1e-15 slack so endpoint
rounding can create no false negatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, _rng
from ._parallel import apply_workers
from .dynamics import DOUBLING, MANNEVILLE_POMEAU, ROTATION, MapSystem
from .errors import (
    HorizonTooDeepError,
    UnsupportedOperationError,
    ValidationError,
)
from .measure import Ball, MeasureEstimate

_SLACK = 1e-15
COMPONENT_CAP = 10_000
MIN_CENTERS = 1000
_MP_CENTER_GAP = 1000
_MP_CENTER_BURN = 10_000


def default_a_frak(system: MapSystem) -> float:
    """1 / (4 log A) with A the system's expansion constant."""
    return 1.0 / (4.0 * math.log(system.expansion_constant))


def horizon_J(a_frak: float, rho: float) -> int:
    """Largest integer n with n < a_frak * |log rho| (0 if none)."""
    if not 0.0 < rho < 1.0:
        raise ValidationError("rho must be in (0, 1)")
    if a_frak <= 0.0:
        raise ValidationError("a_frak must be positive")
    return max(math.ceil(a_frak * abs(math.log(rho))) - 1, 0)


@dataclass(frozen=True)
class ShortReturnConfig:
    """Gap-horizon bookkeeping for one (system, rho) pair."""

    rho: float
    a_frak: float
    J: int
    A: float

    def __post_init__(self):
        if self.J < 1:
            raise ValidationError(
                f"no admissible gaps: a_frak*|log rho| = "
                f"{self.a_frak * abs(math.log(self.rho)):.4f} <= 1"
            )
        if self.A < 2.0:
            raise ValidationError("expansion constant must be >= 2")


def short_return_config(
    system: MapSystem, rho: float, a_frak: float | None = None
) -> ShortReturnConfig:
    A = system.expansion_constant
    if a_frak is None:
        a_frak = default_a_frak(system)
    return ShortReturnConfig(rho=rho, a_frak=a_frak, J=horizon_J(a_frak, rho), A=A)


@dataclass(frozen=True)
class IntervalUnion:
    """Union of closed subintervals of [0, 1], sorted and merged.

    `circle` marks wrap-around topology; arcs crossing 0 are stored as
    two pieces, which leaves membership and intersection unchanged.
    """

    pieces: tuple[tuple[float, float], ...]
    circle: bool

    @classmethod
    def from_pieces(cls, raw, circle: bool) -> "IntervalUnion":
        clipped = []
        for lo, hi in raw:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
            if hi >= lo:
                clipped.append((lo, hi))
        clipped.sort()
        merged: list[tuple[float, float]] = []
        for lo, hi in clipped:
            if merged and lo <= merged[-1][1] + _SLACK:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        if len(merged) == 1 and merged[0][0] <= _SLACK and merged[0][1] >= 1.0 - _SLACK:
            merged = [(0.0, 1.0)]
        return cls(pieces=tuple(merged), circle=circle)

    @classmethod
    def ball(cls, system: MapSystem, center: float, radius: float) -> "IntervalUnion":
        if not system.is_map:
            raise UnsupportedOperationError("no metric balls on the coin-flip process")
        if radius <= 0.0:
            raise ValidationError("ball radius must be positive")
        if system.topology == "circle":
            c = center % 1.0
            return cls.from_pieces(
                [(c - radius, c + radius), (c - radius + 1.0, c + radius + 1.0),
                 (c - radius - 1.0, c + radius - 1.0)],
                circle=True,
            )
        if not system.domain_contains(center):
            raise ValidationError(f"center {center} outside [0, 1]")
        return cls.from_pieces([(center - radius, center + radius)], circle=False)

    @property
    def n_components(self) -> int:
        return len(self.pieces)

    @property
    def is_everything(self) -> bool:
        return self.pieces == ((0.0, 1.0),)

    def total_length(self) -> float:
        return sum(hi - lo for lo, hi in self.pieces)

    def intersects(self, other: "IntervalUnion") -> bool:
        i = j = 0
        a, b = self.pieces, other.pieces
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi + _SLACK:
                return True
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return False


def _mp_left(x: float, alpha: float) -> float:
    return min(x + (2.0 ** alpha) * x ** (1.0 + alpha), 1.0)


def _circle_arc(start: float, length: float) -> list[tuple[float, float]]:
    s = start % 1.0
    e = s + length
    if e <= 1.0:
        return [(s, e)]
    return [(s, 1.0), (0.0, e - 1.0)]


def interval_image(system: MapSystem, interval) -> IntervalUnion:
    """Exact forward image T(interval) as a union of intervals.

    Accepts an IntervalUnion or a bare (lo, hi) pair.  Each monotone
    branch maps endpoints to endpoints; on the circle a short arc maps
    to the arc of doubled (or translated) length, and any arc at least
    half the circle fills it after doubling.
    """
    if not system.is_map:
        raise UnsupportedOperationError("the coin-flip process is not a map")
    if not isinstance(interval, IntervalUnion):
        lo, hi = interval
        interval = IntervalUnion.from_pieces([(float(lo), float(hi))],
                                             circle=system.topology == "circle")
    if interval.is_everything:
        return interval
    out: list[tuple[float, float]] = []
    for lo, hi in interval.pieces:
        if system.kind == DOUBLING:
            length = hi - lo
            if 2.0 * length >= 1.0:
                return IntervalUnion.from_pieces([(0.0, 1.0)], circle=True)
            out.extend(_circle_arc(2.0 * lo, 2.0 * length))
        elif system.kind == ROTATION:
            out.extend(_circle_arc(lo + system.angle, hi - lo))
        else:  # Manneville-Pomeau: split at the branch cut 1/2
            a = system.alpha
            if hi <= 0.5:
                out.append((_mp_left(lo, a), _mp_left(hi, a)))
            elif lo > 0.5:
                out.append((2.0 * lo - 1.0, 2.0 * hi - 1.0))
            else:
                out.append((_mp_left(lo, a), 1.0))
                out.append((0.0, 2.0 * hi - 1.0))
    return IntervalUnion.from_pieces(out, circle=system.topology == "circle")


@dataclass(frozen=True)
class ReturnGapResult:
    """Outcome of scanning gaps n = 1 .. horizon-1 for self-intersection."""

    center: float
    min_gap: int | None
    per_n_hit: tuple[bool, ...]

    def __post_init__(self):
        hits = [n + 1 for n, h in enumerate(self.per_n_hit) if h]
        if (self.min_gap is None) != (not hits) or (hits and self.min_gap != hits[0]):
            raise ValidationError("min_gap must be the first flagged gap")


def min_return_gap(system: MapSystem, ball: Ball, horizon: int) -> ReturnGapResult:
    """Least n in [1, horizon) with B and T^n B intersecting, if any."""
    if horizon < 2:
        raise ValidationError("horizon must be at least 2")
    base = IntervalUnion.ball(system, ball.center, ball.radius)
    current = base
    hits = []
    for n in range(1, horizon):
        current = interval_image(system, current)
        if current.n_components > COMPONENT_CAP:
            raise HorizonTooDeepError(
                f"image of the ball split into {current.n_components} pieces "
                f"at gap {n}; horizon {horizon} is too deep"
            )
        hits.append(current.intersects(base))
    min_gap = next((n + 1 for n, h in enumerate(hits) if h), None)
    return ReturnGapResult(center=ball.center, min_gap=min_gap, per_n_hit=tuple(hits))


def measure_V(
    system: MapSystem,
    rho: float,
    a_frak: float,
    m: int,
    *,
    seed: int = 0,
    workers: int = 1,
) -> MeasureEstimate:
    """Fraction of mu-sampled centers with a return gap below the horizon.

    Lebesgue systems use stratified sampling (one point per length-1/m
    cell, common uniform offset), so the binomial error reported is an
    upper bound; Manneville-Pomeau draws centers by subsampling a long
    orbit.
    """
    if m < MIN_CENTERS:
        raise ValidationError(f"m={m} is below the minimum {MIN_CENTERS}")
    config = short_return_config(system, rho, a_frak)
    apply_workers(workers)
    if system.lebesgue_invariant:
        u = float(_rng.substream(seed, _rng.SHORT_RETURNS, 0).random())
        centers = (u + np.arange(m) / m) % 1.0
    elif system.kind == MANNEVILLE_POMEAU:
        x_init = float(_rng.substream(seed, _rng.SHORT_RETURNS, 0).random())
        centers = _kernels.mp_subsample(
            x_init, m, _MP_CENTER_GAP, _MP_CENTER_BURN, system.alpha
        )
    else:
        raise UnsupportedOperationError("center sampling needs a map system")
    hits = 0
    for c in centers:
        result = min_return_gap(system, Ball(float(c), rho), config.J + 1)
        if result.min_gap is not None:
            hits += 1
    frac = hits / m
    return MeasureEstimate(
        value=frac,
        std_error=math.sqrt(frac * (1.0 - frac) / m),
        method="montecarlo",
        sample_count=m,
    )


def compute_s_p(A: float, n: int, p: int) -> float:
    """Radius inflation factor 2^p (A^(n 2^p) - 1) / (A^n - 1).

    Evaluated in log space; returns inf once the value passes 1e300
    (saturation), which callers must treat as "precondition unmeetable".
    """
    if A <= 1.0 or n < 1 or p < 0:
        raise ValidationError("need A > 1, n >= 1, p >= 0")
    la = math.log(A)
    big = n * (1 << p)

    def log_pow_m1(k: int) -> float:
        # log(A^k - 1), stable for any k
        if k * la < 30.0:
            return math.log(math.expm1(k * la))
        return k * la + math.log1p(-math.exp(-k * la))

    log_s = p * math.log(2.0) + log_pow_m1(big) - log_pow_m1(n)
    if log_s > math.log(1e300):
        return math.inf
    if big * la < 500.0:  # safely inside double range: evaluate directly
        return 2.0 ** p * (A ** big - 1.0) / (A ** n - 1.0)
    return math.exp(log_s)


def _meets_after(system: MapSystem, center: float, radius: float, gap: int) -> bool:
    """Exact test of B(center, radius) against its gap-step forward image."""
    base = IntervalUnion.ball(system, center, radius)
    current = base
    for n in range(gap):
        current = interval_image(system, current)
        if current.n_components > COMPONENT_CAP:
            raise HorizonTooDeepError(f"component cap hit at step {n + 1} of {gap}")
        if current.is_everything:
            return True
    return current.intersects(base)


def check_sp_inclusion(
    system: MapSystem, center: float, rho: float, n: int, p: int
) -> bool:
    """True only on a counterexample: the ball meets its gap-n image but
    the s_p-inflated ball misses its gap-(n 2^p) image.  Property tests
    assert this never returns True.
    """
    s_p = compute_s_p(system.expansion_constant, n, p)
    if not s_p * rho < 0.25:
        raise ValidationError(f"s_p*rho = {s_p * rho} must stay below 1/4")
    if not _meets_after(system, center, rho, n):
        return False
    return not _meets_after(system, center, s_p * rho, n * (1 << p))
