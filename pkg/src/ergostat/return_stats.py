"""Return-count statistics: hit counts of a small ball along orbits and
their comparison against the Poisson law.

The number of visits to a ball B within N = floor(t / mu(B)) steps is
compared, over many stationary starts, with Poisson(t).  Centers with a
very short self-return (the ball meets one of its own first few forward
images) are exactly the ones for which this law is known to fail, hence
the ShortReturnWarning guard.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import _kernels, _rng
from ._parallel import apply_workers
from .dynamics import (
    BERNOULLI_IID,
    DOUBLING,
    ROTATION,
    MapSystem,
)
from .errors import (
    DegenerateBallError,
    UnsupportedOperationError,
    ValidationError,
)
from .measure import Ball, MeasureEstimate, ball_measure

MIN_SAMPLES = 100
MP_START_GAP = 1000
MP_START_BURN = 10_000

Sampler = Callable[[int, np.random.Generator], np.ndarray]


class ShortReturnWarning(UserWarning):
    """The ball center has a self-return shorter than the safe horizon."""


def poisson_pmf(t: float, r: int) -> float:
    """e^(-t) t^r / r!, evaluated in log space."""
    if t <= 0.0 or r < 0:
        raise ValidationError("need t > 0 and r >= 0")
    return math.exp(-t + r * math.log(t) - math.lgamma(r + 1))


@dataclass(frozen=True)
class CountingConfig:
    """Frozen experiment layout: which ball, which time scale, how many steps."""

    system: MapSystem
    ball: Ball | None
    t: float
    measure_used: MeasureEstimate
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValidationError("n_steps must be at least 1")
        mu, slack = self.measure_used.value, self.measure_used.std_error + 1e-12
        if self.n_steps * (mu - slack) > self.t or self.t >= (self.n_steps + 1) * (mu + slack):
            raise ValidationError("n_steps inconsistent with t / mu")

    @property
    def mu(self) -> float:
        return self.measure_used.value


def make_config(
    system: MapSystem,
    ball: Ball | None,
    t: float,
    *,
    measure: MeasureEstimate | float | None = None,
    seed: int = 0,
) -> CountingConfig:
    """Fix N = floor(t / mu(B)); mu is exact, supplied, or estimated.

    A bare float for `measure` is trusted as exact (the caller vouches
    for it, e.g. a calibrated table value).
    """
    if not (np.isfinite(t) and t > 0.0):
        raise ValidationError("t must be a positive finite number")
    if system.kind == BERNOULLI_IID:
        if ball is not None:
            raise ValidationError("the coin-flip process takes no ball")
        est = MeasureEstimate(system.epsilon, 0.0, "exact")
    else:
        if ball is None:
            raise ValidationError("a ball is required for map systems")
        if isinstance(measure, MeasureEstimate):
            est = measure
        elif measure is not None:
            est = MeasureEstimate(float(measure), 0.0, "exact")
        else:
            est = ball_measure(system, ball, seed=seed)
        if not 0.0 < est.value < 1.0:
            raise ValidationError(f"ball measure {est.value} outside (0, 1)")
    n_steps = int(math.floor(t / est.value))
    if n_steps < 1:
        raise DegenerateBallError(
            f"t={t} is below one expected return (mu={est.value}); nothing to count"
        )
    config = CountingConfig(
        system=system, ball=ball, t=t, measure_used=est, n_steps=n_steps
    )
    _warn_if_short_return(config)
    return config


def _warn_if_short_return(config: CountingConfig) -> None:
    ball = config.ball
    if ball is None or not config.system.is_map:
        return
    from .short_returns import default_a_frak, horizon_J, min_return_gap

    J = horizon_J(default_a_frak(config.system), ball.radius)
    if J < 1:
        return
    gap = min_return_gap(config.system, ball, J + 1).min_gap
    if gap is not None:
        warnings.warn(
            f"center {ball.center} returns to its own ball after {gap} <= {J} "
            "steps; Poissonian return counts are not expected here",
            ShortReturnWarning,
            stacklevel=3,
        )


def count_visits(config: CountingConfig, x0: float) -> int:
    """Visits of the orbit x0, T x0, ..., T^(N-1) x0 to the ball.

    The doubling orbit is computed in exact integer arithmetic on the
    dyadic rational that the float x0 denotes, so the returned count is
    the true count for that rational (whose binary expansion terminates).
    """
    system = config.system
    if system.kind == BERNOULLI_IID:
        raise UnsupportedOperationError("the coin-flip process has no orbits")
    if not system.domain_contains(x0):
        raise ValidationError(f"x0={x0} outside the domain")
    _warn_if_short_return(config)
    ball = config.ball
    assert ball is not None
    n_steps = config.n_steps
    if system.kind == DOUBLING:
        num, den = float(x0).as_integer_ratio()
        num %= den
        hits = 0
        for _ in range(n_steps):
            d = abs(num / den - ball.center)
            if min(d, 1.0 - d) <= ball.radius:
                hits += 1
            num = (2 * num) % den
        return hits
    if system.kind == ROTATION:
        # evaluate x0 + n*angle mod 1 per index: no error accumulation
        hits = 0
        chunk = 1 << 20
        for start in range(0, n_steps, chunk):
            n = np.arange(start, min(start + chunk, n_steps), dtype=float)
            x = (x0 + n * system.angle) % 1.0
            d = np.abs(x - ball.center)
            d = np.minimum(d, 1.0 - d)
            hits += int(np.count_nonzero(d <= ball.radius))
        return hits
    out = _kernels.mp_visit_counts(
        np.array([float(x0)]), n_steps, system.alpha, ball.center, ball.radius
    )
    return int(out[0])


@dataclass(frozen=True)
class HitHistogram:
    """Empirical distribution of per-orbit visit counts.

    counts maps a visit count r to its (possibly fractional) weight;
    fractional weights let exact distributions reuse the same container.
    """

    counts: dict[int, float]
    sample_count: float
    t: float

    def __post_init__(self):
        if self.sample_count <= 0.0:
            raise ValidationError("need a positive sample count")
        total = 0.0
        for r, w in self.counts.items():
            if r < 0 or w < 0.0:
                raise ValidationError("negative count or weight")
            total += w
        if total > self.sample_count * (1.0 + 1e-12):
            raise ValidationError("weights exceed the sample count")

    def probabilities(self) -> dict[int, float]:
        return {r: w / self.sample_count for r, w in sorted(self.counts.items())}

    @property
    def max_count(self) -> int:
        return max(self.counts) if self.counts else 0

    @classmethod
    def from_samples(cls, samples: np.ndarray, t: float) -> "HitHistogram":
        values, freq = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
        return cls(
            counts={int(v): float(f) for v, f in zip(values, freq)},
            sample_count=float(len(samples)),
            t=t,
        )


def empirical_distribution(
    config: CountingConfig,
    m: int,
    *,
    seed: int = 0,
    workers: int = 1,
    sampler: Sampler | None = None,
) -> HitHistogram:
    """Visit-count histogram over m independent stationary starts.

    Doubling starts are 53-bit windows over fresh i.i.d. bit streams (the
    exact stationary law); a custom sampler cannot be honored there since
    orbits consume raw bits, not floats.  Rotation draws uniform starts,
    Manneville-Pomeau subsamples one long orbit every MP_START_GAP steps.
    """
    if m < MIN_SAMPLES:
        raise ValidationError(f"m={m} is below the minimum {MIN_SAMPLES}")
    system = config.system
    apply_workers(workers)
    _warn_if_short_return(config)
    n_steps = config.n_steps

    if system.kind == BERNOULLI_IID:
        if sampler is not None:
            raise ValidationError("the coin-flip process takes no start sampler")
        rng = _rng.substream(seed, _rng.RETURN_STATS, 0)
        counts = rng.binomial(n_steps, system.epsilon, size=m)
        return HitHistogram.from_samples(counts, config.t)

    ball = config.ball
    assert ball is not None
    if system.kind == DOUBLING:
        if sampler is not None:
            raise ValidationError("doubling starts are bit streams; no sampler applies")
        nwords = _kernels.words_needed(n_steps + 53)
        words = _rng.bit_matrix(seed, (_rng.RETURN_STATS,), m, nwords)
        counts = _kernels.doubling_visit_counts(words, n_steps, ball.center, ball.radius)
        return HitHistogram.from_samples(counts, config.t)

    if sampler is not None:
        x0s = np.asarray(sampler(m, _rng.substream(seed, _rng.RETURN_STATS, 1)), dtype=float)
        if x0s.shape != (m,):
            raise ValidationError("sampler must return exactly m starts")
        for x in x0s:
            if not system.domain_contains(float(x)):
                raise ValidationError("sampler produced a start outside the domain")
    elif system.kind == ROTATION:
        x0s = _rng.substream(seed, _rng.RETURN_STATS, 1).random(m)
    else:
        x_init = float(_rng.substream(seed, _rng.RETURN_STATS, 1).random())
        x0s = _kernels.mp_subsample(x_init, m, MP_START_GAP, MP_START_BURN, system.alpha)

    if system.kind == ROTATION:
        counts = _kernels.rotation_visit_counts(
            x0s, n_steps, system.angle, ball.center, ball.radius
        )
    else:
        counts = _kernels.mp_visit_counts(
            x0s, n_steps, system.alpha, ball.center, ball.radius
        )
    return HitHistogram.from_samples(counts, config.t)


@dataclass(frozen=True)
class PoissonComparison:
    """Total-variation distance of a count histogram from Poisson(t).

    tv_distance includes the Poisson mass above k_max (where the
    empirical pmf is zero by construction); mc_error is the Monte Carlo
    half-width of the distance itself.
    """

    tv_distance: float
    per_k_errors: dict[int, float]
    mc_error: float
    t: float
    k_max: int
    empirical: np.ndarray = field(repr=False)
    poisson: np.ndarray = field(repr=False)


def compare_poisson(hist: HitHistogram, *, tail_pad: int = 10) -> PoissonComparison:
    if not hist.counts:
        raise ValidationError("empty histogram")
    k_max = hist.max_count + tail_pad
    ks = np.arange(k_max + 1)
    pois = np.exp(-hist.t + ks * math.log(hist.t) - gammaln(ks + 1))
    emp = np.zeros(k_max + 1)
    for r, w in hist.counts.items():
        emp[r] = w / hist.sample_count
    abs_err = np.abs(emp - pois)
    tv = 0.5 * float(abs_err.sum()) + 0.5 * float(max(0.0, 1.0 - pois.sum()))
    mc = 0.5 * math.sqrt(float((emp * (1.0 - emp)).sum()) / hist.sample_count)
    return PoissonComparison(
        tv_distance=tv,
        per_k_errors={int(k): float(abs_err[k]) for k in ks},
        mc_error=mc,
        t=hist.t,
        k_max=k_max,
        empirical=emp,
        poisson=pois,
    )
