"""Extreme-value statistics of distance observables.

The observable phi(x) = g(mu(B_d(x,z)(z))) turns closeness of an orbit
to the target z into a large value; its block maximum M_n, normalized
through type-specific levels u_n(y), converges to one of the classical
limit shapes (Gumbel, Frechet, Weibull).

The whole pipeline reduces exactly to closest-approach distances: with
tau(y) the type's tail rate, {phi > u_n(y)} = {d(x, z) < r} where
r satisfies mu(B_r(z)) = tau(y)/n, so

    M_n <= u_n(y)  <=>  min distance to z over the block >= r(y).

One closest-approach pass per start therefore serves the entire y-grid.
Exceedances are strict (d < r); ball measures are exact 2r on the
Lebesgue circle systems and come from a calibrated monotone radius table
for Manneville-Pomeau.  The coin-flip system doubles as the i.i.d.
surrogate: each time step draws a fresh uniform point on the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _rng
from ._parallel import apply_workers
from .dynamics import (
    BERNOULLI_IID,
    DOUBLING,
    MANNEVILLE_POMEAU,
    ROTATION,
    MapSystem,
)
from .errors import InsufficientDataError, ValidationError
from .measure import RadiusMeasureTable

TYPE_GUMBEL = 1
TYPE_FRECHET = 2
TYPE_WEIBULL = 3

MIN_BLOCK = 100
MIN_REPLICAS = 100
DEFAULT_Y_GRID = tuple(np.arange(-2.0, 4.0 + 1e-9, 0.5))
_MC_SAMPLES = 20_000


@dataclass(frozen=True)
class ObservableSpec:
    """Which limit type, which target point, which shape parameters."""

    obs_type: int
    z: float
    beta_frechet: float | None = None
    gamma_weibull: float | None = None
    D: float | None = None

    def __post_init__(self):
        if self.obs_type not in (TYPE_GUMBEL, TYPE_FRECHET, TYPE_WEIBULL):
            raise ValidationError("obs_type must be 1, 2 or 3")
        if not np.isfinite(self.z):
            raise ValidationError("z must be finite")
        if self.obs_type == TYPE_FRECHET:
            if self.beta_frechet is None or self.beta_frechet <= 0.0:
                raise ValidationError("type 2 needs beta_frechet > 0")
        if self.obs_type == TYPE_WEIBULL:
            if self.gamma_weibull is None or self.gamma_weibull <= 0.0:
                raise ValidationError("type 3 needs gamma_weibull > 0")
            if self.D is None or not np.isfinite(self.D):
                raise ValidationError("type 3 needs finite D")


def tau_value(spec: ObservableSpec, y: float) -> float:
    """Tail rate: n * P(phi > u_n(y)) is driven to tau(y)."""
    if spec.obs_type == TYPE_GUMBEL:
        return math.exp(-y)
    if spec.obs_type == TYPE_FRECHET:
        return y ** (-spec.beta_frechet) if y > 0.0 else math.inf
    return (-y) ** spec.gamma_weibull if y <= 0.0 else 0.0


def limit_cdf(spec: ObservableSpec, y_grid) -> np.ndarray:
    return np.array([math.exp(-t) if (t := tau_value(spec, float(y))) < math.inf
                     else 0.0 for y in y_grid])


def _g(spec: ObservableSpec, s: float) -> float:
    """The observable shape g applied to a ball measure s."""
    if spec.obs_type == TYPE_GUMBEL:
        return math.inf if s == 0.0 else -math.log(s)
    if spec.obs_type == TYPE_FRECHET:
        if s == 0.0:
            return math.inf
        return 0.0 if s == math.inf else s ** (-1.0 / spec.beta_frechet)
    return spec.D - s ** (1.0 / spec.gamma_weibull)


def observable_eval(
    system: MapSystem,
    spec: ObservableSpec,
    x: float,
    *,
    table: RadiusMeasureTable | None = None,
) -> float:
    """phi(x): distance to z, converted to a ball measure, then through g."""
    if system.kind == BERNOULLI_IID:
        d = abs(x - spec.z) % 1.0
        d = min(d, 1.0 - d)
        s = 2.0 * d
    elif not system.domain_contains(x) or not system.domain_contains(spec.z):
        raise ValidationError("x and z must lie in the domain")
    elif system.kind == MANNEVILLE_POMEAU:
        if table is None:
            raise ValidationError("Manneville-Pomeau needs a radius-measure table")
        if abs(table.center - spec.z) > 1e-12:
            raise ValidationError("table was calibrated for a different z")
        s = float(table.measure(abs(x - spec.z)))
    else:
        s = 2.0 * system.metric(x, spec.z)
    return _g(spec, s)


@dataclass(frozen=True)
class EvlLevels:
    """Normalizing levels u_n(y) over a y-grid for one block length."""

    n: int
    y_grid: np.ndarray
    u_values: np.ndarray

    def __post_init__(self):
        if len(self.y_grid) != len(self.u_values) or len(self.y_grid) < 1:
            raise ValidationError("grid and levels must align and be nonempty")
        if np.any(np.diff(self.y_grid) <= 0.0):
            raise ValidationError("y_grid must be strictly increasing")
        if np.any(np.diff(self.u_values) < -1e-12):
            raise ValidationError("levels must be nondecreasing in y")


def levels(spec: ObservableSpec, n: int, y_grid=DEFAULT_Y_GRID) -> EvlLevels:
    """u_n(y) = g(tau(y)/n): exact tail inversion, n * P(phi > u_n) = tau(y)."""
    if n < 2:
        raise ValidationError("n must be at least 2")
    ys = np.asarray(list(y_grid), dtype=float)
    us = np.array([_g(spec, tau_value(spec, float(y)) / n) for y in ys])
    return EvlLevels(n=n, y_grid=ys, u_values=us)


def levels_type1(n: int, y_grid=DEFAULT_Y_GRID) -> EvlLevels:
    """Gumbel levels u_n(y) = y + log n (the g = -log special case)."""
    if n < 2:
        raise ValidationError("n must be at least 2")
    ys = np.asarray(list(y_grid), dtype=float)
    return EvlLevels(n=n, y_grid=ys, u_values=ys + math.log(n))


def exceedance_radius(
    spec: ObservableSpec,
    n: int,
    y: float,
    *,
    table: RadiusMeasureTable | None = None,
) -> float:
    """r with {phi > u_n(y)} = {d(x, z) < r}; the target ball mass is tau(y)/n."""
    s = tau_value(spec, y) / n
    if s == math.inf:
        return math.inf
    if table is None:
        return s / 2.0
    return table.inverse(s)


@dataclass(frozen=True)
class EvlResult:
    levels: EvlLevels
    block_max_samples: np.ndarray = field(repr=False)
    empirical_cdf: np.ndarray
    limit_cdf: np.ndarray
    sup_distance: float

    def __post_init__(self):
        for cdf in (self.empirical_cdf, self.limit_cdf):
            if np.any(cdf < -1e-12) or np.any(cdf > 1.0 + 1e-12):
                raise ValidationError("cdf values must lie in [0, 1]")
            if np.any(np.diff(cdf) < -1e-12):
                raise ValidationError("cdf must be monotone over the grid")


def _min_distances(
    system: MapSystem, z: float, n: int, m: int, seed: int, sampler,
    ids: tuple[int, ...] = (_rng.EVL,),
) -> np.ndarray:
    """Closest approach to z over n steps, per start; one row per sample."""
    if system.kind == DOUBLING:
        if sampler is not None:
            raise ValidationError("doubling starts are bit streams; no sampler applies")
        nwords = _kernels.words_needed(n + 53)
        words = _rng.bit_matrix(seed, ids, m, nwords)
        return _kernels.doubling_min_distance(words, n, z)
    if system.kind == BERNOULLI_IID:
        if sampler is not None:
            raise ValidationError("the i.i.d. surrogate takes no start sampler")
        # min of n i.i.d. circle distances, sampled by inverse transform
        v = _rng.substream(seed, *ids, 0).random(m)
        return 0.5 * (1.0 - v ** (1.0 / n))
    if sampler is not None:
        x0s = np.asarray(sampler(m, _rng.substream(seed, *ids, 1)), dtype=float)
        if x0s.shape != (m,):
            raise ValidationError("sampler must return exactly m starts")
    elif system.kind == ROTATION:
        x0s = _rng.substream(seed, *ids, 1).random(m)
    else:
        x_init = float(_rng.substream(seed, *ids, 1).random())
        x0s = _kernels.mp_subsample(x_init, m, 1000, 10_000, system.alpha)
    if system.kind == ROTATION:
        return _kernels.rotation_min_distance(x0s, n, system.angle, z)
    return _kernels.mp_min_distance(x0s, n, system.alpha, z)


def block_maxima(
    system: MapSystem,
    spec: ObservableSpec,
    n: int,
    m: int,
    *,
    y_grid=DEFAULT_Y_GRID,
    seed: int = 0,
    workers: int = 1,
    table: RadiusMeasureTable | None = None,
    sampler=None,
) -> EvlResult:
    """Law of the block maximum M_n against its limit shape on a y-grid.

    m stationary starts each contribute one block of length n; the
    empirical P(M_n <= u_n(y)) is the fraction of blocks keeping their
    whole orbit at distance >= r(y) from z.
    """
    if n < MIN_BLOCK:
        raise ValidationError(f"block length n={n} below minimum {MIN_BLOCK}")
    if m < MIN_REPLICAS:
        raise ValidationError(f"replica count m={m} below minimum {MIN_REPLICAS}")
    if system.kind == MANNEVILLE_POMEAU and table is None:
        raise ValidationError("Manneville-Pomeau needs a radius-measure table")
    apply_workers(workers)
    lv = levels(spec, n, y_grid)
    dmin = _min_distances(system, spec.z, n, m, seed, sampler)
    radii = np.array(
        [exceedance_radius(spec, n, float(y), table=table) for y in lv.y_grid]
    )
    emp = np.array([float(np.mean(dmin >= r)) for r in radii])
    lim = limit_cdf(spec, lv.y_grid)
    if system.kind == MANNEVILLE_POMEAU:
        maxima = np.array([_g(spec, float(table.measure(d))) for d in dmin])
    else:
        maxima = np.array([_g(spec, min(2.0 * d, 1.0)) for d in dmin])
    return EvlResult(
        levels=lv,
        block_max_samples=np.sort(maxima),
        empirical_cdf=emp,
        limit_cdf=lim,
        sup_distance=float(np.max(np.abs(emp - lim))),
    )


def _exceedance_starts(system, z, r, m, seed, mu_r):
    """m starts conditioned on the exceedance set {d(x, z) < r}."""
    rng = _rng.substream(seed, _rng.EVL, 2)
    if system.kind == DOUBLING:
        xs = (z + r * (2.0 * rng.random(m) - 1.0)) % 1.0
        return (xs * _kernels.TWO53).astype(np.uint64) & _kernels.MASK53
    if system.kind == ROTATION:
        return (z + r * (2.0 * rng.random(m) - 1.0)) % 1.0
    budget = int(4.0 * m / max(mu_r, 1e-300)) + 100_000
    if budget > 2 * 10**9:
        raise InsufficientDataError(
            f"conditioned sampling needs ~{budget:.1e} iterates; radius too small"
        )
    xs = _kernels.mp_collect_in_ball(
        float(rng.random()), budget, 10_000, system.alpha, z, r, m
    )
    if len(xs) < m:
        raise InsufficientDataError(
            f"only {len(xs)} conditioned starts in {budget} iterates"
        )
    return xs


def _exceed_free(system, starts, n_from, n_to, r, z, seed):
    """Indicator per start: no step in [n_from, n_to) comes strictly within r."""
    if system.kind == DOUBLING:
        m = len(starts)
        nwords = _kernels.words_needed(n_to + 1)
        words = _rng.bit_matrix(seed, (_rng.EVL, 3), m, nwords)
        hits = _kernels.doubling_hits_range(starts, words, n_from, n_to, z, r, True)
    elif system.kind == ROTATION:
        hits = _kernels.rotation_hits_range(starts, n_from, n_to, system.angle, z, r, True)
    else:
        hits = _kernels.mp_hits_range(starts, n_from, n_to, system.alpha, z, r, True)
    return hits == 0


def d2_gamma(
    system: MapSystem,
    spec: ObservableSpec,
    n: int,
    t_gap: int,
    l: int,
    *,
    y: float = 0.0,
    m: int = _MC_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    table: RadiusMeasureTable | None = None,
):
    """|P(X_0 > u, M_(t,l) < u) - P(X_0 > u) P(M_l < u)| at the y-level.

    Estimated as mu(exceedance set) * |P(window clean | start exceeds)
    - P(window clean)|; the two window probabilities come from
    conditioned and stationary starts respectively.
    """
    from .measure import MeasureEstimate

    if t_gap < 1 or l < 0 or n < 2:
        raise ValidationError("need t_gap >= 1, l >= 0, n >= 2")
    if l == 0:
        return MeasureEstimate(0.0, 0.0, "exact")  # empty window: both factors agree
    if system.kind == BERNOULLI_IID:
        r = exceedance_radius(spec, n, y)
        mu_r = min(2.0 * r, 1.0)
        rng = _rng.substream(seed, _rng.EVL, 4)
        clean = (1.0 - mu_r) ** l
        p_c = float(np.mean(rng.random(m) < clean))
        p_m = float(np.mean(rng.random(m) < clean))
        err = math.sqrt(p_c * (1 - p_c) / m + p_m * (1 - p_m) / m)
        return MeasureEstimate(mu_r * abs(p_c - p_m), mu_r * err, "montecarlo", m)
    if system.kind == MANNEVILLE_POMEAU and table is None:
        raise ValidationError("Manneville-Pomeau needs a radius-measure table")
    apply_workers(workers)
    r = exceedance_radius(spec, n, y, table=table)
    mu_r = tau_value(spec, y) / n
    starts_c = _exceedance_starts(system, spec.z, r, m, seed, mu_r)
    clean_c = _exceed_free(system, starts_c, t_gap, t_gap + l, r, spec.z, seed)
    dmin_marg = _min_distances(system, spec.z, l, m, seed, None, ids=(_rng.EVL, 7))
    clean_m = dmin_marg >= r
    p_c, p_m = float(clean_c.mean()), float(clean_m.mean())
    err = math.sqrt(p_c * (1 - p_c) / m + p_m * (1 - p_m) / m)
    return MeasureEstimate(mu_r * abs(p_c - p_m), mu_r * err, "montecarlo", m)


def dprime_sum(
    system: MapSystem,
    spec: ObservableSpec,
    n: int,
    k: int,
    *,
    y: float = 0.0,
    m: int = _MC_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    table: RadiusMeasureTable | None = None,
):
    """n * sum over j = 1..floor(n/k) of P(X_0 > u, X_j > u).

    Factored as tau(y) * E[exceedances in steps 1..floor(n/k) | X_0 > u];
    under the limit law this vanishes as k grows, unless z sits on a
    short periodic orbit (the negative control).
    """
    from .measure import MeasureEstimate

    if k < 2:
        raise ValidationError("k must be at least 2")
    if n < k:
        raise ValidationError("need n >= k")
    window = n // k
    tau = tau_value(spec, y)
    if system.kind == BERNOULLI_IID:
        r = exceedance_radius(spec, n, y)
        mu_r = min(2.0 * r, 1.0)
        rng = _rng.substream(seed, _rng.EVL, 5)
        hits = rng.binomial(window, mu_r, size=m)
        value = tau * float(hits.mean())
        err = tau * float(hits.std(ddof=1)) / math.sqrt(m)
        return MeasureEstimate(value, err, "montecarlo", m)
    if system.kind == MANNEVILLE_POMEAU and table is None:
        raise ValidationError("Manneville-Pomeau needs a radius-measure table")
    apply_workers(workers)
    r = exceedance_radius(spec, n, y, table=table)
    mu_r = tau / n
    starts = _exceedance_starts(system, spec.z, r, m, seed, mu_r)
    if system.kind == DOUBLING:
        nwords = _kernels.words_needed(window + 2)
        words = _rng.bit_matrix(seed, (_rng.EVL, 6), m, nwords)
        hits = _kernels.doubling_hits_range(
            starts, words, 1, window + 1, spec.z, r, True
        )
    elif system.kind == ROTATION:
        hits = _kernels.rotation_hits_range(
            starts, 1, window + 1, system.angle, spec.z, r, True
        )
    else:
        hits = _kernels.mp_hits_range(
            starts, 1, window + 1, system.alpha, spec.z, r, True
        )
    value = tau * float(hits.mean())
    err = tau * float(hits.std(ddof=1)) / math.sqrt(m)
    return MeasureEstimate(value, err, "montecarlo", m)
