"""Decay-of-correlations estimation.

correlation(k) targets Cov(G, H o T^k) under the invariant measure.  The
orbit budget is split over independent replicas (fresh start, fresh
stream each); the replica spread gives an honest standard error without
modelling serial correlation inside a replica.  decay_fit regresses
log |corr| against the lag (exponential kind) or log lag (polynomial
kind) over the lags that are significant at 3 sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, _rng
from ._parallel import apply_workers
from .dynamics import BERNOULLI_IID, DOUBLING, ROTATION, MapSystem
from .errors import InsufficientDataError, ValidationError

DEFAULT_REPLICAS = 50
_MIN_REPLICA_LEN = 1000
_MP_BURN = 10_000

FIT_EXPONENTIAL = "exponential"
FIT_POLYNOMIAL = "polynomial"


def default_budget(system: MapSystem) -> int:
    """10^8 iterates for the fast-mixing doubling map, 10^7 elsewhere."""
    return 10**8 if system.kind == DOUBLING else 10**7


@dataclass(frozen=True)
class CorrEstimate:
    lag: int
    value: float
    std_error: float
    replicas: int

    def __post_init__(self):
        if not np.isfinite(self.value) or self.std_error < 0.0:
            raise ValidationError("estimate must be finite with nonnegative error")


def _orbit(system: MapSystem, length: int, seed: int, rep: int) -> np.ndarray:
    if system.kind == DOUBLING:
        nwords = _kernels.words_needed(length + 53)
        words = _rng.bit_matrix(seed, (_rng.CORRELATIONS, rep), 1, nwords)
        return _kernels.doubling_stream(words, length)
    rng = _rng.substream(seed, _rng.CORRELATIONS, rep)
    if system.kind == BERNOULLI_IID:
        return rng.random(length)  # pure noise surrogate: no dynamics at all
    x0 = float(rng.random())
    if system.kind == ROTATION:
        return (x0 + np.arange(length) * system.angle) % 1.0
    xs = _kernels.mp_stream(x0, length + _MP_BURN, system.alpha)
    return xs[_MP_BURN:]


def correlation(
    system: MapSystem,
    G,
    H,
    k: int,
    *,
    budget: int | None = None,
    replicas: int = DEFAULT_REPLICAS,
    seed: int = 0,
    workers: int = 1,
) -> CorrEstimate:
    """Cov(G, H o T^k) by replica-averaged orbit sums.

    G and H must be vectorized callables on domain points; G should be
    Lipschitz and H bounded for the estimate to stabilize, which is the
    caller's contract (not checkable here).
    """
    if k < 0:
        raise ValidationError("lag must be nonnegative")
    if replicas < 2:
        raise ValidationError("need at least 2 replicas for a spread")
    if budget is None:
        budget = default_budget(system)
    length = int(budget) // int(replicas)
    if length - k < _MIN_REPLICA_LEN:
        raise InsufficientDataError(
            f"budget {budget} over {replicas} replicas leaves {length - k} "
            f"usable steps at lag {k}; need {_MIN_REPLICA_LEN}"
        )
    apply_workers(workers)
    covs = np.empty(replicas)
    for rep in range(replicas):
        xs = _orbit(system, length, seed, rep)
        g = np.asarray(G(xs[: length - k]), dtype=float)
        h = np.asarray(H(xs[k:]), dtype=float)
        covs[rep] = float(np.mean(g * h) - np.mean(g) * np.mean(h))
    return CorrEstimate(
        lag=k,
        value=float(covs.mean()),
        std_error=float(covs.std(ddof=1)) / math.sqrt(replicas),
        replicas=replicas,
    )


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay law over the statistically usable lags."""

    lags: tuple[int, ...]
    corr_values: tuple[float, ...]
    std_errors: tuple[float, ...]
    fitted_rate: float
    fit_kind: str
    usable: tuple[bool, ...]
    inconclusive: bool

    def __post_init__(self):
        if self.fit_kind not in (FIT_EXPONENTIAL, FIT_POLYNOMIAL):
            raise ValidationError(f"unknown fit kind {self.fit_kind!r}")
        if self.inconclusive and not math.isnan(self.fitted_rate):
            raise ValidationError("inconclusive fits carry no rate")


def decay_fit(
    system: MapSystem,
    G,
    H,
    lag_grid,
    *,
    budget: int | None = None,
    replicas: int = DEFAULT_REPLICAS,
    fit_kind: str = FIT_EXPONENTIAL,
    seed: int = 0,
    workers: int = 1,
) -> DecayFit:
    """Fit |corr(k)| ~ exp(-rate k) or ~ k^(-rate) over significant lags.

    Lags whose estimate is within 3 sigma of zero are excluded; fewer
    than 3 surviving lags yields an inconclusive fit (rate = nan) rather
    than a spurious one.
    """
    lags = sorted(set(int(k) for k in lag_grid))
    if len(lags) < 5:
        raise ValidationError("need at least 5 lags")
    if fit_kind == FIT_POLYNOMIAL and min(lags) < 1:
        raise ValidationError("polynomial fits need lags >= 1")
    ests = [
        correlation(system, G, H, k, budget=budget, replicas=replicas,
                    seed=seed, workers=workers)
        for k in lags
    ]
    values = [e.value for e in ests]
    errors = [e.std_error for e in ests]
    usable = [abs(v) > 3.0 * s for v, s in zip(values, errors)]
    if sum(usable) < 3:
        return DecayFit(
            lags=tuple(lags), corr_values=tuple(values), std_errors=tuple(errors),
            fitted_rate=math.nan, fit_kind=fit_kind, usable=tuple(usable),
            inconclusive=True,
        )
    xs = np.array([k for k, u in zip(lags, usable) if u], dtype=float)
    ys = np.log([abs(v) for v, u in zip(values, usable) if u])
    if fit_kind == FIT_POLYNOMIAL:
        xs = np.log(xs)
    design = np.vstack([xs, np.ones_like(xs)]).T
    (slope, _), *_ = np.linalg.lstsq(design, ys, rcond=None)
    return DecayFit(
        lags=tuple(lags), corr_values=tuple(values), std_errors=tuple(errors),
        fitted_rate=float(-slope), fit_kind=fit_kind, usable=tuple(usable),
        inconclusive=False,
    )
