"""Invariant-measure evaluation: ball measures, local-dimension fits, and
annulus-to-ball ratios.

Doubling and rotation preserve Lebesgue measure, so their ball measures
are exact closed forms.  The Manneville-Pomeau measure has no closed
form and is estimated by Birkhoff time averages over long orbits; the
reported standard error accounts for serial correlation through a
blocking estimate of the integrated autocorrelation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, _rng
from .dynamics import BERNOULLI_IID, MANNEVILLE_POMEAU, MapSystem
from .errors import (
    InsufficientDataError,
    UnsupportedOperationError,
    ValidationError,
)

BIRKHOFF_ORBIT = 10_000_000
BIRKHOFF_BURN_IN = 10_000
BIRKHOFF_REPLICAS = 10
_BLOCK = 10_000
_TAU_CAP = 1_000.0
_MIN_HITS = 100


@dataclass(frozen=True)
class Ball:
    """Target set: the closed metric ball of the system's phase space."""

    center: float
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < 0.25:
            raise ValidationError("ball radius must be in (0, 1/4)")
        if not np.isfinite(self.center):
            raise ValidationError("ball center must be finite")


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    method: str  # "exact" | "birkhoff" | "montecarlo"
    sample_count: int = 0

    def __post_init__(self):
        if self.method not in ("exact", "birkhoff", "montecarlo"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.method == "exact" and self.std_error != 0.0:
            raise ValidationError("exact estimates carry no error")
        if self.std_error < 0.0 or not np.isfinite(self.value):
            raise ValidationError("bad estimate")


def _check_center(system: MapSystem, x: float) -> None:
    if not system.domain_contains(x):
        raise ValidationError(f"center {x} outside the domain")


def _tau_hat(block_counts: np.ndarray, block: int, p: float) -> float:
    """Integrated autocorrelation time from block-mean variance.

    For independent samples the variance of a block mean is p(1-p)/block;
    serial correlation inflates it by 2*tau.  Clipped to [0.5, 1e3]:
    0.5 recovers the i.i.d. binomial error.
    """
    if len(block_counts) < 2 or p <= 0.0 or p >= 1.0:
        return 0.5
    var_block = np.var(block_counts / block, ddof=1)
    tau = block * var_block / (2.0 * p * (1.0 - p))
    return float(min(max(tau, 0.5), _TAU_CAP))


def _birkhoff_ball(
    system: MapSystem,
    center: float,
    radii: np.ndarray,
    orbit_length: int,
    burn_in: int,
    replicas: int,
    seed: int,
    stream_ids: tuple[int, ...],
) -> tuple[np.ndarray, np.ndarray, int]:
    """Pooled hit fractions and errors for several radii on one system.

    Runs `replicas` independent orbits (replica count is a config choice,
    never the worker count) and pools their block counts.
    """
    per_rep = max(int(orbit_length) // int(replicas), _BLOCK)
    blocks = []
    for rep in range(replicas):
        x0 = float(_rng.substream(seed, _rng.MEASURE, *stream_ids, rep).random())
        blocks.append(
            _kernels.mp_radius_block_counts(
                x0, per_rep, int(burn_in), system.alpha, center, radii, _BLOCK
            )
        )
    counts = np.concatenate(blocks, axis=0)  # (n_blocks_total, n_radii)
    n_total = counts.shape[0] * _BLOCK
    values = counts.sum(axis=0) / n_total
    errs = np.empty_like(values)
    for j in range(len(radii)):
        p = float(values[j])
        tau = _tau_hat(counts[:, j], _BLOCK, p)
        n_eff = n_total / (2.0 * tau)
        errs[j] = math.sqrt(max(p * (1.0 - p), 0.0) / n_eff)
    return values, errs, n_total


def ball_measure(
    system: MapSystem,
    ball: Ball,
    *,
    orbit_length: int = BIRKHOFF_ORBIT,
    burn_in: int = BIRKHOFF_BURN_IN,
    replicas: int = BIRKHOFF_REPLICAS,
    seed: int = 0,
) -> MeasureEstimate:
    """mu(B); exact on Lebesgue systems, Birkhoff frequency on MP."""
    if system.kind == BERNOULLI_IID:
        raise UnsupportedOperationError("bernoulli_iid has no metric balls")
    _check_center(system, ball.center)
    if system.lebesgue_invariant:
        return MeasureEstimate(2.0 * ball.radius, 0.0, "exact")
    radii = np.array([ball.radius])
    values, errs, n = _birkhoff_ball(
        system, ball.center, radii, orbit_length, burn_in, replicas, seed, ()
    )
    hits = values[0] * n
    if hits < _MIN_HITS:
        raise InsufficientDataError(
            f"only {hits:.0f} ball hits in {n} iterates; grow the orbit"
        )
    return MeasureEstimate(float(values[0]), float(errs[0]), "birkhoff", n)


@dataclass(frozen=True)
class DimensionFit:
    """Log-log regression of ball measure against radius.

    slope is the global least-squares exponent; d0/d1 bracket it by the
    extreme local two-point slopes, matching a two-sided power bound
    rho^d0 >= mu(B_rho) >= rho^d1.
    """

    d0: float
    d1: float
    radii: np.ndarray
    log_measures: np.ndarray
    slope: float
    residuals: np.ndarray


def dimension_fit(
    system: MapSystem,
    center: float,
    rho_grid,
    *,
    orbit_length: int = BIRKHOFF_ORBIT,
    burn_in: int = BIRKHOFF_BURN_IN,
    replicas: int = BIRKHOFF_REPLICAS,
    seed: int = 0,
) -> DimensionFit:
    radii = np.sort(np.asarray(rho_grid, dtype=float))[::-1]
    if len(radii) < 4:
        raise ValidationError("need at least 4 radii")
    if radii[0] / radii[-1] < 10.0**1.5:
        raise ValidationError("radius grid must span at least 1.5 decades")
    if np.any(radii >= 0.25) or np.any(radii <= 0.0):
        raise ValidationError("radii must lie in (0, 1/4)")
    _check_center(system, center)
    if system.lebesgue_invariant:
        mus = 2.0 * radii
    else:
        ascending = radii[::-1].copy()
        values, _, n = _birkhoff_ball(
            system, center, ascending, orbit_length, burn_in, replicas, seed, ()
        )
        if values[0] * n < _MIN_HITS:
            raise InsufficientDataError("smallest ball captured too few orbit hits")
        mus = values[::-1]
    lr = np.log(radii)
    lm = np.log(mus)
    design = np.vstack([lr, np.ones_like(lr)]).T
    (slope, icpt), *_ = np.linalg.lstsq(design, lm, rcond=None)
    local = np.diff(lm) / np.diff(lr)
    return DimensionFit(
        d0=float(local.min()),
        d1=float(local.max()),
        radii=radii,
        log_measures=lm,
        slope=float(slope),
        residuals=lm - (slope * lr + icpt),
    )


def annulus_ratio(
    system: MapSystem,
    center: float,
    rho: float,
    r: float,
    *,
    orbit_length: int = BIRKHOFF_ORBIT,
    burn_in: int = BIRKHOFF_BURN_IN,
    replicas: int = BIRKHOFF_REPLICAS,
    seed: int = 0,
) -> float:
    """mu(B_{rho+r} minus B_{rho-r}) / mu(B_rho)."""
    if not 0.0 < r < rho:
        raise ValidationError("need 0 < r < rho")
    if rho + r >= 0.25:
        raise ValidationError("outer radius must stay below 1/4")
    _check_center(system, center)
    if system.lebesgue_invariant:
        return (2.0 * (rho + r) - 2.0 * (rho - r)) / (2.0 * rho)
    radii = np.array([rho - r, rho, rho + r])
    values, _, n = _birkhoff_ball(
        system, center, radii, orbit_length, burn_in, replicas, seed, ()
    )
    if values[1] * n < _MIN_HITS:
        raise InsufficientDataError("ball captured too few orbit hits")
    return float((values[2] - values[0]) / values[1])


@dataclass(frozen=True)
class AnnulusFit:
    """Power-law fit ratio ~ C * r^eta * rho^(-beta) over a probe table."""

    eta: float
    beta: float
    ratio_samples: np.ndarray  # rows (rho, r, ratio)


def annulus_fit(
    system: MapSystem,
    center: float,
    rho_grid,
    r_fractions=(0.5, 0.25, 0.125),
    **birkhoff_opts,
) -> AnnulusFit:
    rows = []
    for rho in sorted(set(float(x) for x in rho_grid)):
        for f in r_fractions:
            if not 0.0 < f <= 0.5:
                raise ValidationError("r fractions must be in (0, 1/2]")
            r = f * rho
            rows.append((rho, r, annulus_ratio(system, center, rho, r, **birkhoff_opts)))
    table = np.array(rows)
    if np.any(table[:, 2] <= 0.0):
        raise InsufficientDataError("vanishing annulus ratio; cannot fit exponents")
    design = np.vstack([np.log(table[:, 1]), np.log(table[:, 0]), np.ones(len(table))]).T
    coef, *_ = np.linalg.lstsq(design, np.log(table[:, 2]), rcond=None)
    return AnnulusFit(eta=float(coef[0]), beta=float(-coef[1]), ratio_samples=table)


@dataclass(frozen=True)
class RadiusMeasureTable:
    """Monotone radius -> mu(B_r(center)) table with linear interpolation.

    Fills the role of an exact ball-measure law for systems without one;
    inverse lookup supports level construction by tail inversion.
    """

    center: float
    radii: np.ndarray
    values: np.ndarray

    def measure(self, r) -> np.ndarray | float:
        return np.interp(r, self.radii, self.values, left=0.0)

    def inverse(self, target: float) -> float:
        """Smallest tabulated radius with measure >= target (interpolated)."""
        if target <= 0.0:
            return 0.0
        if target > self.values[-1]:
            return math.inf
        return float(np.interp(target, self.values, self.radii))


def build_radius_table(
    system: MapSystem,
    center: float,
    *,
    n_knots: int = 1000,
    r_min: float = 1e-7,
    r_max: float = 0.5,
    orbit_length: int = BIRKHOFF_ORBIT,
    burn_in: int = BIRKHOFF_BURN_IN,
    seed: int = 0,
) -> RadiusMeasureTable:
    if system.kind != MANNEVILLE_POMEAU:
        raise UnsupportedOperationError("radius tables exist for Birkhoff systems only")
    _check_center(system, center)
    radii = np.geomspace(r_min, r_max, n_knots)
    x0 = float(_rng.substream(seed, _rng.MEASURE, 9).random())
    counts = _kernels.mp_radius_counts(
        x0, int(orbit_length), int(burn_in), system.alpha, center, radii
    )
    values = np.maximum.accumulate(counts / float(orbit_length))
    return RadiusMeasureTable(center=center, radii=radii, values=values)
