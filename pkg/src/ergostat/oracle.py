"""Independent brute-force references used to validate the estimators.

Nothing here shares code with the modules under test: pmfs come from
scipy, path statistics from literal enumeration, and set measures from
elementary interval geometry.  Every function is deterministic and
RNG-free, so reruns are bit-identical.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, stats

from .errors import CapacityError, ValidationError

_MAX_PATH_CELLS = 20_000_000


def binomial_pmf(n: int, eps: float) -> np.ndarray:
    """Exact Binomial(n, eps) pmf over k = 0..n."""
    if not 1 <= n <= 10**6:
        raise ValidationError("n must be in [1, 1e6]")
    if not 0.0 <= eps <= 1.0:
        raise ValidationError("eps must be in [0, 1]")
    return stats.binom.pmf(np.arange(n + 1), n, eps)


def poisson_pmf(t: float, k_max: int) -> np.ndarray:
    """Poisson(t) pmf over k = 0..k_max."""
    if t <= 0.0 or k_max < 0:
        raise ValidationError("t must be positive and k_max >= 0")
    return stats.poisson.pmf(np.arange(k_max + 1), t)


def doubling_periodic_points(q: int) -> np.ndarray:
    """The 2^q - 1 fixed points of the q-th doubling iterate, sorted."""
    if not 1 <= q <= 20:
        raise ValidationError("q must be in [1, 20]")
    denom = (1 << q) - 1
    return np.arange(denom) / denom


def doubling_corr_oracle(k: int) -> float:
    """Exact Lebesgue covariance of (x, 2^k x mod 1): 2^-k / 12."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    return 1.0 / 12.0 if k == 0 else 2.0 ** (-k) / 12.0


def path_table(transition: np.ndarray, initial: np.ndarray, n: int):
    """(probs, states) over all |S|^n paths of length n.

    states has shape (|S|^n, n); probs[i] is the exact path probability
    under the given initial distribution.
    """
    transition = np.asarray(transition, dtype=float)
    initial = np.asarray(initial, dtype=float)
    s = transition.shape[0]
    if n < 1:
        raise ValidationError("n must be >= 1")
    k = s**n
    if k * n > _MAX_PATH_CELLS:
        raise CapacityError(f"{s}^{n} paths exceed the enumeration cap")
    idx = np.arange(k)
    states = np.empty((k, n), dtype=np.int8)
    for t in range(n):
        states[:, t] = (idx // s ** (n - 1 - t)) % s
    probs = initial[states[:, 0]].astype(float)
    for t in range(1, n):
        probs = probs * transition[states[:, t - 1], states[:, t]]
    return probs, states


def path_enumeration(
    transition: np.ndarray, initial: np.ndarray, marked, n: int
) -> np.ndarray:
    """Exact pmf of the marked-visit count over length-n paths."""
    probs, states = path_table(transition, initial, n)
    marked_arr = np.zeros(np.asarray(transition).shape[0], dtype=np.int64)
    for ms in marked:
        marked_arr[ms] = 1
    counts = marked_arr[states].sum(axis=1)
    return np.bincount(counts, weights=probs, minlength=n + 1)


def _arc_union_length(arcs: list[tuple[float, float]]) -> float:
    """Total length of a union of circle arcs given as (center, radius)."""
    segs = []
    for c, r in arcs:
        if r <= 0.0:
            continue
        if 2.0 * r >= 1.0:
            return 1.0
        lo, hi = (c - r) % 1.0, (c + r) % 1.0
        if lo <= hi:
            segs.append((lo, hi))
        else:  # wraps through 0
            segs.append((lo, 1.0))
            segs.append((0.0, hi))
    if not segs:
        return 0.0
    segs.sort()
    total = 0.0
    cur_lo, cur_hi = segs[0]
    for lo, hi in segs[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    total += cur_hi - cur_lo
    return min(total, 1.0)


def doubling_vrho_measure(rho: float, a_frak: float) -> float:
    """Exact Lebesgue measure of the very-short-return centers.

    A center x has a gap-n self-intersection iff the circle distance
    from x to the nearest fixed point of the n-th iterate is at most
    (2^n + 1) rho / (2^n - 1); the result is the measure of the union of
    those neighborhoods over 1 <= n < a_frak |log rho|.
    """
    if not 0.0 < rho < 0.25 or a_frak <= 0.0:
        raise ValidationError("need 0 < rho < 1/4 and a_frak > 0")
    limit = a_frak * abs(math.log(rho))
    arcs = []
    n = 1
    while n < limit:
        denom = (1 << n) - 1
        radius = (2.0**n + 1.0) * rho / denom
        for k in range(denom):
            arcs.append((k / denom, radius))
        n += 1
    return _arc_union_length(arcs)


def _arc_segments(c: float, r: float) -> list[tuple[float, float]]:
    """Closed arc of radius r at c as line segments inside [0, 1)."""
    lo, hi = (c - r) % 1.0, (c + r) % 1.0
    if lo <= hi:
        return [(lo, hi)]
    return [(0.0, hi), (lo, 1.0)]


def _segments_overlap_length(a: list, b: list) -> float:
    total = 0.0
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            ov = min(hi1, hi2) - max(lo1, lo2)
            if ov > 0.0:
                total += ov
    return total


def doubling_pair_hit_measure(center: float, rho: float, n: int) -> float:
    """Exact Lebesgue measure of B intersected with the n-step preimage of B.

    B is the closed circle ball of radius rho at center; the preimage of
    B under the n-th doubling iterate is 2^n arcs of radius rho / 2^n
    centered at (center + k) / 2^n.  Only arcs near B can contribute, so
    k is restricted to that neighborhood for large n.
    """
    if not 0.0 < rho < 0.25:
        raise ValidationError("need 0 < rho < 1/4")
    if not 1 <= n <= 25:
        raise ValidationError("n must be in [1, 25]")
    scale = float(1 << n)
    piece_r = rho / scale
    ball = _arc_segments(center % 1.0, rho)
    if n <= 12:
        ks = range(1 << n)
    else:
        # arcs with centers farther than rho + piece_r from the ball center
        # cannot intersect it; the window is far narrower than 2^n
        reach = rho + piece_r
        k_lo = math.ceil((center - reach) * scale - center)
        k_hi = math.floor((center + reach) * scale - center)
        ks = range(k_lo, k_hi + 1)
    total = 0.0
    for k in ks:
        mid = ((center + k) / scale) % 1.0
        total += _segments_overlap_length(_arc_segments(mid, piece_r), ball)
    return total


def mp_left_branch_root(alpha: float, y: float) -> float:
    """Preimage of y under x + 2^alpha x^(1+alpha) on [0, 1/2], via brentq."""
    if not 0.0 < alpha < 1.0 or not 0.0 <= y <= 1.0:
        raise ValidationError("need alpha in (0,1) and y in [0,1]")
    if y == 0.0:
        return 0.0
    c = 2.0**alpha
    return float(
        optimize.brentq(lambda x: x + c * x ** (1.0 + alpha) - y, 0.0, 0.5, xtol=1e-15)
    )
