"""Compiled hot loops.

The doubling map is iterated on a sliding 53-bit integer window over an
i.i.d. random bit supply instead of on floats: multiplying a float by 2
mod 1 shifts mantissa bits out, so a float orbit collapses onto the fixed
point 0 after ~52 steps and every long-horizon statistic would be garbage.
The window state W encodes x = W / 2^53; one map step is
``W <- ((W << 1) & MASK53) | next_bit``, which realizes the exact
shift dynamics on binary digits with the stationary (Lebesgue) law.

Manneville-Pomeau and rotation orbits are plain float iterations: the
rotation is an isometry (additive error stays ~1e-12 over 10^4 steps) and
the MP map has no digit-shift degeneracy.

All per-sample loops write only to their own output slot, so results are
bit-identical for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

MASK53 = np.uint64((1 << 53) - 1)
TWO53 = 9007199254740992.0  # 2**53
_ONE = np.uint64(1)


def words_needed(nbits: int) -> int:
    return (int(nbits) + 63) // 64 + 1


@njit(inline="always")
def _next_bit(words, i, bitpos):
    w = words[i, bitpos >> 6]
    return (w >> np.uint64(63 - (bitpos & 63))) & _ONE


@njit(inline="always")
def _circle_dist(x, c):
    d = abs(x - c)
    return 1.0 - d if d > 0.5 else d


# ---------------------------------------------------------------- doubling

@njit(cache=True, parallel=True)
def doubling_visit_counts(words, n_steps, center, rho):
    m = words.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        W = np.uint64(0)
        bitpos = 0
        for _ in range(53):
            W = (W << _ONE) | _next_bit(words, i, bitpos)
            bitpos += 1
        c = 0
        for n in range(n_steps):
            if _circle_dist(W / TWO53, center) <= rho:
                c += 1
            if n < n_steps - 1:
                W = ((W << _ONE) & MASK53) | _next_bit(words, i, bitpos)
                bitpos += 1
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def doubling_min_distance(words, n_steps, center):
    m = words.shape[0]
    out = np.empty(m)
    for i in prange(m):
        W = np.uint64(0)
        bitpos = 0
        for _ in range(53):
            W = (W << _ONE) | _next_bit(words, i, bitpos)
            bitpos += 1
        best = 1.0
        for n in range(n_steps):
            d = _circle_dist(W / TWO53, center)
            if d < best:
                best = d
            if n < n_steps - 1:
                W = ((W << _ONE) & MASK53) | _next_bit(words, i, bitpos)
                bitpos += 1
        out[i] = best
    return out


@njit(cache=True, parallel=True)
def doubling_hits_range(w0s, words, n_from, n_to, center, rho, strict):
    """Hits at steps n in [n_from, n_to) starting from window states w0s.

    Step 0 is the initial state itself.  strict=True counts d < rho
    (open exceedance set), else d <= rho (closed ball).
    """
    m = w0s.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        W = w0s[i]
        bitpos = 0
        c = 0
        for n in range(n_to):
            if n >= n_from:
                d = _circle_dist(W / TWO53, center)
                if (d < rho) if strict else (d <= rho):
                    c += 1
            if n < n_to - 1:
                W = ((W << _ONE) & MASK53) | _next_bit(words, i, bitpos)
                bitpos += 1
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def doubling_window_stats(words, n_steps, delta, ends, center, rho):
    """Per-sample (first-step hit, running hit counts over [delta, end]).

    ends must be sorted ascending; the count stored for an end < delta
    is 0 (empty window).
    """
    m = words.shape[0]
    ne = ends.shape[0]
    first = np.zeros(m, dtype=np.int64)
    wc = np.zeros((m, ne), dtype=np.int64)
    for i in prange(m):
        W = np.uint64(0)
        bitpos = 0
        for _ in range(53):
            W = (W << _ONE) | _next_bit(words, i, bitpos)
            bitpos += 1
        c = 0
        e = 0
        for n in range(n_steps):
            hit = _circle_dist(W / TWO53, center) <= rho
            if n == 0 and hit:
                first[i] = 1
            if n >= delta and hit:
                c += 1
            while e < ne and ends[e] == n:
                wc[i, e] = c
                e += 1
            if n < n_steps - 1:
                W = ((W << _ONE) & MASK53) | _next_bit(words, i, bitpos)
                bitpos += 1
    return first, wc


@njit(cache=True)
def doubling_stream(words, length):
    """Materialize x_0..x_{length-1} of one exact doubling orbit."""
    xs = np.empty(length)
    W = np.uint64(0)
    bitpos = 0
    for _ in range(53):
        W = (W << _ONE) | _next_bit(words, 0, bitpos)
        bitpos += 1
    for n in range(length):
        xs[n] = W / TWO53
        W = ((W << _ONE) & MASK53) | _next_bit(words, 0, bitpos)
        bitpos += 1
    return xs


# ---------------------------------------------------------------- rotation

@njit(cache=True, parallel=True)
def rotation_visit_counts(x0s, n_steps, angle, center, rho):
    m = x0s.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        for _ in range(n_steps):
            if _circle_dist(x, center) <= rho:
                c += 1
            x += angle
            if x >= 1.0:
                x -= 1.0
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def rotation_min_distance(x0s, n_steps, angle, center):
    m = x0s.shape[0]
    out = np.empty(m)
    for i in prange(m):
        x = x0s[i]
        best = 1.0
        for _ in range(n_steps):
            d = _circle_dist(x, center)
            if d < best:
                best = d
            x += angle
            if x >= 1.0:
                x -= 1.0
        out[i] = best
    return out


@njit(cache=True, parallel=True)
def rotation_hits_range(x0s, n_from, n_to, angle, center, rho, strict):
    m = x0s.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        for n in range(n_to):
            if n >= n_from:
                d = _circle_dist(x, center)
                if (d < rho) if strict else (d <= rho):
                    c += 1
            x += angle
            if x >= 1.0:
                x -= 1.0
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def rotation_window_stats(x0s, n_steps, delta, ends, angle, center, rho):
    """Rotation analogue of doubling_window_stats (ends ascending)."""
    m = x0s.shape[0]
    ne = ends.shape[0]
    first = np.zeros(m, dtype=np.int64)
    wc = np.zeros((m, ne), dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        e = 0
        for n in range(n_steps):
            hit = _circle_dist(x, center) <= rho
            if n == 0 and hit:
                first[i] = 1
            if n >= delta and hit:
                c += 1
            while e < ne and ends[e] == n:
                wc[i, e] = c
                e += 1
            x += angle
            if x >= 1.0:
                x -= 1.0
    return first, wc


# ---------------------------------------------------------------- Manneville-Pomeau

@njit(inline="always")
def _mp_step(x, alpha):
    if x <= 0.5:
        y = x + (2.0 ** alpha) * x ** (1.0 + alpha)
        return 1.0 if y > 1.0 else y
    return 2.0 * x - 1.0


@njit(cache=True)
def mp_step_scalar(x, alpha):
    return _mp_step(x, alpha)


@njit(cache=True)
def mp_radius_block_counts(x0, total, burn, alpha, center, radii, block):
    """out[b, j] = hits of the radius-radii[j] ball in orbit block b.

    radii must be ascending; one orbit pass serves every radius, so
    differences of columns are exact per-block annulus counts.
    """
    nblocks = total // block
    nr = radii.shape[0]
    out = np.zeros((nblocks, nr), dtype=np.int64)
    x = x0
    for _ in range(burn):
        x = _mp_step(x, alpha)
    rmax = radii[nr - 1]
    for b in range(nblocks):
        for _ in range(block):
            d = abs(x - center)
            if d <= rmax:
                j = np.searchsorted(radii, d)
                while j < nr:
                    out[b, j] += 1
                    j += 1
            x = _mp_step(x, alpha)
    return out


@njit(cache=True)
def mp_radius_counts(x0, total, burn, alpha, center, radii):
    """counts[j] = #{n <= total : |T^n x0 - center| <= radii[j]}, radii ascending."""
    nr = radii.shape[0]
    hist = np.zeros(nr + 1, dtype=np.int64)
    x = x0
    for _ in range(burn):
        x = _mp_step(x, alpha)
    rmax = radii[nr - 1]
    for _ in range(total):
        d = abs(x - center)
        if d <= rmax:
            hist[np.searchsorted(radii, d)] += 1
        x = _mp_step(x, alpha)
    counts = np.zeros(nr, dtype=np.int64)
    acc = 0
    for j in range(nr):
        acc += hist[j]
        counts[j] = acc
    return counts


@njit(cache=True)
def mp_subsample(x0, m, gap, burn, alpha):
    out = np.empty(m)
    x = x0
    for _ in range(burn):
        x = _mp_step(x, alpha)
    for j in range(m):
        for _ in range(gap):
            x = _mp_step(x, alpha)
        out[j] = x
    return out


@njit(cache=True, parallel=True)
def mp_visit_counts(x0s, n_steps, alpha, center, rho):
    m = x0s.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        for _ in range(n_steps):
            if abs(x - center) <= rho:
                c += 1
            x = _mp_step(x, alpha)
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def mp_min_distance(x0s, n_steps, alpha, center):
    m = x0s.shape[0]
    out = np.empty(m)
    for i in prange(m):
        x = x0s[i]
        best = 1.0
        for _ in range(n_steps):
            d = abs(x - center)
            if d < best:
                best = d
            x = _mp_step(x, alpha)
        out[i] = best
    return out


@njit(cache=True, parallel=True)
def mp_hits_range(x0s, n_from, n_to, alpha, center, rho, strict):
    m = x0s.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        for n in range(n_to):
            if n >= n_from:
                d = abs(x - center)
                if (d < rho) if strict else (d <= rho):
                    c += 1
            x = _mp_step(x, alpha)
        out[i] = c
    return out


@njit(cache=True, parallel=True)
def mp_window_stats(x0s, n_steps, delta, ends, alpha, center, rho):
    """MP analogue of doubling_window_stats (ends ascending)."""
    m = x0s.shape[0]
    ne = ends.shape[0]
    first = np.zeros(m, dtype=np.int64)
    wc = np.zeros((m, ne), dtype=np.int64)
    for i in prange(m):
        x = x0s[i]
        c = 0
        e = 0
        for n in range(n_steps):
            hit = abs(x - center) <= rho
            if n == 0 and hit:
                first[i] = 1
            if n >= delta and hit:
                c += 1
            while e < ne and ends[e] == n:
                wc[i, e] = c
                e += 1
            x = _mp_step(x, alpha)
    return first, wc


@njit(cache=True)
def mp_collect_in_ball(x0, total, burn, alpha, center, rho, max_out):
    """Orbit points with |x - center| < rho, in visit order, up to max_out."""
    out = np.empty(max_out)
    x = x0
    for _ in range(burn):
        x = _mp_step(x, alpha)
    k = 0
    for _ in range(total):
        if abs(x - center) < rho:
            out[k] = x
            k += 1
            if k == max_out:
                break
        x = _mp_step(x, alpha)
    return out[:k]


@njit(cache=True)
def mp_stream(x0, length, alpha):
    xs = np.empty(length)
    x = x0
    for n in range(length):
        xs[n] = x
        x = _mp_step(x, alpha)
    return xs


# ---------------------------------------------------------------- Markov DP

@njit(cache=True)
def markov_count_pmf(P, marked, v0, L):
    """Joint pmf over k of marked-state visits among L consecutive steps.

    v0 is the (possibly sub-probability) state distribution at the first
    of the L steps; the first step's own mark is counted.  Total output
    mass equals sum(v0), so restricted start vectors yield joint laws.
    """
    S = P.shape[0]
    f = np.zeros((L + 1, S))
    for s in range(S):
        if marked[s]:
            f[1, s] = v0[s]
        else:
            f[0, s] = v0[s]
    for step in range(L - 1):
        g = np.zeros((L + 1, S))
        # counts so far <= step + 1, and < L while transitions remain
        kcap = step + 1 if step + 1 < L else L - 1
        for k in range(kcap + 1):
            for s in range(S):
                v = f[k, s]
                if v != 0.0:
                    for s2 in range(S):
                        w = v * P[s, s2]
                        if marked[s2]:
                            g[k + 1, s2] += w
                        else:
                            g[k, s2] += w
        f = g
    out = np.zeros(L + 1)
    for k in range(L + 1):
        acc = 0.0
        for s in range(S):
            acc += f[k, s]
        out[k] = acc
    return out


@njit(cache=True)
def pm_a_seq(alpha, n_max):
    """Backward orbit of 1/2 under the parabolic branch: T(a[n+1]) = a[n].

    Bisection to width 1e-14 plus one Newton polish per root; the Newton
    step is what pushes residuals to ~1e-16 on the flat branch near 0.
    """
    c = 2.0 ** alpha
    a = np.empty(n_max + 1)
    a[0] = 0.5
    for n in range(n_max):
        target = a[n]
        lo = 0.0
        hi = target
        while hi - lo > 1e-14:
            mid = 0.5 * (lo + hi)
            if mid + c * mid ** (1.0 + alpha) < target:
                lo = mid
            else:
                hi = mid
        x = 0.5 * (lo + hi)
        f = x + c * x ** (1.0 + alpha) - target
        fp = 1.0 + c * (1.0 + alpha) * x ** alpha
        x -= f / fp
        if x < 0.0:
            x = 0.0
        a[n + 1] = x
    return a
