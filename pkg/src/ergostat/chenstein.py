"""Poisson approximation for stationary 0/1 processes.

For a stationary binary process X_1..X_N with success probability
epsilon, the distance of the law of S = sum X_i from Poisson(N epsilon)
is controlled by

    C3 * #E * ( N*(R1 + R2) + Delta*epsilon ),

where R1 measures long-range dependence (sup over split points of the
joint-vs-product gap between X_1 and a window separated by Delta steps)
and R2 collects short-range pair correlations below Delta.

Two process modes share this interface: small finite-state Markov chains
with marked states (everything exact, by transfer-matrix dynamic
programming) and orbit processes X_n = 1_B(T^(n-1) x) (Monte Carlo with
conditioned starts).  The exact mode exists to validate the estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _rng
from ._parallel import apply_workers
from .dynamics import DOUBLING, ROTATION, MapSystem
from .errors import (
    CapacityError,
    InsufficientDataError,
    NumericalError,
    ValidationError,
)
from .measure import Ball, MeasureEstimate, ball_measure

MAX_STATES = 12
MAX_DP_STEPS = 10_000
_MC_SAMPLES = 20_000


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Stationary row vector of a stochastic matrix, by least squares."""
    P = np.asarray(transition, dtype=float)
    S = P.shape[0]
    A = np.vstack([P.T - np.eye(S), np.ones((1, S))])
    b = np.zeros(S + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.any(pi < -1e-12):
        raise NumericalError("stationary vector has a negative entry")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.max(np.abs(pi @ P - pi)) > 1e-12:
        raise NumericalError("stationary vector fails the fixed-point check")
    return pi


@dataclass(frozen=True)
class MarkovBinaryProcess:
    """Finite-state chain observed through a marked-state indicator."""

    transition: np.ndarray
    marked: frozenset[int]
    stationary: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValidationError("transition matrix must be square")
        if P.shape[0] > MAX_STATES:
            raise CapacityError(f"{P.shape[0]} states exceed the cap {MAX_STATES}")
        if np.any(P < 0.0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise ValidationError("rows must be probability vectors (1e-12)")
        if not self.marked or not all(0 <= s < P.shape[0] for s in self.marked):
            raise ValidationError("marked set must be nonempty valid states")
        if len(self.marked) == P.shape[0]:
            raise ValidationError("marking every state makes X constant 1")
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "marked", frozenset(int(s) for s in self.marked))
        object.__setattr__(self, "stationary", stationary_distribution(P))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def marked_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=np.bool_)
        mask[list(self.marked)] = True
        return mask

    @property
    def epsilon(self) -> float:
        return float(self.stationary[self.marked_mask].sum())

    @property
    def is_iid(self) -> bool:
        return bool(np.all(np.abs(self.transition - self.transition[0]) < 1e-15))


def iid_process(epsilon: float) -> MarkovBinaryProcess:
    if not 0.0 < epsilon < 1.0:
        raise ValidationError("epsilon must be in (0, 1)")
    row = np.array([1.0 - epsilon, epsilon])
    return MarkovBinaryProcess(transition=np.vstack([row, row]), marked=frozenset({1}))


@dataclass(frozen=True)
class DynamicalBinaryProcess:
    """X_n = 1_B(T^(n-1) x) along orbits started from the invariant law."""

    system: MapSystem
    ball: Ball
    mu: float

    def __post_init__(self):
        if not self.system.is_map:
            raise ValidationError("orbit processes require a map system")
        if not 0.0 < self.mu < 1.0:
            raise ValidationError("mu must be in (0, 1)")

    @property
    def epsilon(self) -> float:
        return self.mu


def dynamical_process(
    system: MapSystem,
    ball: Ball,
    *,
    measure: MeasureEstimate | float | None = None,
    seed: int = 0,
) -> DynamicalBinaryProcess:
    if measure is None:
        mu = ball_measure(system, ball, seed=seed).value
    elif isinstance(measure, MeasureEstimate):
        mu = measure.value
    else:
        mu = float(measure)
    return DynamicalBinaryProcess(system=system, ball=ball, mu=mu)


def _count_pmf(process: MarkovBinaryProcess, v0: np.ndarray, length: int) -> np.ndarray:
    return _kernels.markov_count_pmf(
        process.transition, process.marked_mask, np.asarray(v0, dtype=float), length
    )


def exact_count_distribution(process: MarkovBinaryProcess, N: int) -> np.ndarray:
    """Exact pmf of S = X_1 + ... + X_N by (state, count) dynamic programming."""
    if not isinstance(process, MarkovBinaryProcess):
        raise ValidationError("exact counting needs the finite-state mode")
    if N < 1:
        raise ValidationError("N must be at least 1")
    if N > MAX_DP_STEPS:
        raise CapacityError(f"N={N} exceeds the DP cap {MAX_DP_STEPS}")
    pmf = _count_pmf(process, process.stationary, N)
    if abs(pmf.sum() - 1.0) > 1e-10:
        raise NumericalError("count pmf mass drifted from 1")
    return pmf


# --------------------------------------------------------------------- R1

def _r1_exact(process: MarkovBinaryProcess, N: int, Delta: int) -> MeasureEstimate:
    pi = process.stationary
    mask = process.marked_mask
    eps = process.epsilon
    v1 = np.where(mask, pi, 0.0)
    P = process.transition
    for _ in range(Delta):
        v1 = v1 @ P
    best = 0.0
    for j in range(1, N - Delta):
        L = N - j - Delta  # window X_(Delta+1) .. X_(N-j)
        if L < 1:
            continue
        joint = _count_pmf(process, v1, L)
        marg = _count_pmf(process, pi, L)
        for q in range(1, L):
            gap = abs(joint[q] - eps * marg[q])
            if gap > best:
                best = gap
    return MeasureEstimate(best, 0.0, "exact")


def _window_stats(process: DynamicalBinaryProcess, N, Delta, ends, m, seed):
    system, ball = process.system, process.ball
    ends = np.asarray(sorted(ends), dtype=np.int64)
    if system.kind == DOUBLING:
        nwords = _kernels.words_needed(N + 53)
        words = _rng.bit_matrix(seed, (_rng.CHENSTEIN, 0), m, nwords)
        return _kernels.doubling_window_stats(
            words, N, Delta, ends, ball.center, ball.radius
        )
    if system.kind == ROTATION:
        x0s = _rng.substream(seed, _rng.CHENSTEIN, 0).random(m)
        return _kernels.rotation_window_stats(
            x0s, N, Delta, ends, system.angle, ball.center, ball.radius
        )
    x_init = float(_rng.substream(seed, _rng.CHENSTEIN, 0).random())
    x0s = _kernels.mp_subsample(x_init, m, 200, 10_000, system.alpha)
    return _kernels.mp_window_stats(
        x0s, N, Delta, ends, system.alpha, ball.center, ball.radius
    )


def r1_estimate(
    process,
    N: int,
    Delta: int,
    *,
    m: int = _MC_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> MeasureEstimate:
    """sup over split points j and counts q of
    |P(X_1=1, S_(Delta+1)^(N-j) = q) - epsilon P(S_(Delta+1)^(N-j) = q)|.

    Exact (transfer-matrix) for the finite-state mode.  The orbit mode
    scans j in {1, N/4, N/2, 3N/4} and the counts q carrying at least 10
    observations, so its value is a lower bound on the true supremum.
    """
    if not 2 <= Delta < N:
        raise ValidationError("need 2 <= Delta < N")
    if Delta == N - 1:
        return MeasureEstimate(0.0, 0.0, "exact")  # empty (j, q) range
    if isinstance(process, MarkovBinaryProcess):
        if process.is_iid:
            return MeasureEstimate(0.0, 0.0, "exact")
        return _r1_exact(process, N, Delta)

    apply_workers(workers)
    eps = process.epsilon
    j_grid = sorted({1, N // 4, N // 2, 3 * N // 4} & set(range(1, N - Delta)))
    ends = sorted({N - j - 1 for j in j_grid})
    first, wc = _window_stats(process, N, Delta, ends, m, seed)
    fbar = first.mean()
    best, best_err = 0.0, 0.0
    for col, end in enumerate(ends):
        L = end - Delta + 1
        counts = wc[:, col]
        for q in range(1, L):
            sel = counts == q
            nq = int(sel.sum())
            if nq < 10:
                continue
            p_joint = float((first * sel).mean())
            p_marg = nq / m
            gap = abs(p_joint - eps * p_marg)
            if gap > best:
                best = gap
                best_err = math.sqrt(
                    (p_joint * (1 - p_joint) + (eps * fbar) * p_marg * (1 - p_marg)) / m
                )
    return MeasureEstimate(best, best_err, "montecarlo", m)


# --------------------------------------------------------------------- R2

def _in_ball_starts(process: DynamicalBinaryProcess, m: int, seed: int):
    """m starts distributed as the invariant law conditioned on the ball."""
    system, ball = process.system, process.ball
    rng = _rng.substream(seed, _rng.CHENSTEIN, 1)
    if system.kind == DOUBLING:
        xs = (ball.center + ball.radius * (2.0 * rng.random(m) - 1.0)) % 1.0
        w0s = (xs * _kernels.TWO53).astype(np.uint64) & _kernels.MASK53
        return w0s
    if system.kind == ROTATION:
        return (ball.center + ball.radius * (2.0 * rng.random(m) - 1.0)) % 1.0
    x_init = float(rng.random())
    budget = int(4.0 * m / process.mu) + 100_000
    xs = _kernels.mp_collect_in_ball(
        x_init, budget, 10_000, system.alpha, ball.center, ball.radius, m
    )
    if len(xs) < m:
        raise InsufficientDataError(
            f"only {len(xs)} conditioned starts in {budget} iterates; shrink m"
        )
    return xs


def _hits_from_starts(process: DynamicalBinaryProcess, starts, n_from, n_to, seed):
    system, ball = process.system, process.ball
    if system.kind == DOUBLING:
        m = len(starts)
        nwords = _kernels.words_needed(n_to + 1)
        words = _rng.bit_matrix(seed, (_rng.CHENSTEIN, 2), m, nwords)
        return _kernels.doubling_hits_range(
            starts, words, n_from, n_to, ball.center, ball.radius, False
        )
    if system.kind == ROTATION:
        return _kernels.rotation_hits_range(
            starts, n_from, n_to, system.angle, ball.center, ball.radius, False
        )
    return _kernels.mp_hits_range(
        starts, n_from, n_to, system.alpha, ball.center, ball.radius, False
    )


def r2_estimate(
    process,
    J_lower: int,
    Delta: int,
    *,
    m: int = _MC_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> MeasureEstimate:
    """Sum over n in [J_lower, Delta) of P(X_1 = 1 and X_(n+1) = 1).

    The orbit mode factors each term as mu(B) * P(T^n x in B | x in B)
    and accumulates hits of forward orbits launched from conditioned
    in-ball starts.
    """
    if not 1 <= J_lower < Delta:
        raise ValidationError("need 1 <= J_lower < Delta")
    if isinstance(process, MarkovBinaryProcess):
        pi = process.stationary
        mask = process.marked_mask
        P = process.transition
        v = np.where(mask, pi, 0.0)
        total = 0.0
        for n in range(1, Delta):
            v = v @ P
            if n >= J_lower:
                total += float(v[mask].sum())
        return MeasureEstimate(total, 0.0, "exact")

    apply_workers(workers)
    starts = _in_ball_starts(process, m, seed)
    hits = _hits_from_starts(process, starts, J_lower, Delta, seed)
    mean_hits = float(hits.mean())
    err = float(hits.std(ddof=1)) / math.sqrt(m) if m > 1 else 0.0
    return MeasureEstimate(
        process.mu * mean_hits, process.mu * err, "montecarlo", m
    )


# ------------------------------------------------------------------ bound

@dataclass(frozen=True)
class ChenSteinReport:
    epsilon: float
    N: int
    Delta: int
    R1: MeasureEstimate
    R2: MeasureEstimate
    bound: float
    C3: float
    E_size: int

    def __post_init__(self):
        expect = self.C3 * self.E_size * (
            self.N * (self.R1.value + self.R2.value) + self.Delta * self.epsilon
        )
        if not (np.isfinite(self.bound) and self.bound >= 0.0):
            raise ValidationError("bound must be finite and nonnegative")
        if abs(self.bound - expect) > 1e-12 * max(1.0, abs(expect)):
            raise ValidationError("bound field inconsistent with its factors")


def theorem_bound(
    epsilon: float,
    N: int,
    Delta: int,
    r1: MeasureEstimate | float,
    r2: MeasureEstimate | float,
    *,
    E_size: int = 1,
    C3: float | None = None,
    t: float | None = None,
) -> ChenSteinReport:
    """Assemble C3 * E_size * (N*(R1+R2) + Delta*epsilon).

    The default constant folds the proof's additive per-set term into a
    single factor: C3 = 6t + 4 with t = N*epsilon unless overridden.
    """
    if not 2 <= Delta <= N:
        raise ValidationError("need 2 <= Delta <= N")
    if not 0.0 < epsilon < 1.0:
        raise ValidationError("epsilon must be in (0, 1)")
    if E_size < 1:
        raise ValidationError("E_size must be at least 1")
    if not isinstance(r1, MeasureEstimate):
        r1 = MeasureEstimate(float(r1), 0.0, "exact")
    if not isinstance(r2, MeasureEstimate):
        r2 = MeasureEstimate(float(r2), 0.0, "exact")
    if t is None:
        t = N * epsilon
    if C3 is None:
        C3 = 6.0 * t + 4.0
    bound = C3 * E_size * (N * (r1.value + r2.value) + Delta * epsilon)
    return ChenSteinReport(
        epsilon=epsilon, N=N, Delta=Delta, R1=r1, R2=r2,
        bound=bound, C3=C3, E_size=E_size,
    )


def agg_bound(t: float, N: int) -> float:
    """2 t^2 / N: total-variation-style budget for Binomial(N, t/N) vs Poisson(t)."""
    if N < 1 or t <= 0.0:
        raise ValidationError("need N >= 1 and t > 0")
    return 2.0 * t * t / N
