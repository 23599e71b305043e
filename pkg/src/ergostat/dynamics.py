"""Concrete 1-D systems: doubling map, Manneville-Pomeau family, rigid
rotation, and a synthetic Bernoulli {0,1} process.

Conventions
-----------
* Doubling and rotation act on the circle R/Z with domain [0, 1) and
  metric d(x,y) = min(|x-y|, 1-|x-y|); Manneville-Pomeau acts on [0, 1]
  with d(x,y) = |x-y|.
* The MP left branch is T(x) = x + 2^alpha x^(1+alpha) on [0, 1/2]
  (so T(1/2) = 1) and the right branch is 2x - 1 on (1/2, 1].
* Branch domains are left-closed/right-open on the circle; for MP the
  endpoint 1/2 belongs to the left branch and 1 maps via the right one.
* The Bernoulli kind is a process, not a map: it participates only in
  the binary-process interfaces, and map operations reject it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import NumericalError, UnsupportedOperationError, ValidationError

DOUBLING = "doubling"
MANNEVILLE_POMEAU = "manneville_pomeau"
ROTATION = "rotation"
BERNOULLI_IID = "bernoulli_iid"

_KINDS = (DOUBLING, MANNEVILLE_POMEAU, ROTATION, BERNOULLI_IID)


@dataclass(frozen=True)
class MapSystem:
    """A concrete system; use the factory functions below."""

    kind: str
    alpha: float | None = None
    angle: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown system kind {self.kind!r}")
        if self.kind == MANNEVILLE_POMEAU and not (
            self.alpha is not None and 0.0 < self.alpha < 1.0
        ):
            raise ValidationError("manneville_pomeau requires alpha in (0, 1)")
        if self.kind == ROTATION and not (
            self.angle is not None and 0.0 < self.angle < 1.0
        ):
            raise ValidationError("rotation requires angle in (0, 1)")
        if self.kind == BERNOULLI_IID and not (
            self.epsilon is not None and 0.0 < self.epsilon < 1.0
        ):
            raise ValidationError("bernoulli_iid requires epsilon in (0, 1)")

    @property
    def topology(self) -> str:
        if self.kind in (DOUBLING, ROTATION):
            return "circle"
        if self.kind == MANNEVILLE_POMEAU:
            return "interval"
        raise UnsupportedOperationError("bernoulli_iid has no phase space")

    @property
    def branch_count(self) -> int:
        if self.kind in (DOUBLING, MANNEVILLE_POMEAU):
            return 2
        if self.kind == ROTATION:
            return 1
        raise UnsupportedOperationError("bernoulli_iid has no branches")

    @property
    def is_map(self) -> bool:
        return self.kind != BERNOULLI_IID

    @property
    def lebesgue_invariant(self) -> bool:
        """True when the invariant measure is exactly Lebesgue."""
        if not self.is_map:
            raise UnsupportedOperationError("bernoulli_iid has no invariant measure on [0,1)")
        return self.kind in (DOUBLING, ROTATION)

    def metric(self, x: float, y: float) -> float:
        if self.topology == "circle":
            d = abs(x - y)
            return 1.0 - d if d > 0.5 else d
        return abs(x - y)

    def domain_contains(self, x: float) -> bool:
        if not self.is_map:
            return False
        if self.topology == "circle":
            return 0.0 <= x < 1.0
        return 0.0 <= x <= 1.0

    @property
    def expansion_constant(self) -> float:
        """sup|DT| + sup|DT^-1| (global Lipschitz budget).

        Doubling: 2 + 1/2.  MP: the left-branch derivative peaks at
        x = 1/2 with value 2 + alpha, and equals 1 at the neutral fixed
        point, so the inverse derivative is bounded by 1.  Rotation: 1 + 1.
        """
        if self.kind == DOUBLING:
            return 2.5
        if self.kind == MANNEVILLE_POMEAU:
            return 3.0 + self.alpha
        if self.kind == ROTATION:
            return 2.0
        raise UnsupportedOperationError("bernoulli_iid has no derivative")


def doubling() -> MapSystem:
    return MapSystem(DOUBLING)


def manneville_pomeau(alpha: float) -> MapSystem:
    return MapSystem(MANNEVILLE_POMEAU, alpha=float(alpha))


def rotation(angle: float) -> MapSystem:
    return MapSystem(ROTATION, angle=float(angle))


def bernoulli_iid(epsilon: float) -> MapSystem:
    return MapSystem(BERNOULLI_IID, epsilon=float(epsilon))


def step(system: MapSystem, x: float) -> float:
    """One application of the forward map T."""
    if not system.is_map:
        raise UnsupportedOperationError("bernoulli_iid has no pointwise map")
    x = float(x)
    if math.isnan(x):
        raise ValidationError("NaN input")
    if not system.domain_contains(x):
        raise ValidationError(f"x={x} outside the domain")
    if system.kind == DOUBLING:
        y = 2.0 * x
        return y - 1.0 if y >= 1.0 else y
    if system.kind == ROTATION:
        y = x + system.angle
        return y - 1.0 if y >= 1.0 else y
    return float(_kernels.mp_step_scalar(x, system.alpha))


def orbit_segment(system: MapSystem, x0: float, n: int) -> Iterator[float]:
    """Yield x0, T x0, ..., T^(n-1) x0 lazily."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    # validate once up front; the loop then stays in-domain by totality
    x = x0
    if not system.is_map:
        raise UnsupportedOperationError("bernoulli_iid has no orbits")
    if math.isnan(float(x)) or not system.domain_contains(float(x)):
        raise ValidationError(f"x0={x0} outside the domain")

    def gen():
        y = float(x)
        for _ in range(n):
            yield y
            y = step(system, y)

    return gen()


def _mp_left_inverse(alpha: float, y: float) -> float:
    """Solve x + 2^alpha x^(1+alpha) = y on [0, 1/2].

    Bisection to width 1e-14 then one Newton polish; Newton alone is
    unreliable on the flat parabolic branch near 0.
    """
    if not 0.0 <= y <= 1.0:
        raise ValidationError(f"y={y} outside [0, 1]")
    c = 2.0 ** alpha
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid + c * mid ** (1.0 + alpha) < y:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    fp = 1.0 + c * (1.0 + alpha) * x ** alpha
    x -= (x + c * x ** (1.0 + alpha) - y) / fp
    return min(max(x, 0.0), 0.5)


def branch_preimages(system: MapSystem, y: float) -> list[float]:
    """All x with T(x) = y, one per branch whose range contains y, sorted."""
    if not system.is_map:
        raise UnsupportedOperationError("bernoulli_iid has no branches")
    if system.kind == ROTATION:
        raise UnsupportedOperationError("rotation has a single global inverse, no branch structure")
    y = float(y)
    if math.isnan(y):
        raise ValidationError("NaN input")
    if system.kind == DOUBLING:
        if not 0.0 <= y < 1.0:
            raise ValidationError(f"y={y} outside [0, 1)")
        return [y / 2.0, y / 2.0 + 0.5]
    # MP: left branch covers [0, 1], right branch (1/2, 1] covers (0, 1]
    if not 0.0 <= y <= 1.0:
        raise ValidationError(f"y={y} outside [0, 1]")
    pre = [_mp_left_inverse(system.alpha, y)]
    if y > 0.0:
        pre.append((y + 1.0) / 2.0)
    return pre


@dataclass(frozen=True)
class PmStructure:
    """The decreasing sequence a_n with T(a_{n+1}) = a_n, a_0 = 1/2.

    a_n ~ n^(-gamma) with gamma = 1/alpha; the half-open intervals
    (a_{n+1}, a_n] partition (0, 1/2] and each is mapped onto the next.
    """

    alpha: float
    gamma: float
    a: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.a) - 1

    def interval(self, n: int) -> tuple[float, float]:
        """I_n = (a_{n+1}, a_n] as an endpoint pair."""
        if not 0 <= n < self.n_max:
            raise ValidationError(f"interval index {n} not computed (n_max={self.n_max})")
        return (float(self.a[n + 1]), float(self.a[n]))

    def extended(self, n_max: int) -> "PmStructure":
        """Structure with at least n_max entries (prefix unchanged)."""
        if n_max <= self.n_max:
            return self
        return pm_a_sequence(self.alpha, n_max)


def pm_a_sequence(alpha: float, n_max: int) -> PmStructure:
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must be in (0, 1)")
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    a = _kernels.pm_a_seq(alpha, int(n_max))
    # residual audit: T(a[n+1]) must reproduce a[n]
    c = 2.0 ** alpha
    resid = np.abs(a[1:] + c * a[1:] ** (1.0 + alpha) - a[:-1])
    worst = int(np.argmax(resid))
    if resid[worst] > 1e-12:
        raise NumericalError(
            f"root refinement failed at index {worst + 1}: residual {resid[worst]:.3e}"
        )
    if not np.all(np.diff(a) < 0.0):
        raise NumericalError("a_n is not strictly decreasing")
    a.flags.writeable = False
    return PmStructure(alpha=float(alpha), gamma=1.0 / float(alpha), a=a)
