"""Joint sampling of both watermark layers into standard-normal noise.

Every latent element carries one message-watermark bit ``w_c`` and one
localization bit ``w_l``.  The real line is split into four half-open
intervals whose standard-normal masses equal the joint bit
probabilities, an element's value is drawn from the normal law
truncated to its pair's interval, and the full grid is then exactly
N(0, 1) distributed when ``w_c`` is uniform and ``w_l`` is
Bernoulli(1 - theta).

Two interval orderings are supported.  Both use boundaries

    a = Phi^-1(theta / 2)
    b = Phi^-1(1/2 + theta/2)   (four-interval ordering)
    b = Phi^-1(1 - theta/2)     (three-interval ordering)

and assign, left to right over (-inf,a) [a,0) [0,b) [b,+inf):

    four  intervals: (0,0) (0,1) (1,0) (1,1)
    three intervals: (0,0) (0,1) (1,1) (1,0)

Under both orderings ``w_c`` is the sign bit.  The three-interval
ordering makes ``w_l`` constant on [a, b), so only two boundaries can
flip it under perturbation instead of three, which is what makes it the
more robust choice against inversion noise concentrated near interval
edges.

Reconstruction is the exact inverse lookup: each value maps to the
unique bit pair whose interval contains it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import Seed, seeded_uniforms, validate_bits, validate_latent
from .errors import ParameterError, ValidationError
from .gauss import normal_cdf, normal_quantile

THREE_INTERVALS = 3
FOUR_INTERVALS = 4

# uniform draws are kept away from interval endpoints to avoid infinite
# quantiles; see sample_noise
_U_EPS = 1e-12

_BIT_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class IntervalStrategy:
    """Number of embedding intervals (3 or 4) and the zero-probability theta."""

    intervals: int = THREE_INTERVALS
    theta: float = 0.5

    def __post_init__(self):
        if self.intervals not in (THREE_INTERVALS, FOUR_INTERVALS):
            raise ParameterError(f"intervals must be 3 or 4: {self.intervals}")
        if not 0.0 < self.theta < 1.0:
            raise ParameterError(f"theta must lie in (0, 1): {self.theta}")

    def to_json(self) -> dict:
        return {"intervals": self.intervals, "theta": self.theta}

    @classmethod
    def from_json(cls, obj: dict) -> "IntervalStrategy":
        return cls(int(obj["intervals"]), float(obj["theta"]))


def boundaries(strategy: IntervalStrategy) -> tuple[float, float]:
    """Interval boundaries (a, b) with a < 0 < b."""
    theta = strategy.theta
    a = normal_quantile(theta / 2.0)
    if strategy.intervals == FOUR_INTERVALS:
        b = normal_quantile(0.5 + theta / 2.0)
    else:
        b = normal_quantile(1.0 - theta / 2.0)
    return a, b


def interval_table(strategy: IntervalStrategy) -> dict[tuple[int, int], tuple[float, float]]:
    """Map each bit pair (w_c, w_l) to its half-open interval [lo, hi)."""
    a, b = boundaries(strategy)
    if strategy.intervals == FOUR_INTERVALS:
        return {
            (0, 0): (-np.inf, a),
            (0, 1): (a, 0.0),
            (1, 0): (0.0, b),
            (1, 1): (b, np.inf),
        }
    return {
        (0, 0): (-np.inf, a),
        (0, 1): (a, 0.0),
        (1, 1): (0.0, b),
        (1, 0): (b, np.inf),
    }


def pair_probability(strategy: IntervalStrategy, w_c: int, w_l: int) -> float:
    """Joint prior P(w_c, w_l) = 1/2 * theta^(1-w_l) * (1-theta)^w_l."""
    theta = strategy.theta
    return 0.5 * (theta if w_l == 0 else 1.0 - theta)


def sample_noise(w_cop: np.ndarray, w_loc: np.ndarray, strategy: IntervalStrategy,
                 seed: Seed) -> np.ndarray:
    """Draw one truncated-normal value per element, by inverse CDF.

    For an element with interval [lo, hi), the value is
    ``Phi^-1(Phi(lo) + U * (Phi(hi) - Phi(lo)))`` with U uniform,
    clamped into the half-open interval so reconstruction is exact even
    at floating-point edge cases.  The caller is responsible for using
    the same theta for ``w_loc`` and ``strategy``; that cannot be
    checked here.
    """
    w_cop = validate_bits(w_cop)
    w_loc = validate_bits(w_loc)
    if w_cop.shape != w_loc.shape:
        raise ValidationError(f"grid shapes differ: {w_cop.shape} vs {w_loc.shape}")

    lo, hi = _element_intervals(w_cop, w_loc, strategy)
    u = seeded_uniforms(seed, w_cop.size).reshape(w_cop.shape)
    u = np.clip(u, _U_EPS, 1.0 - _U_EPS)
    p_lo = normal_cdf(lo)
    p_hi = normal_cdf(hi)
    p = p_lo + u * (p_hi - p_lo)
    z = normal_quantile(np.clip(p, 5e-324, 1.0 - 2**-53))
    # pin values that rounded out of their interval back inside it
    upper_open = np.nextafter(hi, -np.inf)
    return np.clip(z, lo, upper_open)


def reconstruct_bits(z: np.ndarray, strategy: IntervalStrategy) -> tuple[np.ndarray, np.ndarray]:
    """Invert the sampling: map each value to its bit pair by interval lookup."""
    z = validate_latent(z)
    a, b = boundaries(strategy)
    w_c = (z >= 0.0).astype(np.uint8)
    if strategy.intervals == FOUR_INTERVALS:
        w_l = (((z >= a) & (z < 0.0)) | (z >= b)).astype(np.uint8)
    else:
        w_l = ((z >= a) & (z < b)).astype(np.uint8)
    return w_c, w_l


def _element_intervals(w_cop, w_loc, strategy):
    table = interval_table(strategy)
    lo = np.empty(w_cop.shape, dtype=np.float64)
    hi = np.empty(w_cop.shape, dtype=np.float64)
    for pair in _BIT_PAIRS:
        sel = (w_cop == pair[0]) & (w_loc == pair[1])
        lo[sel], hi[sel] = table[pair]
    return lo, hi
