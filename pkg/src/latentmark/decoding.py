"""Message recovery by replica voting, with optional tamper exclusion.

After de-whitening, element ``j`` of the flat grid holds a noisy copy of
message bit ``j mod L``.  Plain decoding takes a majority over all
replicas of each message bit.  Tamper-aware decoding first drops
replicas that fall under the tamper mask and votes over the remainder;
if every replica of some bit is excluded, it falls back to the plain
vote for that bit.  Ties decode to 0.

Detection and tracing decisions compare the number of agreeing bits
against thresholds derived from exact binomial tail probabilities: an
unrelated message matches ``Bin(L, 1/2)`` bits, so the detection
threshold is the smallest k whose tail probability stays below the
false-positive budget, and the tracing threshold splits that budget
uniformly over the user population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .arrays import validate_mask
from .errors import ParameterError, ValidationError
from .watermark import CipherKey, as_message_bits, decrypt_watermark


@dataclass(frozen=True)
class VoteTally:
    """Per message-bit vote counts; excluded counts replicas dropped by the mask."""

    ones: np.ndarray
    zeros: np.ndarray
    excluded: np.ndarray

    @property
    def excluded_fraction(self) -> float:
        total = self.ones.sum() + self.zeros.sum() + self.excluded.sum()
        return float(self.excluded.sum() / total) if total else 0.0


def tamper_aware_decode(w_cop_rec: np.ndarray, mask: Optional[np.ndarray],
                        key: CipherKey, length: int) -> tuple[np.ndarray, VoteTally]:
    """Decode the message, excluding replicas inside the tamper mask."""
    grid = np.asarray(w_cop_rec)
    if grid.ndim != 3:
        raise ValidationError(f"watermark grid must be 3-D, got {grid.shape}")
    total = grid.size
    if not 1 <= length <= total:
        raise ValidationError(f"length must lie in [1, {total}]: {length}")

    bits = decrypt_watermark(grid, key).astype(np.int64)
    index = np.arange(total) % length
    if mask is None:
        keep = np.ones(total, dtype=bool)
    else:
        mask = validate_mask(mask)
        if mask.shape != grid.shape[1:]:
            raise ValidationError(f"mask shape {mask.shape} does not match grid {grid.shape[1:]}")
        keep = ~np.broadcast_to(mask.astype(bool), grid.shape).reshape(-1)

    ones = np.bincount(index, weights=bits * keep, minlength=length)
    kept = np.bincount(index, weights=keep.astype(np.int64), minlength=length)
    replicas = np.bincount(index, minlength=length)
    zeros = kept - ones
    excluded = replicas - kept

    decoded = (2 * ones > kept).astype(np.uint8)
    orphan = kept == 0
    if orphan.any():
        all_ones = np.bincount(index, weights=bits, minlength=length)
        fallback = (2 * all_ones > replicas).astype(np.uint8)
        decoded[orphan] = fallback[orphan]

    tally = VoteTally(ones=ones.astype(np.int64), zeros=zeros.astype(np.int64),
                      excluded=excluded.astype(np.int64))
    return decoded, tally


def plain_decode(w_cop_rec: np.ndarray, key: CipherKey, length: int) -> np.ndarray:
    """Majority vote over all replicas, ignoring any tamper information."""
    decoded, _ = tamper_aware_decode(w_cop_rec, None, key, length)
    return decoded


def detection_threshold(length: int, fpr: float) -> int:
    """Smallest k with P(Bin(length, 1/2) >= k) <= fpr, computed exactly."""
    if length < 1:
        raise ParameterError(f"length must be >= 1: {length}")
    if not 0.0 < fpr < 1.0:
        raise ParameterError(f"fpr must lie in (0, 1): {fpr}")
    budget = Fraction(fpr) * (1 << length)
    tail = 0
    k = length + 1
    for i in range(length, -1, -1):
        tail += math.comb(length, i)
        if tail > budget:
            break
        k = i
    if k > length:
        raise ParameterError(
            f"fpr {fpr} unattainable at length {length}: even k={length} exceeds it")
    return k


@dataclass(frozen=True)
class DecisionThresholds:
    """Bit-match thresholds for watermark detection and user tracing."""

    length: int
    fpr_target: float
    users: int
    detect_k: int
    trace_k: int

    def __post_init__(self):
        if not self.length / 2 < self.detect_k <= self.trace_k <= self.length:
            raise ValidationError(
                f"need L/2 < detect_k <= trace_k <= L, got "
                f"{self.detect_k}, {self.trace_k} at L={self.length}")

    @classmethod
    def for_rates(cls, length: int, fpr: float = 1e-6, users: int = 10**6) -> "DecisionThresholds":
        if users < 1:
            raise ParameterError(f"users must be >= 1: {users}")
        detect_k = detection_threshold(length, fpr)
        trace_k = detection_threshold(length, fpr / users)
        return cls(length=length, fpr_target=fpr, users=users,
                   detect_k=detect_k, trace_k=trace_k)


@dataclass(frozen=True)
class Decision:
    matches: int
    bit_acc: float
    detected: bool
    traced: bool

    def to_json(self) -> dict:
        return {"matches": self.matches, "bit_acc": self.bit_acc,
                "detected": self.detected, "traced": self.traced}


def decide(message, decoded, thresholds: DecisionThresholds) -> Decision:
    """Compare decoded bits against the reference message."""
    m = as_message_bits(message)
    d = as_message_bits(decoded)
    if m.size != d.size:
        raise ValidationError(f"length mismatch: {m.size} vs {d.size}")
    if m.size != thresholds.length:
        raise ValidationError(
            f"thresholds are for L={thresholds.length}, message has {m.size} bits")
    matches = int((m == d).sum())
    return Decision(matches=matches,
                    bit_acc=matches / m.size,
                    detected=matches >= thresholds.detect_k,
                    traced=matches >= thresholds.trace_k)
