"""Localization and watermark quality metrics.

Conventions for degenerate inputs are fixed here: IoU and Dice of two
empty masks are 1.0, and AUC is undefined (raises) when the truth mask
contains a single class.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaincc
from scipy.stats import rankdata

from .arrays import validate_mask
from .errors import MetricError, ValidationError
from .gauss import normal_cdf

# two-sided Kolmogorov-Smirnov critical value at alpha = 0.01 is
# KS_ALPHA01 / sqrt(n) for large n
KS_ALPHA01 = 1.628


def _pair(mask, truth):
    a = validate_mask(mask)
    b = validate_mask(truth)
    if a.shape != b.shape:
        raise ValidationError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a.astype(bool), b.astype(bool)


def iou(mask, truth) -> float:
    a, b = _pair(mask, truth)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def dice(mask, truth) -> float:
    a, b = _pair(mask, truth)
    total = a.sum() + b.sum()
    if total == 0:
        return 1.0
    return float(2.0 * np.logical_and(a, b).sum() / total)


def auc(score: np.ndarray, truth) -> float:
    """Rank-based (Mann-Whitney) AUC with midrank tie handling."""
    score = np.asarray(score, dtype=np.float64)
    t = validate_mask(truth).astype(bool)
    if score.shape != t.shape:
        raise ValidationError(f"score shape {score.shape} does not match truth {t.shape}")
    pos = int(t.sum())
    neg = t.size - pos
    if pos == 0 or neg == 0:
        raise MetricError("AUC undefined: truth mask contains a single class")
    ranks = rankdata(score.ravel(), method="average")
    rank_sum = ranks[t.ravel()].sum()
    return float((rank_sum - pos * (pos + 1) / 2.0) / (pos * neg))


def ks_statistic(values: np.ndarray) -> float:
    """Two-sided KS statistic of a sample against the standard normal."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    if n < 100:
        raise ValidationError(f"need at least 100 values, got {n}")
    cdf = normal_cdf(v)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def chi2_pvalue(counts, probs) -> float:
    """Pearson goodness-of-fit p-value of counts against cell probabilities."""
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if counts.shape != probs.shape or counts.ndim != 1 or counts.size < 2:
        raise ValidationError("counts and probs must be matching 1-D vectors, length >= 2")
    if not np.isclose(probs.sum(), 1.0, atol=1e-9) or (probs <= 0).any():
        raise ValidationError("probs must be positive and sum to 1")
    n = counts.sum()
    expected = n * probs
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = counts.size - 1
    # survival function of chi^2 via the regularized upper incomplete gamma
    return float(gammaincc(dof / 2.0, stat / 2.0))
