"""Train-free detection of densely disagreeing watermark regions.

Tampered image regions randomize the reconstructed localization bits,
so the XOR map between the template and its reconstruction disagrees at
rate 2*theta*(1-theta) inside tampering (0.5 at theta = 0.5) but only at
the channel's intrinsic rate outside.  The detector averages the XOR
map over channels, measures local disagreement densities with box
filters at several scales, binarizes each scale at a threshold placed
between the two regimes, and combines the scales by per-position
majority vote, followed by an optional 3x3 majority clean-up.

Box filters use shrinking-window normalization: a border cell's density
is the mean over the in-bounds part of its window, so edges are not
biased toward zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import validate_bits, validate_mask
from .errors import ParameterError, ValidationError

# midpoint between the tampered-region disagreement rate at theta = 0.5
# (0.5) and the reference channel's intrinsic rate (0.14513)
DEFAULT_TAU = 0.3226

DEFAULT_KERNELS = (3, 5, 9, 15)

_SMOOTHING_MODES = ("none", "majority3x3")


@dataclass(frozen=True)
class DvrdConfig:
    """Kernel sizes, density threshold, and mask smoothing mode."""

    kernel_sizes: tuple[int, ...] = DEFAULT_KERNELS
    tau: float = DEFAULT_TAU
    smoothing: str = "majority3x3"

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.kernel_sizes)
        if not sizes or any(k < 1 or k % 2 == 0 for k in sizes):
            raise ParameterError(f"kernel sizes must be odd positive integers: {sizes}")
        object.__setattr__(self, "kernel_sizes", sizes)
        if not 0.0 < self.tau < 1.0:
            raise ParameterError(f"tau must lie in (0, 1): {self.tau}")
        if self.smoothing not in _SMOOTHING_MODES:
            raise ParameterError(f"smoothing must be one of {_SMOOTHING_MODES}")

    def to_json(self) -> dict:
        return {"kernel_sizes": list(self.kernel_sizes), "tau": self.tau,
                "smoothing": self.smoothing}


def xor_map(w_loc: np.ndarray, w_loc_rec: np.ndarray) -> np.ndarray:
    """Element-wise disagreement between template and reconstruction."""
    a = validate_bits(w_loc)
    b = validate_bits(w_loc_rec)
    if a.shape != b.shape:
        raise ValidationError(f"grid shapes differ: {a.shape} vs {b.shape}")
    return np.bitwise_xor(a, b)


def _box_mean(plane: np.ndarray, kernel: int) -> np.ndarray:
    """Box mean with shrinking-window normalization at borders."""
    h, w = plane.shape
    r = kernel // 2
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = np.cumsum(np.cumsum(plane, axis=0), axis=1)
    y0 = np.clip(np.arange(h) - r, 0, h)[:, None]
    y1 = np.clip(np.arange(h) + r + 1, 0, h)[:, None]
    x0 = np.clip(np.arange(w) - r, 0, w)[None, :]
    x1 = np.clip(np.arange(w) + r + 1, 0, w)[None, :]
    sums = integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
    return sums / ((y1 - y0) * (x1 - x0))


def density_map(disagreement: np.ndarray, kernel: int) -> np.ndarray:
    """Channel-mean of the disagreement grid, box-averaged at one scale."""
    if kernel < 1 or kernel % 2 == 0:
        raise ParameterError(f"kernel must be odd and positive: {kernel}")
    grid = validate_bits(disagreement)
    plane = grid.mean(axis=0)
    return np.clip(_box_mean(plane, kernel), 0.0, 1.0)


def detect(disagreement: np.ndarray, cfg: DvrdConfig = DvrdConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Score map and binary tamper mask from a disagreement grid.

    The score is the mean of the per-scale density maps.  A position is
    flagged when at least half of the scales exceed ``tau`` there.
    """
    grid = validate_bits(disagreement)
    plane = grid.mean(axis=0)
    maps = [np.clip(_box_mean(plane, k), 0.0, 1.0) for k in cfg.kernel_sizes]
    score = np.mean(maps, axis=0)
    votes = np.sum([m > cfg.tau for m in maps], axis=0)
    mask = (2 * votes >= len(cfg.kernel_sizes)).astype(np.uint8)
    if cfg.smoothing == "majority3x3":
        mask = majority_smooth(mask)
    return score, mask


def majority_smooth(mask: np.ndarray) -> np.ndarray:
    """3x3 majority filter (shrinking window at borders)."""
    mask = validate_mask(mask)
    return (_box_mean(mask.astype(np.float64), 3) > 0.5).astype(np.uint8)


def upsample_mask(mask: np.ndarray, factor: int = 8) -> np.ndarray:
    """Nearest-neighbour upsampling: each cell becomes a factor x factor block."""
    mask = validate_mask(mask)
    if factor < 1:
        raise ParameterError(f"factor must be >= 1: {factor}")
    return np.repeat(np.repeat(mask, factor, axis=0), factor, axis=1)
