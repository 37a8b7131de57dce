"""Statistical model of the generate/invert round trip.

The real channel (denoise, VAE decode, tampering, VAE encode, inversion
back to noise) is replaced by two effects at latent resolution:

* untampered positions receive additive Gaussian noise ``sigma * eta``,
  which concentrates bit errors near interval boundaries the way
  inversion errors do;
* tampered positions (all channels of every masked cell) are replaced
  by fresh standard-normal draws independent of the input, so a
  reconstructed localization bit is 0 with probability theta and
  disagrees with the template with probability 2*theta*(1-theta).

``calibrate_sigma`` finds the noise scale that reproduces a measured
bit-error rate, e.g. the 0.14513 localization flip rate of the default
operating point.  For the sign bit the closed form
``P(flip) = arctan(sigma) / pi`` exists and is used in tests to
cross-check the Monte-Carlo machinery.

Masks are generated at latent resolution (H, W) and broadcast over the
channel axis; image-space area ratios carry over 1:1 because the VAE
downsamples uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arrays import Seed, derive_seed, seeded_normals, seeded_uniforms, validate_latent, validate_mask
from .errors import CalibrationError, ParameterError, ValidationError
from .sampling import IntervalStrategy, reconstruct_bits, sample_noise

DEFAULT_CLEAN_FLIP_RATE = 0.14513  # localization flip rate of the reference channel


@dataclass(frozen=True)
class ChannelSpec:
    """Additive noise scale, optional tamper mask and the channel seed."""

    sigma: float
    tamper_mask: Optional[np.ndarray] = None
    seed: Seed = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ParameterError(f"sigma must be finite and >= 0: {self.sigma}")
        if self.tamper_mask is not None:
            object.__setattr__(self, "tamper_mask", validate_mask(self.tamper_mask))

    def to_json(self, mask_path: str | None = None) -> dict:
        return {"sigma": self.sigma, "mask": mask_path, "seed": self.seed}


def apply_channel(z: np.ndarray, spec: ChannelSpec) -> np.ndarray:
    """Perturb a latent grid according to the channel model."""
    z = validate_latent(z).astype(np.float64)
    c, h, w = z.shape
    noise = seeded_normals(derive_seed(spec.seed, "clean-noise"), z.size).reshape(z.shape)
    out = z + spec.sigma * noise
    if spec.tamper_mask is not None:
        mask = spec.tamper_mask
        if mask.shape != (h, w):
            raise ValidationError(f"mask shape {mask.shape} does not match latent {(h, w)}")
        if mask.any():
            fresh = seeded_normals(derive_seed(spec.seed, "tamper-redraw"), z.size).reshape(z.shape)
            sel = np.broadcast_to(mask.astype(bool), z.shape)
            out = np.where(sel, fresh, out)
    return out


def calibrate_sigma(target: float, strategy: IntervalStrategy, tol: float = 0.003, *,
                    bit: str = "loc", seed: Seed = 2024, samples: int = 1_000_000,
                    sigma_hi: float = 8.0) -> float:
    """Find sigma whose Monte-Carlo clean-channel bit error matches ``target``.

    ``bit`` selects which reconstructed bit is scored: ``"loc"`` for the
    localization bit, ``"sign"`` for the message bit.  Common random
    numbers are reused across sigma evaluations, so the bisection sees a
    smooth, deterministic error curve.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if bit not in ("loc", "sign"):
        raise ParameterError(f"bit must be 'loc' or 'sign': {bit!r}")
    theta = strategy.theta
    ceiling = 2.0 * theta * (1.0 - theta) if bit == "loc" else 0.5
    if not 0.0 < target < ceiling:
        raise CalibrationError(
            f"target {target} outside the reachable range (0, {ceiling:.4f}) for bit={bit!r}")

    err = _make_error_fn(strategy, bit, seed, samples)
    lo, hi = 0.0, 0.25
    while err(hi) < target:
        hi *= 2.0
        if hi > sigma_hi:
            raise CalibrationError(
                f"target {target} not reached below sigma={sigma_hi} "
                f"(error there: {err(sigma_hi):.5f})")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        e = err(mid)
        if abs(e - target) <= tol / 4.0:
            return mid
        if e < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    sigma = 0.5 * (lo + hi)
    if abs(err(sigma) - target) > tol:
        raise CalibrationError(f"bisection stalled at sigma={sigma:.5f}")
    return sigma


def _make_error_fn(strategy, bit, seed, samples):
    # a 1 x 1 x samples "grid" keeps the whole pipeline on real code paths;
    # the fixed channel seed reuses one noise stream across sigma values
    shape = (1, 1, samples)
    u_pairs = seeded_uniforms(derive_seed(seed, "calibration-bits"), 2 * samples)
    w_c = (u_pairs[:samples] < 0.5).astype(np.uint8).reshape(shape)
    w_l = (u_pairs[samples:] >= strategy.theta).astype(np.uint8).reshape(shape)
    z = sample_noise(w_c, w_l, strategy, derive_seed(seed, "calibration-z"))
    channel_seed = derive_seed(seed, "calibration-channel")
    ref = w_l if bit == "loc" else w_c

    def err(sigma: float) -> float:
        perturbed = apply_channel(z, ChannelSpec(sigma=sigma, seed=channel_seed))
        rec_c, rec_l = reconstruct_bits(perturbed, strategy)
        rec = rec_l if bit == "loc" else rec_c
        return float((rec != ref).mean())

    return err


def _check_hw(shape) -> tuple[int, int]:
    if len(shape) != 2 or any(int(s) <= 0 for s in shape):
        raise ValidationError(f"mask shape must be positive (H, W): {shape}")
    return int(shape[0]), int(shape[1])


def _check_ratio(ratio: float) -> float:
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must lie in (0, 1): {ratio}")
    return float(ratio)


def drop_mask(shape, ratio: float, seed: Seed) -> np.ndarray:
    """Scattered per-cell tampering: exactly round(ratio*H*W) cells, iid positions."""
    h, w = _check_hw(shape)
    ratio = _check_ratio(ratio)
    count = int(round(ratio * h * w))
    order = np.argsort(seeded_uniforms(seed, h * w), kind="stable")
    mask = np.zeros(h * w, dtype=np.uint8)
    mask[order[:count]] = 1
    return mask.reshape(h, w)


def crop_mask(shape, ratio: float, seed: Seed) -> np.ndarray:
    """Cropping: everything outside one kept axis-aligned rectangle is tampered."""
    h, w = _check_hw(shape)
    ratio = _check_ratio(ratio)
    keep_area = (1.0 - ratio) * h * w
    u = seeded_uniforms(seed, 400)
    for i in range(0, u.size, 4):
        rw = max(1, min(w, int(round(np.sqrt(keep_area) * np.exp((u[i] - 0.5) * 1.2)))))
        rh = max(1, min(h, int(round(keep_area / rw))))
        achieved = 1.0 - (rw * rh) / (h * w)
        if abs(achieved - ratio) <= 0.02:
            y = int(u[i + 1] * (h - rh + 1))
            x = int(u[i + 2] * (w - rw + 1))
            mask = np.ones((h, w), dtype=np.uint8)
            mask[y:y + rh, x:x + rw] = 0
            return mask
    raise ParameterError(f"no kept rectangle achieves ratio {ratio} within 0.02")


def logo_mask(shape, count: int, ratio: float, seed: Seed) -> np.ndarray:
    """``count`` non-overlapping rectangles totalling the requested area."""
    h, w = _check_hw(shape)
    ratio = _check_ratio(ratio)
    if count < 1:
        raise ParameterError(f"count must be >= 1: {count}")
    per_rect = ratio * h * w / count
    if per_rect < 9:
        raise ParameterError(f"ratio {ratio} too small for {count} rectangles")
    u = iter(seeded_uniforms(seed, 40_000))
    for _ in range(60):
        mask = np.zeros((h, w), dtype=np.uint8)
        ok = True
        for _ in range(count):
            placed = False
            for _ in range(600):
                aspect = np.exp((next(u) - 0.5) * 0.8)
                rw = int(np.clip(round(np.sqrt(per_rect) * aspect), 3, w))
                rh = int(np.clip(round(per_rect / rw), 3, h))
                y = int(next(u) * (h - rh + 1))
                x = int(next(u) * (w - rw + 1))
                if not mask[y:y + rh, x:x + rw].any():
                    mask[y:y + rh, x:x + rw] = 1
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if ok and abs(mask.mean() - ratio) <= 0.02:
            return mask
    raise ParameterError(f"cannot place {count} rectangles at total ratio {ratio}")


def blob_mask(shape, ratio: float, smoothness: float = 8.0, seed: Seed = 0) -> np.ndarray:
    """Inpainting-style blobs: smoothed seeded noise thresholded at the ratio quantile."""
    h, w = _check_hw(shape)
    ratio = _check_ratio(ratio)
    if smoothness <= 0:
        raise ParameterError(f"smoothness must be positive: {smoothness}")
    field = seeded_normals(seed, h * w).reshape(h, w)
    yy = np.minimum(np.arange(h), h - np.arange(h))[:, None]
    xx = np.minimum(np.arange(w), w - np.arange(w))[None, :]
    kernel = np.exp(-0.5 * (yy**2 + xx**2) / smoothness**2)
    kernel /= kernel.sum()
    smooth = np.real(np.fft.ifft2(np.fft.fft2(field) * np.fft.fft2(kernel)))
    threshold = np.quantile(smooth, 1.0 - ratio)
    return (smooth >= threshold).astype(np.uint8)
