"""Core array types, deterministic randomness and the array file format.

Grids are plain numpy arrays with a shared addressing convention:
C-order, indexed (channel, row, col) for 3-D grids and (row, col) for
2-D masks/maps.  Four kinds are used throughout the package:

* latent  -- float (C, H, W), finite values
* bits    -- uint8 (C, H, W), values in {0, 1}
* mask    -- uint8 (H, W), values in {0, 1}
* density -- float (H, W), values in [0, 1]

Files use the ubiquitous NPY "version 1.0" container (magic
``\\x93NUMPY``), restricted to dtypes ``<f4`` and ``|u1`` and C order, so
they interoperate with any numpy-based tool including the diffusion
bridge.

Randomness is pinned by specification, not platform: uniform streams
come from the Philox-4x64-10 counter-based generator keyed with the
64-bit seed, mapped to [0, 1) doubles as ``(raw64 >> 11) * 2**-53``.
Normal draws apply the package's standard-normal quantile to that
stream.  Identical seeds therefore produce bit-identical streams on any
architecture.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import FormatError, ValidationError

Seed = int

MAX_SEED = 2**64 - 1

_KINDS = ("latent", "bits", "mask", "density")


def _check_seed(seed: Seed) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= MAX_SEED:
        raise ValidationError(f"seed must be an integer in [0, 2^64): {seed!r}")
    return int(seed)


def derive_seed(seed: Seed, label: str) -> Seed:
    """Derive an independent child seed for the given purpose label.

    SHA-256 of the little-endian seed bytes followed by the UTF-8 label;
    the first 8 digest bytes, little-endian, become the child seed.
    """
    seed = _check_seed(seed)
    digest = hashlib.sha256(seed.to_bytes(8, "little") + label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seeded_uniforms(seed: Seed, n: int) -> np.ndarray:
    """Deterministic stream of ``n`` doubles uniform on [0, 1)."""
    seed = _check_seed(seed)
    if n < 0:
        raise ValidationError(f"count must be >= 0: {n}")
    if n == 0:
        return np.empty(0, dtype=np.float64)
    raw = np.random.Philox(key=seed).random_raw(n)
    return (raw >> np.uint64(11)) * np.float64(2.0**-53)


def seeded_normals(seed: Seed, n: int) -> np.ndarray:
    """Deterministic stream of ``n`` standard-normal doubles (inverse CDF)."""
    from .gauss import normal_quantile

    u = seeded_uniforms(seed, n)
    # u == 0 occurs with probability 2^-53 per draw; keep the quantile finite
    return normal_quantile(np.clip(u, 5e-324, 1.0 - 2**-53))


def validate_latent(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 3:
        raise ValidationError(f"latent grid must be 3-D (C,H,W), got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        raise ValidationError(f"latent grid must be floating point, got {arr.dtype}")
    if not np.isfinite(arr).all():
        raise ValidationError("latent grid contains non-finite values")
    return arr


def validate_bits(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 3:
        raise ValidationError(f"bit grid must be 3-D (C,H,W), got shape {arr.shape}")
    return _as_binary(arr)


def validate_mask(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValidationError(f"mask must be 2-D (H,W), got shape {arr.shape}")
    return _as_binary(arr)


def validate_density(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"density map must be 2-D (H,W), got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValidationError("density map values must lie in [0, 1]")
    return arr


def _as_binary(arr: np.ndarray) -> np.ndarray:
    vals = np.asarray(arr)
    if not np.isin(vals, (0, 1)).all():
        raise ValidationError("binary array contains values other than 0 and 1")
    return vals.astype(np.uint8)


def mask_area_ratio(mask: np.ndarray) -> float:
    mask = validate_mask(mask)
    return float(mask.sum()) / mask.size


def write_array(arr: np.ndarray, path) -> None:
    """Write a grid to ``path`` in the documented NPY subset.

    Float arrays are stored as ``<f4``, integer/bool arrays as ``|u1``.
    Writing the same array twice produces byte-identical files.
    """
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ValidationError(f"only 2-D and 3-D arrays are supported, got {arr.ndim}-D")
    if np.issubdtype(arr.dtype, np.floating):
        if not np.isfinite(arr).all():
            raise ValidationError("refusing to write non-finite values")
        out = np.ascontiguousarray(arr, dtype="<f4")
    elif np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
        out = np.ascontiguousarray(_as_binary(arr))
    else:
        raise ValidationError(f"unsupported dtype for the file format: {arr.dtype}")
    with open(path, "wb") as fh:
        np.save(fh, out, allow_pickle=False)


def read_array(path, expect: str | None = None) -> np.ndarray:
    """Read a grid written by :func:`write_array` (or any conforming NPY).

    The header decides the kind: ``<f4`` 3-D -> latent, ``|u1`` 3-D ->
    bits, ``|u1`` 2-D -> mask, ``<f4`` 2-D -> density.  ``expect`` may
    name one of those kinds to enforce it.
    """
    if expect is not None and expect not in _KINDS:
        raise ValidationError(f"unknown kind {expect!r}, expected one of {_KINDS}")
    try:
        arr = np.load(path, allow_pickle=False)
    except OSError:
        raise
    except Exception as exc:  # numpy raises ValueError on malformed headers
        raise FormatError(f"not a readable array file: {path} ({exc})") from exc
    dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == "=" else arr.dtype
    if dtype.str not in ("<f4", "|u1"):
        raise FormatError(f"unsupported dtype {arr.dtype.str!r} in {path} (need <f4 or |u1)")
    if arr.ndim not in (2, 3):
        raise FormatError(f"unsupported rank {arr.ndim} in {path} (need 2-D or 3-D)")
    kind = _infer_kind(arr)
    if expect is not None and expect != kind:
        raise ValidationError(f"{path}: file holds a {kind} array, expected {expect}")
    if kind == "bits":
        return validate_bits(arr)
    if kind == "mask":
        return validate_mask(arr)
    if kind == "density":
        return validate_density(arr)
    return validate_latent(arr)


def _infer_kind(arr: np.ndarray) -> str:
    if arr.dtype == np.uint8:
        return "bits" if arr.ndim == 3 else "mask"
    return "latent" if arr.ndim == 3 else "density"
