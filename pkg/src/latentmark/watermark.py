"""Construction of the two watermark bit layers.

The message watermark replicates an L-bit message across the whole
element count and whitens it with a ChaCha20 keystream, so the stored
bits look uniform regardless of the message.  The localization
watermark is a seeded Bernoulli template shared between embedder and
verifier through its seed.

Bit/byte packing is part of the external contract: bit vectors are
packed 8 bits per byte, most significant bit first (numpy's
``packbits``/``unpackbits`` convention), before XOR with the keystream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cipher
from .arrays import Seed, seeded_uniforms
from .errors import CapacityError, ParameterError, ValidationError


@dataclass(frozen=True)
class CipherKey:
    """256-bit secret key plus 96-bit public nonce for the whitening cipher."""

    key: bytes
    nonce: bytes = bytes(cipher.NONCE_BYTES)

    def __post_init__(self):
        if len(self.key) != cipher.KEY_BYTES:
            raise ValidationError(f"key must be {cipher.KEY_BYTES} bytes")
        if len(self.nonce) != cipher.NONCE_BYTES:
            raise ValidationError(f"nonce must be {cipher.NONCE_BYTES} bytes")

    @classmethod
    def from_hex(cls, key_hex: str, nonce_hex: str | None = None) -> "CipherKey":
        nonce = bytes.fromhex(nonce_hex) if nonce_hex else bytes(cipher.NONCE_BYTES)
        return cls(bytes.fromhex(key_hex), nonce)


@dataclass(frozen=True)
class TemplateSpec:
    """Seed and zero-probability of the localization template."""

    seed: Seed
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ParameterError(f"theta must lie in (0, 1): {self.theta}")


def as_message_bits(bits) -> np.ndarray:
    """Validate and return a 1-D uint8 vector of message bits."""
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("message must be a non-empty 1-D bit vector")
    if not np.isin(arr, (0, 1)).all():
        raise ValidationError("message bits must be 0 or 1")
    return arr.astype(np.uint8)


def message_from_hex(hex_str: str, length: int | None = None) -> np.ndarray:
    """Decode a hex string into bits (MSB first); truncate to ``length``."""
    data = bytes.fromhex(hex_str)
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if length is not None:
        if length > bits.size:
            raise ValidationError(f"hex string holds {bits.size} bits, need {length}")
        bits = bits[:length]
    return bits


def message_to_hex(bits) -> str:
    bits = as_message_bits(bits)
    return np.packbits(bits).tobytes().hex()


def expand_message(message, total: int) -> np.ndarray:
    """Tile the message over ``total`` elements; element j carries bit j mod L."""
    bits = as_message_bits(message)
    length = bits.size
    if length > total:
        raise CapacityError(f"message of {length} bits exceeds capacity {total}")
    reps = -(-total // length)  # ceil
    return np.tile(bits, reps)[:total]


def _grid_size(shape) -> tuple[int, int, int]:
    if len(shape) != 3 or any(int(s) <= 0 for s in shape):
        raise ValidationError(f"shape must be positive (C, H, W): {shape}")
    return tuple(int(s) for s in shape)


def make_copyright_watermark(message, key: CipherKey, shape) -> np.ndarray:
    """Expand the message over the grid and whiten it with the keystream."""
    c, h, w = _grid_size(shape)
    total = c * h * w
    expanded = expand_message(message, total)
    whitened = _xor_keystream_bits(expanded, key)
    return whitened.reshape(c, h, w)


def decrypt_watermark(grid: np.ndarray, key: CipherKey) -> np.ndarray:
    """Undo the whitening; returns the flat expanded-message estimate.

    A wrong key yields uniform-looking bits; that is not detected here.
    """
    grid = np.asarray(grid)
    if not np.isin(grid, (0, 1)).all():
        raise ValidationError("watermark grid must be binary")
    return _xor_keystream_bits(grid.astype(np.uint8).ravel(), key)


def _xor_keystream_bits(bits: np.ndarray, key: CipherKey) -> np.ndarray:
    packed = np.packbits(bits)
    ks = cipher.keystream(key.key, key.nonce, packed.size)
    mixed = packed ^ np.frombuffer(ks, dtype=np.uint8)
    return np.unpackbits(mixed)[: bits.size]


def make_localization_watermark(spec: TemplateSpec, shape) -> np.ndarray:
    """Seeded Bernoulli template: zero with probability theta."""
    c, h, w = _grid_size(shape)
    u = seeded_uniforms(spec.seed, c * h * w)
    return (u >= spec.theta).astype(np.uint8).reshape(c, h, w)
