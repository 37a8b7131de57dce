"""ChaCha20 keystream generation (IETF variant, 96-bit nonce).

Pure-Python implementation of the block function from RFC 8439 used as
a keystream generator: the block counter is 32 bits and starts at 0
unless stated otherwise.  The package only ever XORs data against the
keystream, so encryption and decryption are the same operation.

This code favours clarity over speed; watermark payloads are a few KiB,
for which this is plenty.
"""

from __future__ import annotations

import struct

KEY_BYTES = 32
NONCE_BYTES = 12

_CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)
_QUARTER_ROUNDS = (
    (0, 4, 8, 12), (1, 5, 9, 13), (2, 6, 10, 14), (3, 7, 11, 15),
    (0, 5, 10, 15), (1, 6, 11, 12), (2, 7, 8, 13), (3, 4, 9, 14),
)
_MASK32 = 0xFFFFFFFF


def _rotl32(v: int, bits: int) -> int:
    return ((v << bits) & _MASK32) | (v >> (32 - bits))


def chacha20_block(key: bytes, counter: int, nonce: bytes) -> bytes:
    """64-byte output of the ChaCha20 block function."""
    if len(key) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes, got {len(key)}")
    if len(nonce) != NONCE_BYTES:
        raise ValueError(f"nonce must be {NONCE_BYTES} bytes, got {len(nonce)}")
    if not 0 <= counter < 2**32:
        raise ValueError("block counter must fit in 32 bits")

    init = list(_CONSTANTS)
    init += list(struct.unpack("<8L", key))
    init.append(counter)
    init += list(struct.unpack("<3L", nonce))

    state = list(init)
    for _ in range(10):
        for a, b, c, d in _QUARTER_ROUNDS:
            state[a] = (state[a] + state[b]) & _MASK32
            state[d] = _rotl32(state[d] ^ state[a], 16)
            state[c] = (state[c] + state[d]) & _MASK32
            state[b] = _rotl32(state[b] ^ state[c], 12)
            state[a] = (state[a] + state[b]) & _MASK32
            state[d] = _rotl32(state[d] ^ state[a], 8)
            state[c] = (state[c] + state[d]) & _MASK32
            state[b] = _rotl32(state[b] ^ state[c], 7)
    return struct.pack("<16L", *((s + i) & _MASK32 for s, i in zip(state, init)))


def keystream(key: bytes, nonce: bytes, nbytes: int, counter: int = 0) -> bytes:
    """First ``nbytes`` of the keystream starting at ``counter``."""
    if nbytes < 0:
        raise ValueError("nbytes must be >= 0")
    blocks = []
    produced = 0
    while produced < nbytes:
        blocks.append(chacha20_block(key, counter, nonce))
        counter += 1
        produced += 64
    return b"".join(blocks)[:nbytes]


def xor_with_keystream(data: bytes, key: bytes, nonce: bytes, counter: int = 0) -> bytes:
    """XOR ``data`` with the keystream; self-inverse."""
    ks = keystream(key, nonce, len(data), counter)
    return bytes(a ^ b for a, b in zip(data, ks))
