import numpy as np
import pytest

from latentmark import (CapacityError, CipherKey, ParameterError, TemplateSpec,
                        decrypt_watermark, expand_message, make_copyright_watermark,
                        make_localization_watermark, message_from_hex, message_to_hex,
                        seeded_uniforms)
from latentmark.cipher import keystream

KEY = CipherKey.from_hex("aa" * 32, "0102030405060708090a0b0c")


def random_message(seed, length=256):
    return (seeded_uniforms(seed, length) < 0.5).astype(np.uint8)


def test_expand_small_example():
    out = expand_message(np.array([1, 0, 1, 1], dtype=np.uint8), 10)
    assert out.tolist() == [1, 0, 1, 1, 1, 0, 1, 1, 1, 0]


def test_expand_identity_when_total_equals_length():
    m = random_message(1, 32)
    assert np.array_equal(expand_message(m, 32), m)


def test_expand_full_latent_replication():
    # 256 bits over 4*64*64 elements: exactly 64 copies of every bit
    m = random_message(2, 256)
    out = expand_message(m, 4 * 64 * 64)
    counts = np.bincount(np.arange(out.size) % 256, weights=(out == np.tile(m, 64)))
    assert out.size == 16384
    assert np.all(counts == 64)
    assert np.array_equal(out, np.tile(m, 64))


def test_expand_element_j_carries_bit_j_mod_length():
    m = random_message(3, 7)
    out = expand_message(m, 40)
    for j in (0, 6, 7, 13, 39):
        assert out[j] == m[j % 7]


def test_capacity_error():
    with pytest.raises(CapacityError):
        expand_message(random_message(4, 100), 99)


def test_encrypt_decrypt_round_trip():
    m = random_message(5)
    grid = make_copyright_watermark(m, KEY, (4, 16, 16))
    flat = decrypt_watermark(grid, KEY)
    assert np.array_equal(flat, expand_message(m, 1024))
    # majority over replicas with no channel recovers the message exactly
    votes = flat.reshape(-1, 256).sum(axis=0)
    assert np.array_equal((2 * votes > 4).astype(np.uint8), m)


def test_zero_message_yields_the_keystream():
    m = np.zeros(256, dtype=np.uint8)
    grid = make_copyright_watermark(m, KEY, (4, 64, 64))
    ks = np.unpackbits(np.frombuffer(keystream(KEY.key, KEY.nonce, 2048), dtype=np.uint8))
    assert np.array_equal(grid.ravel(), ks)
    assert abs(grid.mean() - 0.5) < 0.012  # 3 sigma at n = 16384


def test_whitening_per_position_frequency():
    ones = np.zeros(16384)
    for seed in range(100):
        grid = make_copyright_watermark(random_message(100 + seed), KEY, (4, 64, 64))
        ones += grid.ravel()
    freq = ones / 100.0
    positions = np.arange(0, 16384, 82)[:200]
    assert np.all(np.abs(freq[positions] - 0.5) <= 0.15)


def test_wrong_key_looks_uniform():
    m = random_message(6)
    grid = make_copyright_watermark(m, KEY, (4, 64, 64))
    accs = []
    for k in range(100):
        wrong = CipherKey.from_hex(f"{k:02x}" * 32, "0102030405060708090a0b0c")
        flat = decrypt_watermark(grid, wrong)
        votes = flat.reshape(-1, 256).sum(axis=0)
        decoded = (2 * votes > 64).astype(np.uint8)
        accs.append((decoded == m).mean())
    assert abs(np.mean(accs) - 0.5) < 0.05


def test_single_flip_locality():
    m = random_message(7)
    grid = make_copyright_watermark(m, KEY, (4, 8, 8))
    flipped = grid.copy()
    flipped[2, 3, 4] ^= 1
    diff = decrypt_watermark(flipped, KEY) != decrypt_watermark(grid, KEY)
    assert diff.sum() == 1
    assert np.flatnonzero(diff)[0] == np.ravel_multi_index((2, 3, 4), (4, 8, 8))


@pytest.mark.parametrize("theta,tol", [(0.5, 0.012), (0.3, 0.011)])
def test_template_zero_fraction(theta, tol):
    grid = make_localization_watermark(TemplateSpec(seed=11, theta=theta), (4, 64, 64))
    zero_fraction = 1.0 - grid.mean()
    assert abs(zero_fraction - theta) < tol


def test_template_deterministic():
    spec = TemplateSpec(seed=12, theta=0.5)
    a = make_localization_watermark(spec, (4, 32, 32))
    b = make_localization_watermark(spec, (4, 32, 32))
    assert np.array_equal(a, b)


def test_template_theta_domain():
    with pytest.raises(ParameterError):
        TemplateSpec(seed=1, theta=0.0)
    with pytest.raises(ParameterError):
        TemplateSpec(seed=1, theta=1.0)


def test_hex_round_trip():
    m = random_message(8)
    assert np.array_equal(message_from_hex(message_to_hex(m), 256), m)
