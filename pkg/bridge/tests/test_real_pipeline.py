"""Opt-in acceptance for the real diffusion pipeline.

Needs the 'pipeline' extra, a GPU, and BRIDGE_REAL_PIPELINE=1 in the
environment; it downloads the pinned model and runs generate + invert
round trips on 20 images.  Excluded from default test runs.
"""

import os

import numpy as np
import pytest

pytestmark = pytest.mark.skipif(
    os.environ.get("BRIDGE_REAL_PIPELINE") != "1",
    reason="set BRIDGE_REAL_PIPELINE=1 (needs GPU + pipeline extra) to run")


def test_clean_round_trip_accuracy(tmp_path):
    torch = pytest.importorskip("torch")
    pytest.importorskip("diffusers")
    latentmark = pytest.importorskip("latentmark")
    if not torch.cuda.is_available():
        pytest.skip("needs a GPU")

    from diffbridge import BridgeConfig, generate, invert, load_backend

    config = BridgeConfig()
    backend = load_backend(config)
    strategy = latentmark.IntervalStrategy(3, 0.5)
    key = latentmark.CipherKey.from_hex("c3" * 32)

    sign_accs, loc_errors = [], []
    for trial in range(20):
        message = (latentmark.seeded_uniforms(9_000 + trial, 256) < 0.5).astype(np.uint8)
        w_cop = latentmark.make_copyright_watermark(message, key, (4, 64, 64))
        w_loc = latentmark.make_localization_watermark(
            latentmark.TemplateSpec(seed=9_100 + trial), (4, 64, 64))
        noise = latentmark.sample_noise(w_cop, w_loc, strategy, 9_200 + trial)

        noise_path = tmp_path / f"noise_{trial}.npy"
        image_path = tmp_path / f"img_{trial}.png"
        recovered_path = tmp_path / f"rec_{trial}.npy"
        latentmark.write_array(noise, noise_path)
        generate(noise_path, image_path, config, backend)
        invert(image_path, recovered_path, config, backend)

        recovered = latentmark.read_array(recovered_path).astype(np.float64)
        rec_c, rec_l = latentmark.reconstruct_bits(recovered, strategy)
        sign_accs.append((rec_c == w_cop).mean())
        loc_errors.append((rec_l != w_loc).mean())

    assert np.mean(sign_accs) >= 0.99
    assert abs(np.mean(loc_errors) - 0.145) <= 0.03
