"""A small invertible stand-in backend for tests and dry runs.

The fake "model" maps noise to a clean latent with a fixed orthogonal
transform (axis flips plus a sign pattern) and quantizes images to 8
bits, so generate followed by invert reproduces the input up to image
quantization error.  It exercises every orchestration code path without
any ML dependency.
"""

from __future__ import annotations

import numpy as np


class FakeBackend:
    def __init__(self, shape=(4, 64, 64)):
        self.shape = tuple(shape)
        c, h, w = self.shape
        signs = np.ones((c, h, w), dtype=np.float32)
        signs[:, ::2, 1::2] *= -1.0
        self._signs = signs

    def latent_shape(self):
        return self.shape

    def generate_clean_latent(self, noise, prompt):
        return (noise[:, ::-1, :] * self._signs).astype(np.float32)

    def decode(self, clean_latent):
        c, h, w = clean_latent.shape
        flat = np.clip((clean_latent / 12.0 + 0.5) * 255.0, 0, 255)
        image = np.zeros((2 * h, 2 * w, 3), dtype=np.uint8)
        # pack the channels into 2x2 pixel blocks of the red plane
        image[0::2, 0::2, 0] = flat[0].round()
        image[0::2, 1::2, 0] = flat[1 % c].round()
        image[1::2, 0::2, 0] = flat[2 % c].round()
        image[1::2, 1::2, 0] = flat[3 % c].round()
        return image

    def encode(self, image):
        c, h, w = self.shape
        red = image[..., 0].astype(np.float32)
        flat = np.stack([red[0::2, 0::2], red[0::2, 1::2],
                         red[1::2, 0::2], red[1::2, 1::2]])[:c]
        return ((flat / 255.0 - 0.5) * 12.0).astype(np.float32)

    def invert_latents(self, clean_latent):
        return (clean_latent * self._signs)[:, ::-1, :].astype(np.float32)
