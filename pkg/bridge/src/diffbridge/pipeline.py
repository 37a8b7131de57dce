"""Generate and invert operations on top of an injected backend."""

from __future__ import annotations

import numpy as np

from .arrays import read_grid, write_grid
from .config import BridgeConfig


def generate(noise_path, image_path, config: BridgeConfig, backend,
             latent_path=None, prompt: str | None = None) -> np.ndarray:
    """Denoise a watermarked noise file into an image.

    Writes the image (PNG) and optionally the clean latent; returns the
    image array.  The backend decides the latent geometry; a mismatched
    noise file is rejected before any heavy work.
    """
    noise = read_grid(noise_path)
    if noise.ndim != 3:
        raise ValueError(f"{noise_path}: expected a 3-D latent grid, got {noise.shape}")
    expected = tuple(backend.latent_shape())
    if tuple(noise.shape) != expected:
        raise ValueError(
            f"{noise_path}: shape {tuple(noise.shape)} does not match the model "
            f"latent shape {expected}")
    clean = backend.generate_clean_latent(noise.astype(np.float32),
                                          config.prompt if prompt is None else prompt)
    if latent_path is not None:
        write_grid(clean, latent_path)
    image = backend.decode(clean)
    _save_image(image, image_path)
    return image


def invert(image_path, noise_path, config: BridgeConfig, backend) -> np.ndarray:
    """Recover the initial noise estimate from an image file."""
    image = _load_image(image_path)
    clean = backend.encode(image)
    recovered = backend.invert_latents(clean)
    write_grid(recovered, noise_path)
    return recovered


def _save_image(array: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path)


def _load_image(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
