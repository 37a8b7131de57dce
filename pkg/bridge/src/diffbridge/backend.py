"""Backends that run the actual diffusion computation.

The bridge orchestrates four primitives: denoise initial noise into a
clean latent, decode a latent to an image, encode an image to a latent,
and run the deterministic inversion recurrence from a clean latent back
to noise.  ``DiffusersBackend`` implements them with a Hugging Face
pipeline (imported lazily; heavyweight and usually GPU-bound).  Tests
use the in-repo fake backend from ``diffbridge.testing`` instead.
"""

from __future__ import annotations

import numpy as np

from .config import BridgeConfig


class BackendUnavailable(RuntimeError):
    pass


def load_backend(config: BridgeConfig):
    """Instantiate the diffusers-based backend for this config."""
    try:
        import torch  # noqa: F401
        import diffusers  # noqa: F401
    except ImportError as exc:
        raise BackendUnavailable(
            "the real pipeline needs the 'pipeline' extra installed "
            "(torch, diffusers, transformers, pillow)") from exc
    return DiffusersBackend(config)


class DiffusersBackend:
    """Adapter over a StableDiffusionPipeline.

    Generation uses the configured scheduler and guidance; inversion
    runs the DDIM recurrence

        x_t = sqrt(at/ap) * x_{t-1}
              + (sqrt(1 - at) - sqrt(at * (1 - ap) / ap)) * eps(x_{t-1})

    with at/ap the cumulative alphas at the current/previous timestep,
    an empty prompt, and guidance 1.
    """

    def __init__(self, config: BridgeConfig):
        import torch
        from diffusers import (DDIMScheduler, DEISMultistepScheduler,
                               DPMSolverMultistepScheduler, PNDMScheduler,
                               StableDiffusionPipeline, UniPCMultistepScheduler)

        self.config = config
        dtype = torch.float16 if config.dtype == "float16" else torch.float32
        self.pipe = StableDiffusionPipeline.from_pretrained(
            config.model_id, torch_dtype=dtype, safety_checker=None)
        schedulers = {
            "dpmsolver": DPMSolverMultistepScheduler,
            "ddim": DDIMScheduler,
            "unipc": UniPCMultistepScheduler,
            "pndm": PNDMScheduler,
            "deis": DEISMultistepScheduler,
        }
        self.pipe.scheduler = schedulers[config.scheduler].from_config(
            self.pipe.scheduler.config)
        self.pipe = self.pipe.to(config.device)
        self.torch = torch

    def latent_shape(self) -> tuple[int, int, int]:
        channels = self.pipe.unet.config.in_channels
        size = self.pipe.unet.config.sample_size
        return (channels, size, size)

    def _prompt_embeddings(self, prompt: str):
        tokens = self.pipe.tokenizer(
            prompt, padding="max_length", truncation=True,
            max_length=self.pipe.tokenizer.model_max_length, return_tensors="pt")
        return self.pipe.text_encoder(tokens.input_ids.to(self.pipe.device))[0]

    def generate_clean_latent(self, noise: np.ndarray, prompt: str) -> np.ndarray:
        torch = self.torch
        latents = torch.from_numpy(np.ascontiguousarray(noise, dtype=np.float32))
        latents = latents[None].to(self.pipe.device, self.pipe.unet.dtype)
        with torch.no_grad():
            out = self.pipe(prompt=prompt,
                            num_inference_steps=self.config.steps,
                            guidance_scale=self.config.guidance_scale,
                            latents=latents,
                            output_type="latent")
        return out.images[0].float().cpu().numpy()

    def decode(self, clean_latent: np.ndarray) -> np.ndarray:
        torch = self.torch
        scale = self.pipe.vae.config.scaling_factor
        lat = torch.from_numpy(clean_latent[None]).to(self.pipe.device, self.pipe.vae.dtype)
        with torch.no_grad():
            image = self.pipe.vae.decode(lat / scale).sample[0]
        image = ((image / 2 + 0.5).clamp(0, 1) * 255).round()
        return image.permute(1, 2, 0).byte().cpu().numpy()

    def encode(self, image: np.ndarray) -> np.ndarray:
        torch = self.torch
        scale = self.pipe.vae.config.scaling_factor
        tensor = torch.from_numpy(image.astype(np.float32) / 255.0)
        tensor = (tensor.permute(2, 0, 1)[None].to(self.pipe.device, self.pipe.vae.dtype)
                  * 2 - 1)
        with torch.no_grad():
            latent = self.pipe.vae.encode(tensor).latent_dist.mode() * scale
        return latent[0].float().cpu().numpy()

    def invert_latents(self, clean_latent: np.ndarray) -> np.ndarray:
        torch = self.torch
        from diffusers import DDIMScheduler

        scheduler = DDIMScheduler.from_config(self.pipe.scheduler.config)
        scheduler.set_timesteps(self.config.inversion_steps)
        timesteps = list(reversed(scheduler.timesteps.tolist()))
        alphas = scheduler.alphas_cumprod.to(self.pipe.device)
        embeddings = self._prompt_embeddings("")

        x = torch.from_numpy(clean_latent[None]).to(self.pipe.device, self.pipe.unet.dtype)
        prev_t = None
        with torch.no_grad():
            for t in timesteps:
                at = alphas[t]
                ap = alphas[prev_t] if prev_t is not None else torch.ones_like(at)
                eps = self.pipe.unet(x, t, encoder_hidden_states=embeddings).sample
                x = (at / ap).sqrt() * x + ((1 - at).sqrt()
                                            - (at * (1 - ap) / ap).sqrt()) * eps
                prev_t = t
        return x[0].float().cpu().numpy()
