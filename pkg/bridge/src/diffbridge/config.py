"""Bridge configuration, normally loaded from a YAML file.

Generation and inversion are deliberately asymmetric: images are
generated with the configured scheduler, prompt and guidance, while
inversion always runs the deterministic DDIM recurrence with an empty
prompt at guidance 1, which is the verifier's situation (no prompt
available).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import yaml

SCHEDULERS = ("dpmsolver", "ddim", "unipc", "pndm", "deis")


@dataclass(frozen=True)
class BridgeConfig:
    model_id: str = "stabilityai/stable-diffusion-2-1-base"
    scheduler: str = "dpmsolver"
    steps: int = 50
    guidance_scale: float = 7.5
    inversion_steps: int = 50
    inversion_guidance: float = 1.0
    prompt: str = ""
    device: str = "cuda"
    dtype: str = "float32"

    def __post_init__(self):
        if self.steps < 1 or self.inversion_steps < 1:
            raise ValueError("steps and inversion_steps must be >= 1")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"scheduler must be one of {SCHEDULERS}: {self.scheduler!r}")
        if self.guidance_scale < 0 or self.inversion_guidance < 0:
            raise ValueError("guidance scales must be >= 0")

    @classmethod
    def from_yaml(cls, path) -> "BridgeConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping of config keys")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**data)

    def to_yaml(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(asdict(self), fh, sort_keys=True)
