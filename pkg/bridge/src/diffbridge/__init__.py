"""Bridge between watermark noise files and a latent diffusion pipeline."""

__version__ = "0.1.0"

from .arrays import read_grid, write_grid
from .backend import BackendUnavailable, load_backend
from .config import BridgeConfig
from .pipeline import generate, invert

__all__ = ["BackendUnavailable", "BridgeConfig", "generate", "invert",
           "load_backend", "read_grid", "write_grid"]
