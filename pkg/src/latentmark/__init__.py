"""Dual watermarking of latent-diffusion noise.

Embeds a whitened copyright message and a seeded localization template
jointly into standard-normal noise without changing its distribution,
reconstructs both from perturbed noise, localizes tampering from the
density of localization-bit disagreements, and decodes the message with
tampered replicas excluded.
"""

__version__ = "0.1.0"

from .arrays import (Seed, derive_seed, mask_area_ratio, read_array, seeded_normals,
                     seeded_uniforms, write_array)
from .channel import (ChannelSpec, DEFAULT_CLEAN_FLIP_RATE, apply_channel, blob_mask,
                      calibrate_sigma, crop_mask, drop_mask, logo_mask)
from .decoding import (Decision, DecisionThresholds, VoteTally, decide, detection_threshold,
                       plain_decode, tamper_aware_decode)
from .errors import (CalibrationError, CapacityError, FormatError, LatentmarkError,
                     ManifestError, MetricError, ParameterError, ValidationError)
from .gauss import normal_cdf, normal_pdf, normal_quantile
from .localize import DvrdConfig, density_map, detect, majority_smooth, upsample_mask, xor_map
from .metrics import auc, chi2_pvalue, dice, iou, ks_statistic
from .sampling import (FOUR_INTERVALS, IntervalStrategy, THREE_INTERVALS, boundaries,
                       interval_table, pair_probability, reconstruct_bits, sample_noise)
from .watermark import (CipherKey, TemplateSpec, as_message_bits, decrypt_watermark,
                        expand_message, make_copyright_watermark, make_localization_watermark,
                        message_from_hex, message_to_hex)

__all__ = [name for name in dir() if not name.startswith("_")]
