"""flarebench: nighttime lens-flare removal benchmarking toolkit.

Deterministic paired-data synthesis, region-mask extraction, the
region-masked PSNR scoring protocol, and reference loss kernels.
"""

__version__ = "0.1.0"

from flarebench.errors import (
    EmptyRegionError,
    FlareBenchError,
    ManifestError,
    ParameterError,
    ShapeError,
)
from flarebench.imgcore import (
    clamp01,
    composite,
    gaussian_blur,
    geometric_augment,
    to_encoded,
    to_linear,
    translate,
)
from flarebench.metrics import challenge_score, evaluate_run, mse, psnr, region_psnrs, ssim
from flarebench.regionmask import (
    RegionMask,
    extract_light_mask,
    flare_mask_from_flare_image,
    mask_complement,
    mask_or,
    soft_attention,
)
from flarebench.synth import (
    SamplePair,
    SampleParams,
    SynthConfig,
    compose_flares,
    sample_params,
    synthesize_dataset,
    synthesize_pair,
)

__all__ = [
    "__version__",
    "EmptyRegionError",
    "FlareBenchError",
    "ManifestError",
    "ParameterError",
    "ShapeError",
    "RegionMask",
    "SamplePair",
    "SampleParams",
    "SynthConfig",
    "challenge_score",
    "clamp01",
    "composite",
    "compose_flares",
    "evaluate_run",
    "extract_light_mask",
    "flare_mask_from_flare_image",
    "gaussian_blur",
    "geometric_augment",
    "mask_complement",
    "mask_or",
    "mse",
    "psnr",
    "region_psnrs",
    "sample_params",
    "soft_attention",
    "ssim",
    "synthesize_dataset",
    "synthesize_pair",
    "to_encoded",
    "to_linear",
    "translate",
]
