"""Region masks: extraction, algebra, and attention weighting.

A :class:`RegionMask` is an (H, W) weight map in [0, 1] tagged with the
role it annotates (light source, glare, streak, ...). Binary masks hold
only {0, 1}. Masks are immutable values like images.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from flarebench import kernels
from flarebench.errors import ParameterError, ShapeError
from flarebench.imgcore import require_image

ROLES = ("light_source", "glare", "streak", "flare", "non_flare", "custom")

# Complement maps a region to its named opposite where one exists.
_COMPLEMENT_ROLE = {"flare": "non_flare", "non_flare": "flare"}


@dataclass(frozen=True)
class RegionMask:
    """Per-pixel weight map with a role tag."""

    weights: np.ndarray
    role: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float32)
        if w.ndim != 2:
            raise ShapeError(f"mask weights must be 2-D, got shape {w.shape}")
        if w.size and (w.min() < 0.0 or w.max() > 1.0):
            raise ParameterError("mask weights must lie in [0, 1]")
        object.__setattr__(self, "weights", w)

    @property
    def shape(self):
        return self.weights.shape

    def is_binary(self) -> bool:
        return bool(np.all((self.weights == 0.0) | (self.weights == 1.0)))

    def binarize(self, threshold: float = 0.5) -> "RegionMask":
        """Weights above the threshold become 1, the rest 0."""
        return replace(self, weights=(self.weights > threshold).astype(np.float32))


def as_weights(mask) -> np.ndarray:
    """Coerce a RegionMask or bare array to an (H, W) float weight map."""
    w = np.asarray(getattr(mask, "weights", mask), dtype=np.float32)
    if w.ndim != 2:
        raise ShapeError(f"mask weights must be 2-D, got shape {w.shape}")
    return w


def opening(binary: np.ndarray, se_radius: int) -> np.ndarray:
    """Morphological opening (erosion then dilation) with a square element.

    The element has side 2*se_radius+1; radius 0 is the identity. Removes
    foreground features smaller than the element.
    """
    se_radius = int(se_radius)
    if se_radius < 0:
        raise ParameterError(f"structuring element radius must be >= 0, got {se_radius}")
    m = np.asarray(binary)
    b = (m > 0).astype(np.uint8) if m.dtype != np.uint8 else m
    return kernels.dilate2d(kernels.erode2d(b, se_radius), se_radius)


def extract_light_mask(
    img: np.ndarray,
    threshold: float = 0.99,
    se_radius: int = 1,
    reduce: str = "min",
) -> RegionMask:
    """Detect saturated emitter pixels and clean them up by opening.

    A pixel is saturated when its channel reduction (default: min over
    channels, since a light source clips every channel) reaches the
    threshold. The opening then drops isolated speckles smaller than the
    structuring element.
    """
    require_image(img)
    threshold = float(threshold)
    if not 0.0 < threshold <= 1.0:
        raise ParameterError(f"saturation threshold must be in (0, 1], got {threshold}")
    lum = _channel_reduce(img, reduce)
    binary = (lum >= threshold).astype(np.uint8)
    opened = opening(binary, se_radius)
    return RegionMask(opened.astype(np.float32), role="light_source")


def flare_mask_from_flare_image(flare: np.ndarray, tau: float = 0.02) -> RegionMask:
    """Threshold a flare-only image into an inside-flare mask.

    Any channel at or above tau marks the pixel as flare-covered.
    """
    require_image(flare)
    lum = _channel_reduce(flare, "max")
    return RegionMask((lum >= float(tau)).astype(np.float32), role="flare")


def _channel_reduce(img, how):
    if img.ndim == 2:
        return img
    if how == "min":
        return img.min(axis=2)
    if how == "max":
        return img.max(axis=2)
    raise ParameterError(f"channel reduction must be 'min' or 'max', got {how!r}")


def mask_or(a, b) -> RegionMask:
    """Per-pixel maximum (logic OR on binary masks)."""
    wa, wb = as_weights(a), as_weights(b)
    if wa.shape != wb.shape:
        raise ShapeError(f"mask shapes differ: {wa.shape} vs {wb.shape}")
    role_a = getattr(a, "role", "custom")
    role_b = getattr(b, "role", "custom")
    return RegionMask(np.maximum(wa, wb), role=role_a if role_a == role_b else "custom")


def mask_complement(a) -> RegionMask:
    """Per-pixel 1 - w."""
    w = as_weights(a)
    role = _COMPLEMENT_ROLE.get(getattr(a, "role", "custom"), "custom")
    return RegionMask(1.0 - w, role=role)


def soft_attention(mask, gain: float) -> RegionMask:
    """Logistic attention map: w' = sigmoid(gain * (w - 0.5)).

    Strictly increasing in w, so pixel ordering is preserved; w = 0.5 maps
    to 0.5 for any gain.
    """
    gain = float(gain)
    if not gain > 0.0:
        raise ParameterError(f"attention gain must be positive, got {gain}")
    w = as_weights(mask).astype(np.float64)
    soft = 1.0 / (1.0 + np.exp(-gain * (w - 0.5)))
    return RegionMask(soft.astype(np.float32), role=getattr(mask, "role", "custom"))
