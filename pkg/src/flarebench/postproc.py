"""Output conditioning: light-source blend-back and input blending."""

import numpy as np

from flarebench.errors import ParameterError
from flarebench.imgcore import composite, gaussian_blur, require_same_shape
from flarebench.regionmask import extract_light_mask


def blend_back_light_source(
    pred: np.ndarray,
    input_img: np.ndarray,
    threshold: float = 0.99,
    se_radius: int = 1,
    feather: int = 0,
) -> np.ndarray:
    """Replace predicted pixels inside the input's light source.

    The emitter mask comes from saturation thresholding plus opening on
    the input; masked pixels are copied from the input bit-exactly, which
    also makes the operation idempotent. ``feather`` (an odd blur kernel
    size) optionally softens the mask edge for visual use; the bit-exact
    and idempotence guarantees hold only for the default hard mask.
    """
    require_same_shape(pred, input_img)
    mask = extract_light_mask(input_img, threshold=threshold, se_radius=se_radius)
    weights = mask.weights
    if feather and feather > 1:
        weights = gaussian_blur(weights, feather)
    return composite(input_img, pred, weights)


def blend_with_input(pred: np.ndarray, input_img: np.ndarray, alpha: float) -> np.ndarray:
    """Convex blend alpha*pred + (1-alpha)*input."""
    require_same_shape(pred, input_img)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    return (alpha * pred.astype(np.float64) + (1.0 - alpha) * input_img.astype(np.float64)).astype(
        pred.dtype
    )
