"""PNG image input and output.

Decoding maps the integer code v to v/(2^bits - 1); encoding clamps to
[0, 1] and rounds half away from zero. 8-bit and 16-bit files are
supported; 16-bit is the synthesis output default so metric precision
survives the round trip.
"""

import os

import cv2
import numpy as np

from flarebench.errors import ParameterError
from flarebench.imgcore import clamp01, require_image

_MAXVAL = {8: 255, 16: 65535}
_DTYPE = {8: np.uint8, 16: np.uint16}


def load_image(path) -> np.ndarray:
    """Read a PNG as float32 in [0, 1].

    Color files come back as (H, W, 3) RGB, grayscale as (H, W). An alpha
    channel, if present, is dropped.
    """
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot read image file: {path}")
    if raw.dtype == np.uint8:
        scale = _MAXVAL[8]
    elif raw.dtype == np.uint16:
        scale = _MAXVAL[16]
    else:
        raise ParameterError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = raw[:, :, :3]
        elif raw.shape[2] == 2:  # gray + alpha
            raw = raw[:, :, 0]
        if raw.ndim == 3:
            raw = raw[:, :, ::-1]  # BGR -> RGB
    return np.ascontiguousarray(raw, dtype=np.float32) / np.float32(scale)


def _quantize(img, bits):
    if bits not in _MAXVAL:
        raise ParameterError(f"bit depth must be 8 or 16, got {bits}")
    maxval = _MAXVAL[bits]
    # floor(x*m + 0.5) rounds half away from zero for non-negative x;
    # np.round would round half to even.
    q = np.floor(clamp01(img).astype(np.float64) * maxval + 0.5)
    return q.astype(_DTYPE[bits])


def save_image(path, img: np.ndarray, bits: int = 16):
    """Write an image to PNG at the given bit depth."""
    require_image(img)
    q = _quantize(img, bits)
    if q.ndim == 3 and q.shape[2] == 3:
        q = q[:, :, ::-1]  # RGB -> BGR
    elif q.ndim == 3:
        q = q[:, :, 0]
    path = str(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    if not cv2.imwrite(path, np.ascontiguousarray(q)):
        raise OSError(f"cannot write image file: {path}")


def load_mask_weights(path) -> np.ndarray:
    """Read a mask PNG as an (H, W) float32 weight map in [0, 1].

    Color mask files reduce by max over channels (any-channel presence
    counts).
    """
    img = load_image(path)
    if img.ndim == 3:
        img = img.max(axis=2)
    return img


def save_mask_weights(path, weights: np.ndarray, bits: int = 8):
    """Write an (H, W) weight map as a single-channel PNG.

    Binary masks serialize as {0, 255}; soft masks on a linear scale.
    """
    w = np.asarray(weights, dtype=np.float32)
    if w.ndim != 2:
        raise ParameterError(f"mask weights must be 2-D, got shape {w.shape}")
    save_image(path, w, bits=bits)
