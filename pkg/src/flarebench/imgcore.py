"""Core image operations: gamma transfer, blur, shifts, compositing.

Images are NumPy float arrays, shape (H, W) or (H, W, C) with C in {1, 3},
nominal sample range [0, 1]. Every function here is pure: inputs are never
mutated and a fresh array is always returned, so values can be shared
freely between threads.
"""

import numpy as np

from flarebench import kernels
from flarebench.errors import ParameterError, ShapeError


def require_image(img) -> np.ndarray:
    """Validate an image array and return it unchanged.

    Accepts (H, W) single-plane or (H, W, C) arrays with 1 or 3 channels
    and a floating dtype.
    """
    if not isinstance(img, np.ndarray):
        raise ParameterError(f"image must be a numpy array, got {type(img).__name__}")
    if img.ndim not in (2, 3):
        raise ShapeError(f"image must be 2-D or 3-D, got shape {img.shape}")
    if img.ndim == 3 and img.shape[2] not in (1, 3):
        raise ShapeError(f"image must have 1 or 3 channels, got {img.shape[2]}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"image extent must be at least 1x1, got {img.shape}")
    if not np.issubdtype(img.dtype, np.floating):
        raise ParameterError(f"image samples must be floating point, got {img.dtype}")
    return img


def require_same_shape(*arrays):
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        raise ShapeError(f"operands must share dimensions, got {sorted(shapes)}")


def _planes(img):
    """Iterate (H, W) views of an image, 2-D or 3-D."""
    if img.ndim == 2:
        yield img
    else:
        for c in range(img.shape[2]):
            yield img[:, :, c]


def clamp01(img: np.ndarray) -> np.ndarray:
    """Clip every sample to [0, 1]."""
    require_image(img)
    return np.clip(img, 0.0, 1.0)


def _check_gamma(theta):
    theta = float(theta)
    if not theta > 0.0:
        raise ParameterError(f"gamma exponent must be positive, got {theta}")
    return theta


def to_linear(img: np.ndarray, theta: float) -> np.ndarray:
    """Map display-encoded samples to linear light: x -> x**theta.

    theta == 1 is the exact identity (a copy is returned). Computation runs
    in float64 and is cast back to the input dtype.
    """
    require_image(img)
    theta = _check_gamma(theta)
    if theta == 1.0:
        return img.copy()
    out = np.power(img.astype(np.float64, copy=False), theta)
    return out.astype(img.dtype, copy=False)


def to_encoded(img: np.ndarray, theta: float) -> np.ndarray:
    """Inverse of :func:`to_linear`: x -> x**(1/theta)."""
    require_image(img)
    theta = _check_gamma(theta)
    if theta == 1.0:
        return img.copy()
    out = np.power(img.astype(np.float64, copy=False), 1.0 / theta)
    return out.astype(img.dtype, copy=False)


def gaussian_kernel1d(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled on integer offsets around the center."""
    if size < 1:
        raise ParameterError(f"kernel size must be positive, got {size}")
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-0.5 * (offsets / float(sigma)) ** 2)
    return w / w.sum()


def gaussian_blur(img: np.ndarray, kernel_size: int) -> np.ndarray:
    """Separable Gaussian blur with edge-mirroring padding.

    sigma is kernel_size/6 so the taps span +-3 sigma. kernel_size must be
    odd and positive; size 1 is the identity.
    """
    require_image(img)
    kernel_size = int(kernel_size)
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ParameterError(f"kernel size must be odd and positive, got {kernel_size}")
    if kernel_size == 1:
        return img.copy()
    kern = gaussian_kernel1d(kernel_size, kernel_size / 6.0)
    out = np.empty_like(img, dtype=np.float64)
    for src, dst in zip(_planes(img), _planes(out)):
        dst[...] = kernels.sepconv2d(src, kern)
    return out.astype(img.dtype, copy=False)


def translate(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Shift content by (dx, dy) pixels, zero-filling vacated samples.

    dx moves content along the width axis, dy along the height axis. A
    shift at or beyond the image extent yields an all-zero image (additive
    flare convention: zero means no flare).
    """
    require_image(img)
    dx, dy = int(dx), int(dy)
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src_y = slice(max(0, -dy), min(h, h - dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_y = slice(max(0, dy), max(0, dy) + (src_y.stop - src_y.start))
    dst_x = slice(max(0, dx), max(0, dx) + (src_x.stop - src_x.start))
    out[dst_y, dst_x] = img[src_y, src_x]
    return out


def composite(a: np.ndarray, b: np.ndarray, mask) -> np.ndarray:
    """Per-pixel convex blend: a*mask + b*(1-mask).

    The mask is an (H, W) weight map (or anything with a ``.weights``
    attribute holding one) broadcast across channels.
    """
    require_image(a)
    require_image(b)
    require_same_shape(a, b)
    w = np.asarray(getattr(mask, "weights", mask), dtype=a.dtype)
    if w.shape != a.shape[:2]:
        raise ShapeError(f"mask shape {w.shape} does not match image {a.shape[:2]}")
    if a.ndim == 3:
        w = w[:, :, None]
    return a * w + b * (1.0 - w)


def hflip(img: np.ndarray) -> np.ndarray:
    require_image(img)
    return img[:, ::-1].copy()


def vflip(img: np.ndarray) -> np.ndarray:
    require_image(img)
    return img[::-1].copy()


def rot90(img: np.ndarray) -> np.ndarray:
    """Rotate 90 degrees counterclockwise: out[i, j] = in[j, W-1-i]."""
    require_image(img)
    return np.rot90(img, 1, axes=(0, 1)).copy()


def rot180(img: np.ndarray) -> np.ndarray:
    require_image(img)
    return np.rot90(img, 2, axes=(0, 1)).copy()


def rot270(img: np.ndarray) -> np.ndarray:
    require_image(img)
    return np.rot90(img, 3, axes=(0, 1)).copy()


def crop(img: np.ndarray, x: int, y: int, w: int, h: int) -> np.ndarray:
    """Extract the sub-rectangle with top-left corner (x, y) and size w x h."""
    require_image(img)
    x, y, w, h = int(x), int(y), int(w), int(h)
    if w < 1 or h < 1:
        raise ParameterError(f"crop size must be positive, got {w}x{h}")
    if x < 0 or y < 0 or x + w > img.shape[1] or y + h > img.shape[0]:
        raise ParameterError(
            f"crop window ({x},{y},{w},{h}) exceeds image extent "
            f"{img.shape[1]}x{img.shape[0]}"
        )
    return img[y:y + h, x:x + w].copy()


_GEOMETRIC_OPS = {
    "rot90": rot90,
    "rot180": rot180,
    "rot270": rot270,
    "hflip": hflip,
    "vflip": vflip,
}


def geometric_augment(img: np.ndarray, op: str, **kwargs) -> np.ndarray:
    """Apply a named geometric op: rot90/rot180/rot270/hflip/vflip/crop.

    ``crop`` takes keyword arguments x, y, w, h.
    """
    if op == "crop":
        return crop(img, **kwargs)
    fn = _GEOMETRIC_OPS.get(op)
    if fn is None:
        raise ParameterError(
            f"unknown geometric op {op!r}; expected one of "
            f"{sorted(_GEOMETRIC_OPS) + ['crop']}"
        )
    if kwargs:
        raise ParameterError(f"{op} takes no keyword arguments")
    return fn(img)
