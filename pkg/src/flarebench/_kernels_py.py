"""NumPy implementations of the per-pixel kernel core.

This is the fallback used when the compiled extension is unavailable (or
when FLAREBENCH_KERNELS forces it). It must stay numerically identical to
``_kernels_cy``: same padding mode, same tap order, float64 accumulation.
The compiled module is built with FP contraction disabled for the same
reason.
"""

import numpy as np

BACKEND = "numpy"


def sepconv2d(plane, kernel):
    """Separable 2-D correlation of a (H, W) plane with one 1-D kernel.

    The kernel is applied along rows, then columns, with edge-mirroring
    ("symmetric") padding so that a normalized kernel preserves the image
    mean. Output is float64, same shape as the input.
    """
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    k = kernel.shape[0]
    if k == 1:
        return plane * (kernel[0] * kernel[0])
    h, w = plane.shape
    pad = k // 2
    padded = np.pad(plane, pad, mode="symmetric")
    # Row pass keeps the padded rows: they feed the column pass.
    tmp = kernel[0] * padded[:, 0:w]
    for t in range(1, k):
        tmp += kernel[t] * padded[:, t:t + w]
    out = kernel[0] * tmp[0:h, :]
    for t in range(1, k):
        out += kernel[t] * tmp[t:t + h, :]
    return out


def erode2d(mask, radius):
    """Binary erosion by a square element of side 2*radius+1.

    Any nonzero sample counts as foreground; output is {0, 1}. Pixels
    outside the frame count as background, so foreground touching the
    border erodes like any other boundary.
    """
    m = (np.asarray(mask) != 0).astype(np.uint8)
    if radius <= 0:
        return m
    h, w = m.shape
    k = 2 * radius + 1
    padded = np.pad(m, radius, mode="constant", constant_values=0)
    tmp = padded[:, 0:w].copy()
    for t in range(1, k):
        np.minimum(tmp, padded[:, t:t + w], out=tmp)
    out = tmp[0:h, :].copy()
    for t in range(1, k):
        np.minimum(out, tmp[t:t + h, :], out=out)
    return out


def dilate2d(mask, radius):
    """Binary dilation by a square element of side 2*radius+1.

    Any nonzero sample counts as foreground; output is {0, 1}.
    """
    m = (np.asarray(mask) != 0).astype(np.uint8)
    if radius <= 0:
        return m
    h, w = m.shape
    k = 2 * radius + 1
    padded = np.pad(m, radius, mode="constant", constant_values=0)
    tmp = padded[:, 0:w].copy()
    for t in range(1, k):
        np.maximum(tmp, padded[:, t:t + w], out=tmp)
    out = tmp[0:h, :].copy()
    for t in range(1, k):
        np.maximum(out, tmp[t:t + h, :], out=out)
    return out
