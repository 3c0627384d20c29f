"""Backend dispatch for the kernel core.

Two interchangeable backends provide the hot per-pixel loops (separable
convolution and binary morphology): a compiled extension and a NumPy
fallback with identical numerics. The compiled backend is preferred when
importable. ``FLAREBENCH_KERNELS=py|cy`` forces one at import time;
:func:`set_backend` switches at runtime (used by the benchmark and the
backend-equivalence tests).
"""

import os

from flarebench import _kernels_py
from flarebench.errors import ParameterError

_BACKENDS = {"numpy": _kernels_py}
try:
    from flarebench import _kernels_cy
    _BACKENDS["cython"] = _kernels_cy
except ImportError:
    _kernels_cy = None

_ALIASES = {
    "py": "numpy",
    "python": "numpy",
    "numpy": "numpy",
    "cy": "cython",
    "cython": "cython",
}


def available_backends():
    """Names of the backends importable in this installation."""
    return tuple(sorted(_BACKENDS))


def get_backend():
    """Name of the backend currently serving kernel calls."""
    return _active.BACKEND


def backend_module(name):
    """Return a backend module by name without activating it."""
    key = _ALIASES.get(str(name).strip().lower())
    if key is None or key not in _BACKENDS:
        raise ParameterError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        )
    return _BACKENDS[key]


def set_backend(name):
    global _active
    _active = backend_module(name)


def _initial_backend():
    forced = os.environ.get("FLAREBENCH_KERNELS", "").strip()
    if forced:
        return backend_module(forced)
    return _BACKENDS.get("cython", _kernels_py)


_active = _initial_backend()


def sepconv2d(plane, kernel):
    """Separable 2-D correlation, symmetric padding, float64 output."""
    return _active.sepconv2d(plane, kernel)


def erode2d(mask, radius):
    """Binary erosion by a (2r+1)-square element, zero border."""
    return _active.erode2d(mask, radius)


def dilate2d(mask, radius):
    """Binary dilation by a (2r+1)-square element, zero border."""
    return _active.dilate2d(mask, radius)
