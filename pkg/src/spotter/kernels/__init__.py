"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback. `SPOTTER_BACKEND=numpy|native` forces a
choice at import time, and `set_backend` switches at runtime (used by the
tests and the backend benchmark).
"""

import os

from . import numpy_backend

try:
    from . import native as _native_backend
except ImportError:
    _native_backend = None

_IMPLS = {"numpy": numpy_backend}
if _native_backend is not None:
    _IMPLS["native"] = _native_backend

_active_name = os.environ.get("SPOTTER_BACKEND", "").strip().lower()
if _active_name not in _IMPLS:
    _active_name = "native" if "native" in _IMPLS else "numpy"
_active = _IMPLS[_active_name]


def available_backends():
    return tuple(sorted(_IMPLS))


def get_backend():
    return _active_name


def set_backend(name):
    global _active, _active_name
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active_name = name
    _active = _IMPLS[name]


def conv2d_forward(x, k, bias):
    return _active.conv2d_forward(x, k, bias)


def conv2d_backward(x, k, gy, need_input_grad=True):
    return _active.conv2d_backward(x, k, gy, need_input_grad)


def maxpool2_forward(x):
    return _active.maxpool2_forward(x)


def maxpool2_backward(idx, gy):
    return _active.maxpool2_backward(idx, gy)
