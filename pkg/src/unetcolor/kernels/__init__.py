"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles plain loops; the numpy backend goes through
im2col and BLAS matmuls. Select with the ``UNETCOLOR_BACKEND`` environment
variable ("numba", the default, or "numpy"). Resolution is lazy so that code
paths that never run a forward pass (e.g. ``unetcolor inspect``) never pay the
numba import.

Both backends implement the same contract (NCHW layout, float32 or float64):

- conv2d(x, w, stride, pad) and its input/weight gradients
- conv_transpose2x2(x, w) (kernel 2, stride 2 -- the only decoder config)
- maxpool3x3s2p1(x) returning values plus argmax indices for the backward

See ``benchmarks/kernel_bench.py`` for a speed comparison of the two.
"""

from __future__ import annotations

import os

_IMPL = None
_IMPL_NAME = None

_FUNCS = (
    "conv2d",
    "conv2d_dx",
    "conv2d_dw",
    "conv_transpose2x2",
    "conv_transpose2x2_dx",
    "conv_transpose2x2_dw",
    "maxpool3x3s2p1",
    "maxpool3x3s2p1_dx",
)


def _load_backend():
    global _IMPL, _IMPL_NAME
    if _IMPL is not None:
        return _IMPL
    name = os.environ.get("UNETCOLOR_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"UNETCOLOR_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba":
        try:
            from . import numba_kernels as impl
        except ImportError:
            from . import numpy_kernels as impl

            name = "numpy"
    else:
        from . import numpy_kernels as impl
    _IMPL, _IMPL_NAME = impl, name
    return impl


def active_backend() -> str:
    """Name of the backend that will serve kernel calls ('numba' or 'numpy')."""
    _load_backend()
    return _IMPL_NAME


def use_backend(name: str) -> str:
    """Switch the process-wide backend (for benchmarks and tests); returns the
    previously active name."""
    global _IMPL, _IMPL_NAME
    previous = active_backend()
    if name == "numba":
        from . import numba_kernels as impl
    elif name == "numpy":
        from . import numpy_kernels as impl
    else:
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    _IMPL, _IMPL_NAME = impl, name
    return previous


def _dispatch(fname):
    def call(*args, **kwargs):
        return getattr(_load_backend(), fname)(*args, **kwargs)

    call.__name__ = fname
    return call


conv2d = _dispatch("conv2d")
conv2d_dx = _dispatch("conv2d_dx")
conv2d_dw = _dispatch("conv2d_dw")
conv_transpose2x2 = _dispatch("conv_transpose2x2")
conv_transpose2x2_dx = _dispatch("conv_transpose2x2_dx")
conv_transpose2x2_dw = _dispatch("conv_transpose2x2_dw")
maxpool3x3s2p1 = _dispatch("maxpool3x3s2p1")
maxpool3x3s2p1_dx = _dispatch("maxpool3x3s2p1_dx")
