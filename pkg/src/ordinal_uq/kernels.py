"""Dispatch to the numba kernels when available, numpy otherwise."""

from . import _kernels_numpy as numpy_kernels
from ._accel import HAVE_NUMBA, backend

if HAVE_NUMBA:
    from . import _kernels_numba as numba_kernels

    _impl = numba_kernels
else:
    numba_kernels = None
    _impl = numpy_kernels

STE, TSTE, CK, HINGE = numpy_kernels.STE, numpy_kernels.TSTE, numpy_kernels.CK, numpy_kernels.HINGE
DEGENERATE_SIGMA = numpy_kernels.DEGENERATE_SIGMA

loss_grad = _impl.loss_grad
loss_only = _impl.loss_only
anchor_pi = _impl.anchor_pi
folded_sum = _impl.folded_sum
order_agreement = _impl.order_agreement
pi_values = numpy_kernels.pi_values

__all__ = [
    "HAVE_NUMBA",
    "backend",
    "numpy_kernels",
    "numba_kernels",
    "loss_grad",
    "loss_only",
    "anchor_pi",
    "folded_sum",
    "order_agreement",
    "pi_values",
]
