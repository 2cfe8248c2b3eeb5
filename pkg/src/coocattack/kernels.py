"""Interpolation kernels used to soften the Kronecker delta.

Both kernels are supported on the open interval (-1, 1), equal the delta at
integers and form a partition of unity: ``f(x) + f(x - 1) == 1`` on [0, 1].
"""

from __future__ import annotations

import numpy as np


class InterpKernel:
    """Base class. Subclasses implement ``value`` and ``deriv`` vectorised."""

    name = "base"

    def value(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def split(self, t):
        """Weights and slopes for the two bins bracketing a fractional part.

        ``t`` holds offsets into the lower bin, in [0, 1]. Returns
        ``(w_lo, w_hi, d_lo, d_hi)`` i.e. f(t), f(t-1), f'(t), f'(t-1).
        """
        return self.value(t), self.value(t - 1.0), self.deriv(t), self.deriv(t - 1.0)

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class Triangle(InterpKernel):
    name = "triangle"

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) < 1.0, 1.0 - np.abs(x), 0.0)

    def deriv(self, x):
        # one-sided slopes are averaged at the kinks -1, 0, 1
        x = np.asarray(x, dtype=np.float64)
        out = np.where((x > -1.0) & (x < 0.0), 1.0, 0.0)
        out = np.where((x > 0.0) & (x < 1.0), -1.0, out)
        out = np.where(x == -1.0, 0.5, out)
        out = np.where(x == 1.0, -0.5, out)
        return out


class RaisedCosine(InterpKernel):
    name = "raised_cosine"

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) < 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)

    def deriv(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) < 1.0, -0.5 * np.pi * np.sin(np.pi * x), 0.0)

    def split(self, t):
        # one cos/sin pair serves both bins; t == 1 only occurs at the top bin
        c = np.cos(np.pi * t)
        s = np.where(t == 1.0, 0.0, np.sin(np.pi * t))
        w_lo = 0.5 * (1.0 + c)
        w_hi = 0.5 * (1.0 - c)
        d = 0.5 * np.pi * s
        return w_lo, w_hi, -d, d


TRIANGLE = Triangle()
RAISED_COSINE = RaisedCosine()

_BY_NAME = {"triangle": TRIANGLE, "raised_cosine": RAISED_COSINE}


def get_kernel(kernel) -> InterpKernel:
    if isinstance(kernel, InterpKernel):
        return kernel
    try:
        return _BY_NAME[kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {sorted(_BY_NAME)}") from None


def kernel_eval(kernel, x: float) -> tuple[float, float]:
    """Return ``(f(x), f'(x))`` for a scalar ``x``."""
    k = get_kernel(kernel)
    return float(k.value(x)), float(k.deriv(x))
