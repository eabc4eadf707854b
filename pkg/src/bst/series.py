"""Truncated power series arithmetic.

A :class:`Series` holds Taylor coefficients ``c[0..K]`` of a function of one
variable about 0; products and compositions drop every term above order K.
Only what the graph-jet extraction needs is implemented.
"""

from __future__ import annotations

import math

import numpy as np


class Series:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float).copy()

    @property
    def order(self) -> int:
        return len(self.c) - 1

    @classmethod
    def variable(cls, order: int, shift: float = 0.0) -> "Series":
        c = np.zeros(order + 1)
        c[0] = shift
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: float, order: int) -> "Series":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def cos_affine(cls, freq: float, phase: float, order: int) -> "Series":
        """Taylor series of ``cos(phase + freq*t)`` in t."""
        return cls(_trig_taylor(freq, math.cos(phase), math.sin(phase), order))

    @classmethod
    def sin_affine(cls, freq: float, phase: float, order: int) -> "Series":
        """Taylor series of ``sin(phase + freq*t)`` in t."""
        # sin(x) = cos(x - pi/2)
        return cls(_trig_taylor(freq, math.sin(phase), -math.cos(phase), order))

    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            if other.order != self.order:
                raise ValueError("series orders differ")
            return other
        return Series.constant(float(other), self.order)

    def __add__(self, other):
        return Series(self.c + self._coerce(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return Series(self.c - self._coerce(other).c)

    def __rsub__(self, other):
        return Series(self._coerce(other).c - self.c)

    def __neg__(self):
        return Series(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series(self.c * float(other))
        other = self._coerce(other)
        return Series(_conv(self.c, other.c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Series):
            return Series(self.c / float(other))
        return self * other.reciprocal()

    def reciprocal(self) -> "Series":
        a = self.c
        if a[0] == 0.0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, len(a)):
            b[n] = -math.fsum(a[i] * b[n - i] for i in range(1, n + 1)) / a[0]
        return Series(b)

    def compose(self, inner: "Series") -> "Series":
        """``self(inner(t))``; ``inner`` must have zero constant term."""
        if inner.c[0] != 0.0:
            raise ValueError("inner series must vanish at 0")
        out = Series.constant(self.c[-1], self.order)
        # Horner in the inner series
        for coef in self.c[-2::-1]:
            out = out * inner + coef
        return out

    def revert(self) -> "Series":
        """Compositional inverse of a series with c[0] = 0 and c[1] != 0.

        Solved one coefficient at a time, so the low-order coefficients do
        not depend on the truncation order.
        """
        if self.c[0] != 0.0 or self.c[1] == 0.0:
            raise ValueError("reversion needs c[0] = 0 and c[1] != 0")
        d = np.zeros_like(self.c)
        d[1] = 1.0 / self.c[1]
        for n in range(2, len(d)):
            e = self.compose(Series(d)).c[n]
            d[n] = -e / self.c[1]
        return Series(d)

    def derivative_series(self) -> "Series":
        """Derivative, padded with a zero so the order is unchanged."""
        k = np.arange(1, len(self.c))
        d = np.zeros_like(self.c)
        d[:-1] = self.c[1:] * k
        return Series(d)

    def derivatives(self) -> np.ndarray:
        """``f^(k)(0)`` for k = 0..K."""
        fact = np.array([math.factorial(i) for i in range(len(self.c))], dtype=float)
        return self.c * fact

    def truncate(self, order: int) -> "Series":
        return Series(self.c[: order + 1])

    def __repr__(self):
        return f"Series({self.c.tolist()!r})"


def _trig_taylor(freq, c0, s0, order):
    """Taylor coefficients of cos(phi + freq*t) given cos(phi), sin(phi)."""
    cycle = (c0, -s0, -c0, s0)
    out = np.empty(order + 1)
    term = 1.0
    for k in range(order + 1):
        out[k] = cycle[k % 4] * term
        term *= freq / (k + 1)
    return out


def _conv(a, b):
    # correctly rounded sums keep each coefficient independent of the truncation order
    n = len(a)
    return np.array([math.fsum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)])
