"""Forward-mode dual numbers.

Components may themselves be duals, which is how second directional
derivatives are taken: seed the outer part along one direction and the
inner part along another.
"""
from __future__ import annotations

from typing import Any

import numpy as np


class Dual:
    """Value ``p`` with tangent ``d``; ``p`` and ``d`` may be nested duals."""

    __slots__ = ("p", "d")
    # numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, primal: Any, tangent: Any = 0.0):
        self.p = primal
        self.d = tangent

    @staticmethod
    def _coerce(other: Any) -> "Dual":
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def __repr__(self) -> str:
        return f"Dual({self.p!r}, {self.d!r})"

    def __add__(self, other: Any) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.p + o.p, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.p - o.p, self.d - o.d)

    def __rsub__(self, other: Any) -> "Dual":
        return Dual._coerce(other).__sub__(self)

    def __mul__(self, other: Any) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.p * o.p, self.d * o.p + self.p * o.d)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Dual":
        o = Dual._coerce(other)
        quotient = self.p / o.p
        return Dual(quotient, (self.d - quotient * o.d) / o.p)

    def __rtruediv__(self, other: Any) -> "Dual":
        return Dual._coerce(other).__truediv__(self)

    def __neg__(self) -> "Dual":
        return Dual(-self.p, -self.d)

    def __pow__(self, exponent: Any) -> "Dual":
        if isinstance(exponent, Dual):
            # a^b = exp(b log a) once the exponent carries a tangent
            return exp(exponent * log(self))
        return Dual(self.p**exponent, exponent * self.p ** (exponent - 1) * self.d)

    def __rpow__(self, base: Any) -> "Dual":
        return exp(self * log(base))

    def sqrt(self) -> "Dual":
        root = sqrt(self.p)
        return Dual(root, self.d / (2.0 * root))

    def exp(self) -> "Dual":
        value = exp(self.p)
        return Dual(value, value * self.d)

    def log(self) -> "Dual":
        return Dual(log(self.p), self.d / self.p)


def sqrt(value: Any) -> Any:
    if isinstance(value, Dual):
        return value.sqrt()
    return np.sqrt(value)


def exp(value: Any) -> Any:
    if isinstance(value, Dual):
        return value.exp()
    return np.exp(value)


def log(value: Any) -> Any:
    if isinstance(value, Dual):
        return value.log()
    return np.log(value)


def primal(value: Any) -> Any:
    """Strip every tangent layer."""
    while isinstance(value, Dual):
        value = value.p
    return value


def tangent(value: Any) -> Any:
    return value.d if isinstance(value, Dual) else 0.0
