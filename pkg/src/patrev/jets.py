"""Second-order truncated Taylor arithmetic.

A :class:`Jet` carries a value and its first two derivatives with respect to
one scalar parameter and propagates them exactly through field operations
and principal-branch powers.  Coefficients may be Python complex numbers,
numpy arrays (for vectorized evaluation over a frequency grid), or other
jets: nesting a jet inside another yields mixed expansions in two parameters
without any symbolic algebra.
"""

from __future__ import annotations

from typing import Any

_SCALARS = (int, float, complex)


class Jet:
    """Value plus first and second derivative of a smooth function."""

    __slots__ = ("val", "d1", "d2")

    def __init__(self, val: Any, d1: Any = 0.0, d2: Any = 0.0) -> None:
        self.val = val
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x: Any) -> "Jet":
        """The identity function evaluated at ``x``: derivatives (1, 0)."""
        return cls(x, _ones_like(x), _zeros_like(x))

    @classmethod
    def constant(cls, c: Any) -> "Jet":
        return cls(c, _zeros_like(c), _zeros_like(c))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Jet({self.val!r}, {self.d1!r}, {self.d2!r})"

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.d1 + other.d1, self.d2 + other.d2)
        return Jet(self.val + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.d1, -self.d2)

    def __sub__(self, other: Any) -> "Jet":
        return self + (-other if isinstance(other, Jet) else -1 * other)

    def __rsub__(self, other: Any) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return Jet(
                self.val * other.val,
                self.d1 * other.val + self.val * other.d1,
                self.d2 * other.val + 2 * (self.d1 * other.d1) + self.val * other.d2,
            )
        return Jet(self.val * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.val
        inv2 = inv * inv
        return Jet(inv, -self.d1 * inv2, (2 * (self.d1 * self.d1) * inv - self.d2) * inv2)

    def __truediv__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other: Any) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, p: float) -> "Jet":
        """Principal-branch power with a real exponent."""
        base = self.val
        w = base**p
        dw = p * base ** (p - 1)
        ddw = p * (p - 1) * base ** (p - 2)
        return Jet(w, dw * self.d1, dw * self.d2 + ddw * (self.d1 * self.d1))

    def sqrt(self) -> "Jet":
        return self**0.5


def _zeros_like(x: Any) -> Any:
    if isinstance(x, Jet):
        return Jet.constant(_zeros_like(x.val))
    if isinstance(x, _SCALARS):
        return 0.0
    return x * 0.0


def _ones_like(x: Any) -> Any:
    if isinstance(x, Jet):
        return Jet.constant(_ones_like(x.val))
    if isinstance(x, _SCALARS):
        return 1.0
    return x * 0.0 + 1.0
