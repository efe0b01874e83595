"""Extended reals and exact/approximate number helpers.

Infinite quantities (divergent scales, infinite boundary atoms, divergent
integrals) are carried by the explicit :data:`INF` / :data:`NEG_INF` tags.
They support ordering against ordinary numbers and the handful of
arithmetic rules the endpoint conventions need; anything else raises
instead of silently producing ``nan``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational, Real
from typing import Union

ABS_TOL = 1e-12


class _Infinity:
    __slots__ = ("sign",)

    def __init__(self, sign: int):
        object.__setattr__(self, "sign", sign)

    def __setattr__(self, name, value):
        raise AttributeError("extended infinity is immutable")

    def __repr__(self) -> str:
        return "INF" if self.sign > 0 else "NEG_INF"

    def __str__(self) -> str:
        return "inf" if self.sign > 0 else "-inf"

    def __hash__(self) -> int:
        return hash(("ext-inf", self.sign))

    def __eq__(self, other) -> bool:
        return isinstance(other, _Infinity) and other.sign == self.sign

    def __lt__(self, other) -> bool:
        if isinstance(other, _Infinity):
            return self.sign < other.sign
        _require_real(other)
        return self.sign < 0

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __gt__(self, other) -> bool:
        if isinstance(other, _Infinity):
            return self.sign > other.sign
        _require_real(other)
        return self.sign > 0

    def __ge__(self, other) -> bool:
        return self == other or self > other

    def __neg__(self) -> "_Infinity":
        return NEG_INF if self.sign > 0 else INF

    def __add__(self, other):
        if isinstance(other, _Infinity):
            if other.sign != self.sign:
                raise ArithmeticError("inf - inf is undefined")
            return self
        _require_real(other)
        return self

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, _Infinity):
            return INF if other.sign == self.sign else NEG_INF
        _require_real(other)
        if other == 0:
            raise ArithmeticError("0 * inf is undefined here")
        return self if other > 0 else -self

    __rmul__ = __mul__

    def __float__(self) -> float:
        return math.inf * self.sign


def _require_real(x) -> None:
    if not isinstance(x, Real):
        raise TypeError(f"cannot compare extended infinity with {type(x).__name__}")


INF = _Infinity(+1)
NEG_INF = _Infinity(-1)

Number = Union[Fraction, int, float]
Ext = Union[Fraction, int, float, _Infinity]


def is_inf(x) -> bool:
    return isinstance(x, _Infinity)


def is_finite(x) -> bool:
    return not isinstance(x, _Infinity)


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def as_number(x) -> Ext:
    """Coerce user input to Fraction (exact) / float / infinity tag.

    Python ``float('inf')`` is converted to the tag at the boundary so it never
    enters arithmetic.
    """
    if isinstance(x, _Infinity):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x):
            raise ValueError("nan is not allowed")
        if math.isinf(x):
            return INF if x > 0 else NEG_INF
        return x
    if isinstance(x, str):
        return parse_number(x)
    raise TypeError(f"unsupported number {x!r}")


def parse_number(text: str) -> Ext:
    """Parse ``inf``, ``-inf``, ``p/q``, integers and decimals (decimals exactly)."""
    t = text.strip()
    low = t.lower()
    if low in ("inf", "+inf", "infinity"):
        return INF
    if low in ("-inf", "-infinity"):
        return NEG_INF
    if low in ("nan", "+nan", "-nan"):
        raise ValueError("nan is not allowed")
    return Fraction(t)


def close(a, b, tol: float = ABS_TOL) -> bool:
    """Equality under the package comparison rule.

    Exact inputs compare exactly; otherwise absolute tolerance ``tol`` scaled
    by ``max(1, |value|)``.
    """
    if is_inf(a) or is_inf(b):
        return a == b
    if is_exact(a) and is_exact(b):
        return a == b
    scale = max(1.0, abs(float(a)), abs(float(b)))
    return abs(float(a) - float(b)) <= tol * scale


def to_float(x) -> float:
    return float(x)


def fmt(x) -> str:
    """Bit-stable text form: ``p/q`` for rationals, 17 significant digits for floats."""
    if is_inf(x):
        return str(x)
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, Rational):
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def power_integral(coef, q, w1, w2) -> Ext:
    """Closed form of ``int_{w1}^{w2} coef * w**q dw`` for ``0 <= w1 < w2 <= inf``.

    Exact when ``coef``, ``w1``, ``w2`` are rational and ``q`` is an integer.
    Returns :data:`INF` for divergent integrals.
    """
    if coef == 0:
        return Fraction(0)
    if w1 == w2:
        return Fraction(0)
    if not (0 <= w1 < w2):
        raise ValueError("need 0 <= w1 < w2")
    if w1 == 0 and q <= -1:
        return INF
    if is_inf(w2) and q >= -1:
        return INF
    exact = is_exact(coef) and is_exact(w1) and (is_inf(w2) or is_exact(w2)) and is_exact(q) and Fraction(q).denominator == 1
    if q == -1:
        return coef * math.log(float(w2) / float(w1))
    e = q + 1

    def prim(w):
        if is_inf(w):
            return 0  # e < 0 here
        if w == 0:
            return 0  # e > 0 here
        if exact:
            return Fraction(w) ** int(e)
        return float(w) ** float(e)

    val = (prim(w2) - prim(w1))
    if exact:
        return Fraction(coef) * val / Fraction(e)
    return float(coef) * float(val) / float(e)
