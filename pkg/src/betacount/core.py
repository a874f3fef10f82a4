"""Numeric backends, the base parameter, and the digit maps ``T_d(x) = beta*x - d``.

Two backends share one interface:

* ``FloatBeta``: IEEE doubles; equality and interval membership are decided
  with an absolute tolerance ``tau``.
* ``QuadraticBeta``: exact arithmetic in Q(beta) for beta the larger root of
  ``x**2 = a*x + b``. Points are ``QuadNumber`` values ``p + q*beta`` with
  rational ``p, q``; ordering is decided exactly.

Points in the float backend are plain ``float``; the tolerance lives on the
``BetaParam``, not on the number.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Sequence, Union

from .errors import BackendMismatch, InvalidPolynomial, OutOfRange, PointOutsideInterval

DEFAULT_TAU = 1e-10

DigitWord = tuple  # tuple[int, ...] over {0, 1}


@dataclass(frozen=True)
class QuadField:
    a: int
    b: int

    @property
    def disc(self) -> int:
        return self.a * self.a + 4 * self.b

    def __repr__(self) -> str:
        return f"QuadField(x^2 = {self.a}x + {self.b})"


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    raise BackendMismatch(f"cannot mix {type(v).__name__} into exact arithmetic")


class QuadNumber:
    """Exact element ``p + q*beta`` of Q(beta)."""

    __slots__ = ("p", "q", "field")

    def __init__(self, p, q, fld: QuadField):
        self.p = _as_fraction(p)
        self.q = _as_fraction(q)
        self.field = fld

    # -- coercion -------------------------------------------------------
    def _coerce(self, other) -> QuadNumber:
        if isinstance(other, QuadNumber):
            if other.field != self.field:
                raise BackendMismatch(f"{self.field} vs {other.field}")
            return other
        return QuadNumber(_as_fraction(other), 0, self.field)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        return QuadNumber(self.p + o.p, self.q + o.q, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return QuadNumber(self.p - o.p, self.q - o.q, self.field)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return QuadNumber(-self.p, -self.q, self.field)

    def __mul__(self, other):
        if not isinstance(other, QuadNumber):
            k = _as_fraction(other)
            return QuadNumber(self.p * k, self.q * k, self.field)
        o = self._coerce(other)
        a, b = self.field.a, self.field.b
        qq = self.q * o.q
        # beta^2 = a*beta + b
        return QuadNumber(self.p * o.p + qq * b, self.p * o.q + self.q * o.p + qq * a, self.field)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """Field norm ``(p + q*beta)(p + q*beta')`` with ``beta' = a - beta``."""
        a, b = self.field.a, self.field.b
        return self.p * self.p + self.p * self.q * a - self.q * self.q * b

    def inverse(self) -> QuadNumber:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadNumber division by zero")
        return QuadNumber((self.p + self.q * self.field.a) / n, -self.q / n, self.field)

    def __truediv__(self, other):
        if not isinstance(other, QuadNumber):
            k = _as_fraction(other)
            return QuadNumber(self.p / k, self.q / k, self.field)
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = QuadNumber(1, 0, self.field)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- ordering -------------------------------------------------------
    def sign(self) -> int:
        # p + q*beta = (u + q*sqrt(D)) / 2 with u = 2p + a*q; beta is
        # irrational so u + q*sqrt(D) = 0 only when u = q = 0.
        pn, pd = self.p.numerator, self.p.denominator
        qn, qd = self.q.numerator, self.q.denominator
        u = 2 * pn * qd + self.field.a * qn * pd
        su = (u > 0) - (u < 0)
        sv = (qn > 0) - (qn < 0)
        if sv == 0 or su == sv:
            return su
        if su == 0:
            return sv
        lhs = u * u
        rhs = qn * qn * self.field.disc * pd * pd
        return su if lhs > rhs else sv

    def __eq__(self, other):
        if isinstance(other, float):
            return NotImplemented
        try:
            o = self._coerce(other)
        except BackendMismatch:
            return NotImplemented
        return self.p == o.p and self.q == o.q

    def __hash__(self):
        return hash(self.p) if self.q == 0 else hash((self.p, self.q))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- conversion -----------------------------------------------------
    def __float__(self) -> float:
        # Evaluate through Decimal so large cancelling p, q stay accurate.
        return float(self.to_decimal(30))

    def to_decimal(self, digits: int = 17) -> Decimal:
        # p and q may be large and nearly cancel; pad precision by their size
        mag = max(self.p.numerator.bit_length() - self.p.denominator.bit_length(),
                  self.q.numerator.bit_length() - self.q.denominator.bit_length(), 0)
        with localcontext() as ctx:
            ctx.prec = digits + 20 + (mag * 31) // 100
            beta = _beta_decimal(self.field, ctx.prec)
            p = Decimal(self.p.numerator) / Decimal(self.p.denominator)
            q = Decimal(self.q.numerator) / Decimal(self.q.denominator)
            val = p + q * beta
        with localcontext() as ctx:
            ctx.prec = digits
            return +val

    def __repr__(self) -> str:
        return f"QuadNumber({self.p}, {self.q})"

    def __str__(self) -> str:
        return f"{self.p} + {self.q}*beta"


@lru_cache(maxsize=64)
def _beta_decimal(fld: QuadField, prec: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = prec
        return (Decimal(fld.a) + Decimal(fld.disc).sqrt()) / 2


Number = Union[float, QuadNumber]


class BetaParam:
    """Base parameter beta in (1, 2) plus backend-specific arithmetic.

    Subclasses provide ``value`` (float approximation), ``right`` (the right end
    ``1/(beta-1)`` of ``I_beta`` in backend arithmetic), ``tau`` and the
    primitive operations below.
    """

    backend: str
    value: float
    tau: float

    # primitives overridden by backends
    def point(self, v) -> Number:
        raise NotImplementedError

    def mul_beta(self, x: Number) -> Number:
        raise NotImplementedError

    def div_beta(self, x: Number) -> Number:
        raise NotImplementedError

    def cmp(self, u: Number, v: Number) -> int:
        raise NotImplementedError

    @property
    def right(self) -> Number:
        raise NotImplementedError

    # shared operations
    @property
    def zero(self) -> Number:
        return self.point(0)

    def T(self, d: int, x: Number) -> Number:
        return self.mul_beta(x) - d

    def in_interval(self, x: Number) -> bool:
        """Closed membership in I_beta (tau-widened in float mode)."""
        return self.cmp(x, 0) >= 0 and self.cmp(x, self.right) <= 0

    def check_in_interval(self, x: Number) -> None:
        if not self.in_interval(x):
            raise PointOutsideInterval(f"x={float(x)!r} not in [0, {float(self.right)!r}]")

    def beta_pow(self, n: int) -> Number:
        x = self.point(1)
        if n >= 0:
            for _ in range(n):
                x = self.mul_beta(x)
        else:
            for _ in range(-n):
                x = self.div_beta(x)
        return x

    def window_length(self, n: int) -> Number:
        """``1/((beta-1) beta^n)``: the spread of all tails after n digits."""
        return self.right * self.beta_pow(-n)

    def word_sum(self, word: Sequence[int]) -> Number:
        """``sum_i w_i beta^-i`` by Horner's rule."""
        s = self.zero
        for d in reversed(word):
            s = self.div_beta(s + d)
        return s

    @property
    def switch_lo(self) -> Number:
        return self.div_beta(self.point(1))

    @property
    def switch_hi(self) -> Number:
        return self.div_beta(self.right)

    def random_point(self, rng: random.Random) -> Number:
        raise NotImplementedError


@dataclass(frozen=True)
class FloatBeta(BetaParam):
    value: float
    tau: float = DEFAULT_TAU
    backend: str = field(default="float", init=False)

    def __post_init__(self):
        v = float(self.value)
        if not (1.0 < v < 2.0) or math.isnan(v):
            raise OutOfRange(f"beta={self.value!r} must lie in the open interval (1, 2)")
        if not (self.tau >= 0):
            raise OutOfRange(f"tau={self.tau!r} must be non-negative")
        object.__setattr__(self, "value", v)

    def point(self, v) -> float:
        if isinstance(v, QuadNumber):
            raise BackendMismatch("QuadNumber given to float backend")
        if isinstance(v, tuple):
            p, q = v
            return float(p) + float(q) * self.value
        return float(v)

    @property
    def right(self) -> float:
        return 1.0 / (self.value - 1.0)

    def mul_beta(self, x):
        return self.value * x

    def div_beta(self, x):
        return x / self.value

    def cmp(self, u, v) -> int:
        if isinstance(u, QuadNumber) or isinstance(v, QuadNumber):
            raise BackendMismatch("QuadNumber compared in float backend")
        diff = u - v
        if abs(diff) <= self.tau:
            return 0
        return 1 if diff > 0 else -1

    def random_point(self, rng: random.Random) -> float:
        return rng.uniform(0.0, self.right)

    def __repr__(self) -> str:
        return f"FloatBeta({self.value!r}, tau={self.tau!r})"


@dataclass(frozen=True)
class QuadraticBeta(BetaParam):
    """beta = larger root of ``x^2 = a x + b``.

    Any integers with a non-square discriminant ``a^2 + 4b`` and the root in
    (1, 2) are accepted; ``(1, 1)`` is the golden ratio.
    """

    a: int
    b: int
    backend: str = field(default="quadratic", init=False)
    tau: float = field(default=0.0, init=False)

    def __post_init__(self):
        if int(self.a) != self.a or int(self.b) != self.b:
            raise InvalidPolynomial("coefficients must be integers")
        a, b = int(self.a), int(self.b)
        if b == 0:
            raise InvalidPolynomial("b = 0 gives a rational root")
        d = a * a + 4 * b
        if d <= 0:
            raise InvalidPolynomial(f"x^2 = {a}x + {b} has no real root")
        r = math.isqrt(d)
        if r * r == d:
            raise InvalidPolynomial(f"x^2 = {a}x + {b} has rational roots")
        fld = QuadField(a, b)
        beta = QuadNumber(0, 1, fld)
        # 1 < beta < 2, decided exactly
        if not ((beta - 1).sign() > 0 and (beta - 2).sign() < 0):
            raise InvalidPolynomial(f"root of x^2 = {a}x + {b} is {(a + math.sqrt(d)) / 2:.6g}, not in (1, 2)")
        object.__setattr__(self, "_field", fld)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_inv_beta", QuadNumber(Fraction(-a, b), Fraction(1, b), fld))
        object.__setattr__(self, "_right", (beta - 1).inverse())
        object.__setattr__(self, "value", (a + math.sqrt(d)) / 2)

    @property
    def field(self) -> QuadField:
        return self._field

    @property
    def beta(self) -> QuadNumber:
        return self._beta

    @property
    def right(self) -> QuadNumber:
        return self._right

    def point(self, v) -> QuadNumber:
        if isinstance(v, QuadNumber):
            if v.field != self._field:
                raise BackendMismatch(f"{v.field} vs {self._field}")
            return v
        if isinstance(v, tuple):
            p, q = v
            return QuadNumber(Fraction(p), Fraction(q), self._field)
        if isinstance(v, float):
            raise BackendMismatch("float given to exact backend; pass a Fraction or (p, q)")
        if isinstance(v, str):
            v = Fraction(v)
        return QuadNumber(v, 0, self._field)

    def mul_beta(self, x: QuadNumber) -> QuadNumber:
        # beta (p + q beta) = q b + (p + q a) beta
        return QuadNumber(x.q * self.b, x.p + x.q * self.a, self._field)

    def div_beta(self, x) -> QuadNumber:
        # 1/beta = (beta - a)/b
        if not isinstance(x, QuadNumber):
            x = self.point(x)
        return x * self._inv_beta

    def cmp(self, u, v) -> int:
        if isinstance(u, float) or isinstance(v, float):
            raise BackendMismatch("float compared in exact backend")
        if isinstance(u, QuadNumber) and u.field != self._field:
            raise BackendMismatch(f"{u.field} vs {self._field}")
        if isinstance(v, QuadNumber) and v.field != self._field:
            raise BackendMismatch(f"{v.field} vs {self._field}")
        return (self.point(u) - v).sign()

    def random_point(self, rng: random.Random, bits: int = 32) -> QuadNumber:
        r = Fraction(rng.getrandbits(bits), 1 << bits)
        return self._right * r

    def __repr__(self) -> str:
        return f"QuadraticBeta(a={self.a}, b={self.b})"


def make_beta(spec, tau: float = DEFAULT_TAU) -> BetaParam:
    """Build a ``BetaParam`` from a float (float backend) or an ``(a, b)`` pair
    (exact quadratic backend)."""
    if isinstance(spec, BetaParam):
        return spec
    if isinstance(spec, tuple):
        a, b = spec
        return QuadraticBeta(a, b)
    return FloatBeta(float(spec), tau)


def golden() -> QuadraticBeta:
    return QuadraticBeta(1, 1)


def apply_T(d: int, x: Number, beta: BetaParam) -> Number:
    if d not in (0, 1):
        raise ValueError(f"digit must be 0 or 1, got {d!r}")
    return beta.T(d, x)


def cmp_points(u: Number, v: Number, beta: BetaParam) -> int:
    """-1, 0 or 1 as u <, =, > v in the backend's notion of equality."""
    return beta.cmp(u, v)


def fmt_num(v, digits: int = 17) -> str:
    """Decimal rendering with ``digits`` significant digits."""
    if v is None:
        return ""
    if isinstance(v, QuadNumber):
        return "0" if v.sign() == 0 else f"{v.to_decimal(digits).normalize():g}"
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.{digits}g}"


def word_str(word: Sequence[int]) -> str:
    return "".join(str(d) for d in word)
