# cuspfreq/arith.py
"""
Scalars, integer Moebius maps and upper half-plane primitives.

A Number is one of
  - fractions.Fraction              exact rational
  - Surd                            exact (p + q*sqrt(d)) / r
  - TrackedReal                     mpmath midpoint with an absolute error radius
  - INF                             the projective point at infinity

Exact pairs compare exactly. Tracked reals only answer when their error
intervals are disjoint and raise otherwise.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Union

from mpmath import mp, mpf, mpc
from sympy import factorint

from .config import settings
from .errors import (
    InvalidParameterError,
    MalformedNumberError,
    PrecisionExhaustedError,
    UndecidableComparisonError,
)

logger = logging.getLogger(__name__)


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


# ==================== POINT AT INFINITY ====================

class _Infinity:
    """Projective infinity; unsigned, so negation is a no-op."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __neg__(self):
        return self

    def __hash__(self):
        return hash("cuspfreq.INF")

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


# ==================== QUADRATIC SURDS ====================

def _square_free(d: int) -> tuple[int, int]:
    """Split d = s^2 * core with core square-free; returns (s, core)."""
    s, core = 1, 1
    for prime, exp in factorint(d).items():
        s *= prime ** (exp // 2)
        core *= prime ** (exp % 2)
    return s, core


def normalize_surd(p: int, q: int, d: int, r: int) -> Union[Fraction, "Surd"]:
    """Canonical form of (p + q*sqrt(d)) / r; collapses to Fraction when rational."""
    if r == 0:
        raise MalformedNumberError("surd with zero denominator r")
    if d <= 0:
        raise MalformedNumberError(f"surd radicand must be positive, got {d}")
    if q == 0:
        return Fraction(p, r)
    s, d = _square_free(d)
    q *= s
    if d == 1:
        return Fraction(p + q, r)
    if r < 0:
        p, q, r = -p, -q, -r
    g = math.gcd(p, q, r)
    return Surd(p // g, q // g, d, r // g)


@dataclass(frozen=True, slots=True)
class Surd:
    """(p + q*sqrt(d)) / r, always in canonical form (see normalize_surd)."""
    p: int
    q: int
    d: int
    r: int

    @classmethod
    def of(cls, p: int, q: int, d: int, r: int = 1) -> Union[Fraction, "Surd"]:
        return normalize_surd(p, q, d, r)

    def _coerce(self, other) -> tuple[int, int, int] | None:
        if isinstance(other, int):
            return other, 0, 1
        if isinstance(other, Fraction):
            return other.numerator, 0, other.denominator
        if isinstance(other, Surd):
            if other.d != self.d:
                raise InvalidParameterError(
                    f"cannot combine sqrt({self.d}) and sqrt({other.d}) exactly"
                )
            return other.p, other.q, other.r
        return None

    def __neg__(self):
        return Surd(-self.p, -self.q, self.d, self.r)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p2, q2, r2 = o
        return normalize_surd(self.p * r2 + p2 * self.r, self.q * r2 + q2 * self.r, self.d, self.r * r2)

    __radd__ = __add__

    def __sub__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p2, q2, r2 = o
        return normalize_surd(
            self.p * p2 + self.q * q2 * self.d,
            self.p * q2 + p2 * self.q,
            self.d,
            self.r * r2,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        norm = self.p * self.p - self.q * self.q * self.d
        return normalize_surd(self.r * self.p, -self.r * self.q, self.d, norm)

    def __truediv__(self, other):
        if isinstance(other, Surd):
            return self * other.reciprocal()
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("surd divided by zero")
            return self * (1 / Fraction(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.reciprocal() * other

    def conjugate(self) -> "Surd":
        return Surd(self.p, -self.q, self.d, self.r)

    def sign(self) -> int:
        p, q = self.p, self.q
        if p >= 0 and q >= 0:
            return 1
        if p <= 0 and q <= 0:
            return -1
        # opposite signs: whichever of |p|, |q|sqrt(d) dominates wins
        if p * p > q * q * self.d:
            return 1 if p > 0 else -1
        return 1 if q > 0 else -1

    def floor(self) -> int:
        root = math.isqrt(self.q * self.q * self.d)
        floor_qroot = root if self.q > 0 else -root - 1
        return (self.p + floor_qroot) // self.r

    def to_mpf(self) -> mpf:
        return (mpf(self.p) + self.q * mp.sqrt(self.d)) / self.r

    def __float__(self):
        return float(self.to_mpf())

    def __lt__(self, other):
        return compare(self, other) is Ordering.LESS

    def __le__(self, other):
        return compare(self, other) is not Ordering.GREATER

    def __gt__(self, other):
        return compare(self, other) is Ordering.GREATER

    def __ge__(self, other):
        return compare(self, other) is not Ordering.LESS


# ==================== PRECISION-TRACKED REALS ====================

def _rounding_slack(value: mpf) -> mpf:
    return abs(value) * mpf(2) ** (1 - mp.prec) + mpf(2) ** (-mp.prec * 4)


@dataclass(frozen=True, slots=True)
class TrackedReal:
    """Midpoint and absolute error radius, evaluated at `dps` digits."""
    mid: mpf
    radius: mpf
    dps: int

    def __post_init__(self):
        if not (self.radius >= 0) or not mp.isfinite(self.radius):
            raise MalformedNumberError("tracked real needs a finite non-negative radius")

    @classmethod
    def from_mpf(cls, value, dps: int, radius=None) -> "TrackedReal":
        with mp.workdps(dps):
            mid = mpf(value)
            rad = mpf(radius) if radius is not None else mpf(10) ** (2 - dps)
            return cls(mid, rad, dps)

    @classmethod
    def lift(cls, value, dps: int) -> "TrackedReal":
        if isinstance(value, TrackedReal):
            return value
        with mp.workdps(dps):
            mid = to_mpf(value)
            return cls(mid, _rounding_slack(mid), dps)

    def _binary(self, other, op):
        if isinstance(other, _Infinity):
            return NotImplemented
        if not isinstance(other, (int, Fraction, Surd, TrackedReal)):
            return NotImplemented
        dps = max(self.dps, other.dps) if isinstance(other, TrackedReal) else self.dps
        other = TrackedReal.lift(other, dps)
        with mp.workdps(dps):
            return op(self, other, dps)

    @staticmethod
    def _add(x, y, dps):
        mid = x.mid + y.mid
        return TrackedReal(mid, x.radius + y.radius + _rounding_slack(mid), dps)

    @staticmethod
    def _mul(x, y, dps):
        mid = x.mid * y.mid
        rad = abs(x.mid) * y.radius + abs(y.mid) * x.radius + x.radius * y.radius
        return TrackedReal(mid, rad + _rounding_slack(mid), dps)

    def __add__(self, other):
        return self._binary(other, TrackedReal._add)

    __radd__ = __add__

    def __neg__(self):
        return TrackedReal(-self.mid, self.radius, self.dps)

    def __sub__(self, other):
        return self._binary(other, lambda x, y, dps: TrackedReal._add(x, -y, dps))

    def __rsub__(self, other):
        return self._binary(other, lambda x, y, dps: TrackedReal._add(-x, y, dps))

    def __mul__(self, other):
        return self._binary(other, TrackedReal._mul)

    __rmul__ = __mul__

    def reciprocal(self) -> "TrackedReal":
        with mp.workdps(self.dps):
            m = abs(self.mid)
            if m <= self.radius:
                raise PrecisionExhaustedError("tracked interval contains zero; cannot invert")
            mid = 1 / self.mid
            rad = self.radius / (m * (m - self.radius))
            return TrackedReal(mid, rad + _rounding_slack(mid), self.dps)

    def __truediv__(self, other):
        return self._binary(other, lambda x, y, dps: TrackedReal._mul(x, y.reciprocal(), dps))

    def __rtruediv__(self, other):
        return self._binary(other, lambda x, y, dps: TrackedReal._mul(y, x.reciprocal(), dps))

    def sign(self) -> int:
        with mp.workdps(self.dps):
            if self.mid - self.radius > 0:
                return 1
            if self.mid + self.radius < 0:
                return -1
        raise UndecidableComparisonError(
            f"sign of {mp.nstr(self.mid, 8)} ± {mp.nstr(self.radius, 3)} is undecided"
        )

    def floor(self) -> int:
        with mp.workdps(self.dps):
            lo = int(mp.floor(self.mid - self.radius))
            hi = int(mp.floor(self.mid + self.radius))
        if lo != hi:
            raise UndecidableComparisonError(
                f"integer part of {mp.nstr(self.mid, 8)} ± {mp.nstr(self.radius, 3)} is undecided"
            )
        return lo

    def __float__(self):
        return float(self.mid)

    def __lt__(self, other):
        return compare(self, other) is Ordering.LESS

    def __le__(self, other):
        return compare(self, other) is not Ordering.GREATER

    def __gt__(self, other):
        return compare(self, other) is Ordering.GREATER

    def __ge__(self, other):
        return compare(self, other) is not Ordering.LESS


Number = Union[Fraction, Surd, TrackedReal, _Infinity]
Exact = (int, Fraction, Surd)


# ==================== GENERIC OPERATIONS ====================

def as_number(value) -> Number:
    if isinstance(value, bool):
        raise MalformedNumberError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (Fraction, Surd, TrackedReal, _Infinity)):
        return value
    if isinstance(value, str):
        return parse_number(value)
    raise MalformedNumberError(f"unsupported number type {type(value).__name__}")


def normalize(n: Number) -> Number:
    """Canonical form of any Number (invariants re-established)."""
    if isinstance(n, Surd):
        return normalize_surd(n.p, n.q, n.d, n.r)
    if isinstance(n, Fraction):
        if n.denominator == 0:
            raise MalformedNumberError("zero denominator")
        return Fraction(n.numerator, n.denominator)
    if isinstance(n, TrackedReal):
        return TrackedReal(n.mid, n.radius, n.dps)
    return as_number(n)


def is_exact(n) -> bool:
    return isinstance(n, Exact) or isinstance(n, _Infinity)


def is_infinite(n) -> bool:
    return isinstance(n, _Infinity)


def to_mpf(n) -> mpf:
    if isinstance(n, _Infinity):
        return mp.inf
    if isinstance(n, int):
        return mpf(n)
    if isinstance(n, Fraction):
        return mpf(n.numerator) / n.denominator
    if isinstance(n, Surd):
        return n.to_mpf()
    if isinstance(n, TrackedReal):
        return n.mid
    return mpf(n)


def sign(n: Number) -> int:
    if isinstance(n, (int, Fraction)):
        return (n > 0) - (n < 0)
    if isinstance(n, (Surd, TrackedReal)):
        return n.sign()
    raise InvalidParameterError("infinity has no sign")


def floor_number(n: Number) -> int:
    if isinstance(n, (int, Fraction)):
        return math.floor(n)
    if isinstance(n, (Surd, TrackedReal)):
        return n.floor()
    raise InvalidParameterError("infinity has no integer part")


def _compare_radicands(x, y) -> Ordering:
    # distinct square-free radicands never coincide, so refinement terminates
    dps = 30
    while True:
        with mp.workdps(dps):
            diff = to_mpf(x) - to_mpf(y)
            if abs(diff) > mpf(10) ** (5 - dps):
                return Ordering.GREATER if diff > 0 else Ordering.LESS
        dps *= 2


def compare(x: Number, y: Number) -> Ordering:
    """Total order on R-bar with infinity above every finite value."""
    x_inf, y_inf = isinstance(x, _Infinity), isinstance(y, _Infinity)
    if x_inf or y_inf:
        if x_inf and y_inf:
            return Ordering.EQUAL
        return Ordering.GREATER if x_inf else Ordering.LESS
    if isinstance(x, Exact) and isinstance(y, Exact):
        if isinstance(x, Surd) and isinstance(y, Surd) and x.d != y.d:
            return _compare_radicands(x, y)
        diff = x - y
        return Ordering(sign(diff))
    if not isinstance(x, TrackedReal):
        x = TrackedReal.lift(x, y.dps)
    return Ordering((x - y).sign())


def conjugate(n: Number) -> Number:
    return n.conjugate() if isinstance(n, Surd) else n


# ==================== PARSE / FORMAT ====================

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:/(-?\d+))?\s*$")
_SURD_RE = re.compile(r"^\s*surd:(-?\d+),(-?\d+),(-?\d+),(-?\d+)\s*$")
_DECIMAL_RE = re.compile(r"^\s*dec:(-?)(\d+)(?:\.(\d*))?(?:@(-?\d+))?\s*$")


def parse_number(text: str) -> Number:
    """Parses 'p/q', 'surd:p,q,d,r', 'dec:<digits>[@<err-exponent>]' or 'inf'."""
    if text.strip().lower() == "inf":
        return INF
    if m := _RATIONAL_RE.match(text):
        num, den = int(m.group(1)), int(m.group(2) or 1)
        if den == 0:
            raise MalformedNumberError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    if m := _SURD_RE.match(text):
        return normalize_surd(*(int(g) for g in m.groups()))
    if m := _DECIMAL_RE.match(text):
        negative, whole, frac, err = m.groups()
        frac = frac or ""
        digits = len(whole.lstrip("0")) + len(frac)
        dps = max(settings.DECIMAL_DPS, digits + 10)
        with mp.workdps(dps):
            mid = mpf(f"{negative}{whole}.{frac or '0'}")
            if err is not None:
                radius = mpf(10) ** int(err)
            else:
                radius = mpf(5) * mpf(10) ** (-(len(frac) + 1))
            return TrackedReal(mid, radius + _rounding_slack(mid), dps)
    raise MalformedNumberError(f"cannot parse number {text!r}")


def _fixed_point(value: mpf, places: int) -> str:
    scaled = int(mp.nint(value * mpf(10) ** places))
    digits = str(abs(scaled)).rjust(places + 1, "0")
    head, tail = digits[:len(digits) - places], digits[len(digits) - places:]
    text = f"{head}.{tail}" if places else head
    return f"-{text}" if scaled < 0 else text


def format_number(n: Number) -> str:
    if isinstance(n, _Infinity):
        return "inf"
    if isinstance(n, int):
        n = Fraction(n)
    if isinstance(n, Fraction):
        return str(n.numerator) if n.denominator == 1 else f"{n.numerator}/{n.denominator}"
    if isinstance(n, Surd):
        return f"surd:{n.p},{n.q},{n.d},{n.r}"
    if isinstance(n, TrackedReal):
        with mp.workdps(n.dps):
            exp = int(mp.ceil(mp.log10(n.radius))) if n.radius > 0 else -n.dps
            return f"dec:{_fixed_point(n.mid, max(0, -exp))}@{exp}"
    raise MalformedNumberError(f"cannot format {n!r}")


# ==================== MOEBIUS MAPS ====================

@dataclass(frozen=True, slots=True)
class MoebiusMap:
    """Integer matrix [[m11, m12], [m21, m22]] with determinant +-1."""
    m11: int
    m12: int
    m21: int
    m22: int

    def __post_init__(self):
        if self.det not in (1, -1):
            raise InvalidParameterError(f"Moebius map needs determinant +-1, got {self.det}")

    @property
    def det(self) -> int:
        return self.m11 * self.m22 - self.m12 * self.m21

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, n: int) -> "MoebiusMap":
        return cls(1, n, 0, 1)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def inverse(self) -> "MoebiusMap":
        d = self.det
        return MoebiusMap(d * self.m22, -d * self.m12, -d * self.m21, d * self.m11)

    def same_in_psl(self, other: "MoebiusMap") -> bool:
        mine = (self.m11, self.m12, self.m21, self.m22)
        theirs = (other.m11, other.m12, other.m21, other.m22)
        return mine == theirs or mine == tuple(-v for v in theirs)

    def apply(self, x: Number) -> Number:
        return moebius_apply(self, x)

    def apply_point(self, z: "UpperHalfPoint") -> "UpperHalfPoint":
        if self.det != 1:
            raise InvalidParameterError("only determinant +1 maps preserve the upper half-plane")
        zc = mpc(z.x, z.y)
        image = (self.m11 * zc + self.m12) / (self.m21 * zc + self.m22)
        return UpperHalfPoint(image.real, image.imag)

    def as_list(self) -> list[int]:
        return [self.m11, self.m12, self.m21, self.m22]


S = MoebiusMap(0, -1, 1, 0)
T = MoebiusMap(1, 1, 0, 1)
T_INV = MoebiusMap(1, -1, 0, 1)


def moebius_apply(m: MoebiusMap, x: Number) -> Number:
    """(m11 x + m12) / (m21 x + m22), with infinity handled projectively."""
    if isinstance(x, _Infinity):
        return INF if m.m21 == 0 else Fraction(m.m11, m.m21)
    x = as_number(x)
    den = m.m21 * x + m.m22
    if isinstance(den, TrackedReal):
        try:
            den.sign()
        except UndecidableComparisonError as exc:
            raise PrecisionExhaustedError(f"argument straddles the pole of the map: {exc.detail}")
    elif den == 0:
        return INF
    return (m.m11 * x + m.m12) / den


# ==================== UPPER HALF-PLANE ====================

@dataclass(frozen=True, slots=True)
class UpperHalfPoint:
    x: mpf
    y: mpf

    def __post_init__(self):
        object.__setattr__(self, "x", mpf(self.x))
        object.__setattr__(self, "y", mpf(self.y))
        if not self.y > 0:
            raise InvalidParameterError(f"point must lie in the upper half-plane, got y={self.y}")

    def as_complex(self) -> mpc:
        return mpc(self.x, self.y)


def hyperbolic_distance(z1: UpperHalfPoint, z2: UpperHalfPoint) -> mpf:
    with mp.workdps(settings.geometry_dps):
        dx, dy = z1.x - z2.x, z1.y - z2.y
        return mp.acosh(1 + (dx * dx + dy * dy) / (2 * z1.y * z2.y))
