# cuspfreq/cf.py
"""
Classical and (a,b)-continued fractions.

The (a,b) expansion of x is produced by

    x_0 = x,  a_j = [x_j]_{a,b},  x_{j+1} = -1 / (x_j - a_j)

so that x = a_0 - 1/(a_1 - 1/(a_2 - ...)). Both expansions are available
as generators (iter_ab, iter_classical) for callers that only want a prefix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional, Sequence

from .arith import (
    INF,
    MoebiusMap,
    Number,
    Ordering,
    as_number,
    compare,
    floor_number,
    is_infinite,
    moebius_apply,
)
from .config import settings
from .errors import (
    InsufficientQuotientsError,
    InvalidParameterError,
    PrecisionExhaustedError,
)
from .models import Flavor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CFParams:
    a: Number
    b: Number
    flavor: Flavor = Flavor.AB

    def __post_init__(self):
        if self.flavor is Flavor.CLASSICAL:
            return
        a, b = self.a, self.b
        admissible = (
            compare(a, -1) is not Ordering.LESS
            and compare(a, 0) is Ordering.LESS
            and compare(b, 0) is Ordering.GREATER
            and compare(b, 1) is not Ordering.GREATER
            and compare(b - a, 1) is not Ordering.LESS
        )
        if not admissible:
            raise InvalidParameterError(
                "(a,b) must satisfy -1 <= a < 0 < b <= 1 and b - a >= 1"
            )

    @classmethod
    def ab(cls, a, b) -> "CFParams":
        return cls(as_number(a), as_number(b), Flavor.AB)

    @classmethod
    def classical(cls) -> "CFParams":
        return cls(Fraction(0), Fraction(1), Flavor.CLASSICAL)

    @property
    def is_minus_one_one(self) -> bool:
        return self.flavor is Flavor.AB and self.a == -1 and self.b == 1


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    index: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class CFExpansion:
    params: CFParams
    quotients: tuple[int, ...]
    terminated: bool = False
    precision_exhausted: bool = False
    source: Optional[Number] = None
    remainders: tuple = field(default=(), repr=False)

    @property
    def flavor(self) -> Flavor:
        return self.params.flavor

    def __len__(self):
        return len(self.quotients)

    @cached_property
    def convergent_table(self) -> tuple[Convergent, ...]:
        return tuple(_convergents(self.quotients, self.flavor))


# ==================== DIGIT MAPS ====================

def generalized_floor(x: Number, params: CFParams) -> int:
    """[x]_{a,b}: [x - a] below a, 0 on [a, b), [x - b] + 1 from b on."""
    if is_infinite(x):
        raise InvalidParameterError("the integral part of infinity is undefined")
    if compare(x, params.a) is Ordering.LESS:
        return floor_number(x - params.a)
    if compare(x, params.b) is Ordering.LESS:
        return 0
    return floor_number(x - params.b) + 1


def _is_integral(x: Number) -> bool:
    return isinstance(x, Fraction) and x.denominator == 1


def iter_ab(x: Number, params: CFParams) -> Iterator[tuple[int, Number]]:
    """Yields (a_j, x_j) until x_j - a_j = 0; raises PrecisionExhaustedError on ambiguity."""
    if params.flavor is not Flavor.AB:
        raise InvalidParameterError("iter_ab needs (a,b) parameters")
    x = as_number(x)
    if is_infinite(x):
        raise InvalidParameterError("cannot expand infinity")
    while True:
        if _is_integral(x):
            # integral remainders close the expansion with themselves
            yield int(x), x
            return
        digit = generalized_floor(x, params)
        yield digit, x
        rest = x - digit
        if isinstance(rest, Fraction) and rest == 0:
            return
        x = -1 / rest


def iter_classical(x: Number) -> Iterator[tuple[int, Number]]:
    x = as_number(x)
    if is_infinite(x):
        raise InvalidParameterError("cannot expand infinity")
    while True:
        digit = floor_number(x)
        yield digit, x
        rest = x - digit
        if isinstance(rest, Fraction) and rest == 0:
            return
        x = 1 / rest


def _collect(source: Number, params: CFParams, stream: Iterator, max_terms: int) -> CFExpansion:
    if max_terms < 1:
        raise InvalidParameterError("max_terms must be at least 1")
    quotients, remainders = [], []
    terminated = exhausted = False
    try:
        for digit, remainder in stream:
            quotients.append(digit)
            remainders.append(remainder)
            if len(quotients) >= max_terms:
                terminated = isinstance(remainder, Fraction) and remainder == digit
                break
        else:
            terminated = True
    except PrecisionExhaustedError as exc:
        exhausted = True
        logger.debug("Expansion stopped after %d terms: %s", len(quotients), exc.detail)
    return CFExpansion(
        params=params,
        quotients=tuple(quotients),
        terminated=terminated,
        precision_exhausted=exhausted,
        source=source,
        remainders=tuple(remainders),
    )


def expand_ab(x: Number, params: CFParams, max_terms: Optional[int] = None) -> CFExpansion:
    max_terms = settings.MAX_TERMS if max_terms is None else max_terms
    x = as_number(x)
    return _collect(x, params, iter_ab(x, params), max_terms)


def expand_classical(x: Number, max_terms: Optional[int] = None) -> CFExpansion:
    max_terms = settings.MAX_TERMS if max_terms is None else max_terms
    x = as_number(x)
    return _collect(x, CFParams.classical(), iter_classical(x), max_terms)


# ==================== CONVERGENTS ====================

def _convergents(quotients: Sequence[int], flavor: Flavor) -> Iterator[Convergent]:
    s = 1 if flavor is Flavor.CLASSICAL else -1
    p_prev2, p_prev1 = 0, 1
    q_prev2, q_prev1 = (1 if s == 1 else -1), 0
    for j, digit in enumerate(quotients):
        p = digit * p_prev1 + s * p_prev2
        q = digit * q_prev1 + s * q_prev2
        p_prev2, p_prev1, q_prev2, q_prev1 = p_prev1, p, q_prev1, q
        if q < 0:
            p, q = -p, -q
        yield Convergent(p, q, j)


def convergents(e: CFExpansion, k: int) -> list[Convergent]:
    """The first k convergents p_j/q_j, normalized to q_j > 0."""
    if k > len(e.quotients):
        raise InsufficientQuotientsError(f"expansion has {len(e.quotients)} quotients, {k} requested")
    return list(e.convergent_table[:k])


def fold(quotients: Sequence[int], flavor: Flavor) -> Number:
    """Exact value of a finite expansion (projectively, so zero tails are fine)."""
    value = INF
    for digit in reversed(quotients):
        if flavor is Flavor.CLASSICAL:
            step = MoebiusMap(digit, 1, 1, 0)
        else:
            step = MoebiusMap(digit, -1, 1, 0)
        value = moebius_apply(step, value)
    return value


# ==================== CONVERSIONS ====================

def classical_to_alternating(e: CFExpansion) -> CFExpansion:
    """(-1)^j a_j: the (-1,1) digits of a non-negative x from its classical digits."""
    if e.flavor is not Flavor.CLASSICAL:
        raise InvalidParameterError("classical_to_alternating needs a classical expansion")
    quotients = tuple(-digit if j % 2 else digit for j, digit in enumerate(e.quotients))
    return CFExpansion(
        params=CFParams.ab(-1, 1),
        quotients=quotients,
        terminated=e.terminated,
        precision_exhausted=e.precision_exhausted,
        source=e.source,
    )


def modified_quotients(e: CFExpansion, xi) -> CFExpansion:
    """Keeps a_j above xi (|a_j| for the (a,b) flavor) and replaces the rest by 1."""
    if not xi > 1:
        raise InvalidParameterError(f"xi must exceed 1, got {xi}")
    if e.flavor is Flavor.CLASSICAL:
        kept = tuple(digit if digit > xi else 1 for digit in e.quotients)
    else:
        kept = tuple(digit if abs(digit) > xi else 1 for digit in e.quotients)
    return CFExpansion(params=e.params, quotients=kept, terminated=e.terminated,
                       precision_exhausted=e.precision_exhausted, source=e.source)


def nearest_integer_cf(x: Fraction, max_terms: Optional[int] = None) -> list[int]:
    """Hurwitz nearest-integer digits of a rational, in integer arithmetic only."""
    max_terms = settings.MAX_TERMS if max_terms is None else max_terms
    p, q = x.numerator, x.denominator
    digits = []
    while len(digits) < max_terms:
        digit = (2 * p + q) // (2 * q)
        digits.append(digit)
        rest = p - digit * q
        if rest == 0:
            break
        p, q = -q, rest
        if q < 0:
            p, q = -p, -q
    return digits
