# cuspfreq/geodesics.py
"""
Geodesics in the upper half-plane and their (a,b) coding.

A reduced geodesic crosses the unit half-circle C; one step of the coding,
ST^{-a_j}, carries it to the next reduced lift, and the return time t_j is
the hyperbolic length of the segment between C and a_j + C. All geometry is
evaluated with mpmath from the exact endpoint data and never feeds back into
the digit computation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, Optional

from mpmath import mp, mpf

from .arith import (
    S,
    MoebiusMap,
    Number,
    Ordering,
    Surd,
    UpperHalfPoint,
    compare,
    conjugate,
    is_exact,
    is_infinite,
    moebius_apply,
    sign,
    to_mpf,
)
from .cf import CFExpansion, CFParams, generalized_floor
from .config import settings
from .errors import (
    IndeterminateError,
    InsufficientQuotientsError,
    InvalidParameterError,
    NoIntersectionError,
    PrecisionExhaustedError,
    ReductionFailedError,
    UnavailableError,
)
from .models import BoundaryX, ExcursionThresholds, ThresholdVerdict

logger = logging.getLogger(__name__)

# hyperbolic length of the arc of C from i to 1/2 + (sqrt(3)/2) i
with mp.workdps(50):
    C_PRIME = mp.log(3) / 2


# ==================== GEODESICS ====================

@dataclass(frozen=True)
class Geodesic:
    """Oriented geodesic from the repelling endpoint u to the attracting endpoint w."""
    u: Number
    w: Number

    def __post_init__(self):
        if compare(self.u, self.w) is Ordering.EQUAL:
            raise InvalidParameterError("geodesic endpoints must differ")

    @property
    def is_vertical(self) -> bool:
        return is_infinite(self.u) or is_infinite(self.w)

    @property
    def center(self) -> mpf:
        if self.is_vertical:
            raise InvalidParameterError("vertical geodesics have no center")
        return (to_mpf(self.u) + to_mpf(self.w)) / 2

    @property
    def apex(self) -> mpf:
        if self.is_vertical:
            return mp.inf
        return abs(to_mpf(self.w) - to_mpf(self.u)) / 2

    @property
    def span(self) -> tuple[mpf, mpf]:
        """Left and right feet of the half-circle."""
        u, w = to_mpf(self.u), to_mpf(self.w)
        return (u, w) if u < w else (w, u)

    def moved(self, m: MoebiusMap) -> "Geodesic":
        return Geodesic(moebius_apply(m, self.u), moebius_apply(m, self.w))


def repelling_endpoint(w: Number) -> Number:
    """Conjugate for quadratic surds, w - 3 otherwise."""
    if isinstance(w, Surd):
        return conjugate(w)
    return w - 3


def geodesic_towards(w: Number, u: Optional[Number] = None) -> Geodesic:
    return Geodesic(repelling_endpoint(w) if u is None else u, w)


def cross_section_point(g: Geodesic, shift: int = 0) -> UpperHalfPoint:
    """Intersection of g with the unit half-circle centred at `shift` (C when shift = 0)."""
    with mp.workdps(max(mp.dps, settings.geometry_dps)):
        if g.is_vertical:
            s = mpf(shift)
            offset = to_mpf(g.w if is_infinite(g.u) else g.u) - s
        else:
            offset = _crossing_offset(g, shift)
        y_squared = 1 - offset * offset
        if not y_squared > 0:
            raise NoIntersectionError(f"geodesic ({g.u}, {g.w}) misses the circle at {shift}")
        return UpperHalfPoint(shift + offset, mp.sqrt(y_squared))


def _crossing_offset(g: Geodesic, shift: int) -> mpf:
    """
    x - shift at the crossing, -((s-u)(s-w) + 1) / (2s - u - w).

    Evaluated on the exact endpoints when they share a number field, so that
    huge partial quotients do not cancel away the working precision.
    """
    s = Fraction(shift)
    u, w = g.u, g.w
    if not (is_exact(u) and is_exact(w)) or (
            isinstance(u, Surd) and isinstance(w, Surd) and u.d != w.d):
        u, w = to_mpf(u), to_mpf(w)
        s = mpf(shift)
    denominator = 2 * s - u - w
    if denominator == 0:
        raise NoIntersectionError("geodesic is concentric with the cross-section circle")
    return to_mpf(-((s - u) * (s - w) + 1) / denominator)


def arc_coordinate(g: Geodesic, z: UpperHalfPoint) -> mpf:
    """
    log tan(theta/2) of a point of a half-circle geodesic, theta measured from
    the right foot; differences are hyperbolic lengths along g.
    """
    left, right = g.span
    if 2 * z.x >= left + right:
        return mp.log(z.y / (z.x - left))
    return mp.log((right - z.x) / z.y)


def segment_length(g: Geodesic, z1: UpperHalfPoint, z2: UpperHalfPoint) -> mpf:
    """Hyperbolic length of the arc of g between two of its points."""
    with mp.workdps(settings.geometry_dps):
        if g.is_vertical:
            return abs(mp.log(z2.y / z1.y))
        return abs(arc_coordinate(g, z1) - arc_coordinate(g, z2))


def unit_circle_arc(theta1, theta2) -> mpf:
    """Hyperbolic length of the arc of C between two angles."""
    with mp.workdps(settings.geometry_dps):
        lo, hi = sorted((mpf(theta1), mpf(theta2)))
        return mp.log(mp.tan(hi / 2)) - mp.log(mp.tan(lo / 2))


def time_above(g: Geodesic, d, window: Optional[tuple[UpperHalfPoint, UpperHalfPoint]] = None) -> mpf:
    """
    Hyperbolic length of the part of g above the line y = d.

    Without a window this is 2 log((R/d)(1 + sqrt(1 - d^2/R^2))) for apex
    R >= d. With a window (two points on g) only the arc between them counts.
    """
    with mp.workdps(settings.geometry_dps):
        d = mpf(d)
        if not d > 0:
            raise InvalidParameterError("height d must be positive")
        if g.is_vertical:
            if window is None:
                return mp.inf
            ys = sorted((window[0].y, window[1].y))
            lo = max(ys[0], d)
            return mp.log(ys[1] / lo) if ys[1] > lo else mpf(0)
        radius = g.apex
        if radius <= d:
            return mpf(0)
        # the arc above y = d is |log tan(theta/2)| <= half
        half = mp.log((radius + mp.sqrt(radius * radius - d * d)) / d)
        if window is None:
            return 2 * half
        lo, hi = sorted((arc_coordinate(g, window[0]), arc_coordinate(g, window[1])))
        inside = min(hi, half) - max(lo, -half)
        return inside if inside > 0 else mpf(0)


# ==================== REDUCTION ====================

def _rectangle_status(u: mpf, lower: Optional[mpf], upper: Optional[mpf], tol: float) -> int:
    """1 inside, 0 within tol outside an estimated edge, -1 outside."""
    status = 1
    if lower is not None and u < lower:
        status = 0 if u >= lower - tol else -1
    if upper is not None and u > upper:
        status = min(status, 0 if u <= upper + tol else -1)
    return status


def is_reduced(g: Geodesic, params: CFParams, bx: Optional[BoundaryX] = None) -> bool:
    """
    Membership of (u, w) in Lambda_{a,b}.

    (-1,1) uses the exact rule |w| > 1 and -1 < sgn(w) u < 0. Other pairs use
    the four rectangles bounded by 0, -1/a, -1/(b-1), -1/(a+1), -1/b (exact) and
    -1/x_a^+-, -1/x_b^+- (estimated); a point within bx.error of an estimated
    edge raises IndeterminateError.
    """
    if g.is_vertical:
        return False
    u, w = g.u, g.w
    if params.is_minus_one_one:
        s = sign(w)
        return (compare(s * w, 1) is Ordering.GREATER
                and compare(s * u, -1) is Ordering.GREATER
                and compare(s * u, 0) is Ordering.LESS)
    if bx is None:
        raise UnavailableError("boundary x-coordinates are required to test reduction")
    a, b = params.a, params.b
    su = sign(u)
    uf = to_mpf(u)
    statuses = []
    if sign(w) > 0:
        if su < 0 and compare(w, -1 / a) is not Ordering.LESS:
            statuses.append(_rectangle_status(uf, mpf(-1 / bx.x_a_minus), None, bx.error))
        if su > 0 and b != 1 and compare(w, -1 / (b - 1)) is not Ordering.LESS:
            statuses.append(_rectangle_status(uf, None, mpf(-1 / bx.x_b_minus), bx.error))
    else:
        if su < 0 and a != -1 and compare(w, -1 / (a + 1)) is not Ordering.GREATER:
            statuses.append(_rectangle_status(uf, mpf(-1 / bx.x_a_plus), None, bx.error))
        if su > 0 and compare(w, -1 / b) is not Ordering.GREATER:
            statuses.append(_rectangle_status(uf, None, mpf(-1 / bx.x_b_plus), bx.error))
    if 1 in statuses:
        return True
    if 0 in statuses:
        raise IndeterminateError(f"({u}, {w}) lies within {bx.error:g} of a reduced-region edge")
    return False


def coding_step(digit: int) -> MoebiusMap:
    """ST^{-a}."""
    return S @ MoebiusMap.translation(-digit)


def reduce_geodesic(g: Geodesic, params: CFParams, bx: Optional[BoundaryX] = None,
                    cap: Optional[int] = None) -> tuple[Geodesic, MoebiusMap, int]:
    """Applies ST^{-a_j} along the expansion of w until the geodesic is reduced."""
    cap = settings.REDUCTION_CAP if cap is None else cap
    word = MoebiusMap.identity()
    current = g
    for n in range(cap + 1):
        if is_infinite(current.w) or is_infinite(current.u):
            raise ReductionFailedError(f"expansion of the attracting endpoint ran out after {n} steps")
        try:
            if is_reduced(current, params, bx):
                logger.debug("Geodesic reduced after %d steps", n)
                return current, word, n
        except IndeterminateError:
            # within resolution of an estimated edge: accepted as reduced
            logger.debug("Accepting geodesic at step %d within boundary resolution", n)
            return current, word, n
        step = coding_step(generalized_floor(current.w, params))
        current = current.moved(step)
        word = step @ word
    raise ReductionFailedError(f"geodesic not reduced within {cap} steps")


# ==================== RETURNS ====================

@dataclass(frozen=True)
class ReducedOrbit:
    params: CFParams
    geodesics: tuple[Geodesic, ...]
    quotients: tuple[int, ...] = ()
    cross_points: tuple[UpperHalfPoint, ...] = ()
    exit_points: tuple[UpperHalfPoint, ...] = ()
    return_times: tuple = ()

    @property
    def current(self) -> Geodesic:
        return self.geodesics[-1]

    def __len__(self):
        return len(self.quotients)


def start_orbit(g: Geodesic, params: CFParams) -> ReducedOrbit:
    return ReducedOrbit(params=params, geodesics=(g,))


@dataclass(frozen=True)
class ReturnStep:
    geodesic: Geodesic
    quotient: int
    entry: UpperHalfPoint
    exit: UpperHalfPoint
    return_time: mpf
    following: Geodesic


def return_step(g: Geodesic, params: CFParams) -> ReturnStep:
    """Segment of g between C and a_j + C, and the next lift ST^{-a_j} g."""
    if g.is_vertical:
        raise ReductionFailedError("the coding of a rational endpoint has ended")
    digit = generalized_floor(g.w, params)
    entry = cross_section_point(g)
    exit_ = cross_section_point(g, digit)
    return ReturnStep(
        geodesic=g,
        quotient=digit,
        entry=entry,
        exit=exit_,
        return_time=segment_length(g, entry, exit_),
        following=g.moved(coding_step(digit)),
    )


def next_reduced(state: ReducedOrbit) -> ReducedOrbit:
    """One return: records a_j, z_j, t_j and appends ST^{-a_j} of the current lift."""
    step = return_step(state.current, state.params)
    return replace(
        state,
        geodesics=state.geodesics + (step.following,),
        quotients=state.quotients + (step.quotient,),
        cross_points=state.cross_points + (step.entry,),
        exit_points=state.exit_points + (step.exit,),
        return_times=state.return_times + (step.return_time,),
    )


def iter_returns(state: ReducedOrbit, count: int) -> Iterator[ReducedOrbit]:
    for _ in range(count):
        state = next_reduced(state)
        yield state


# ==================== THRESHOLDS ====================

def excursion_thresholds(d, params: CFParams, bx: Optional[BoundaryX], *,
                         conservative: bool = False) -> ExcursionThresholds:
    """
    Cut-offs on a_j deciding whether the return reaches height d.

    With conservative=True every estimated x-coordinate is moved by bx.error
    so that the lower cut-offs can only shrink and the upper ones only grow.
    """
    if bx is None:
        raise UnavailableError("excursion thresholds need boundary x-coordinates")
    a, b, d = float(to_mpf(params.a)), float(to_mpf(params.b)), float(d)
    err = bx.error if conservative else 0.0
    return ExcursionThresholds(
        d=d,
        lower_positive=2 * d - b - 1 / (bx.x_a_minus - err),
        upper_positive=2 * d - a - 1 / (bx.x_b_minus + err),
        lower_negative=2 * d + a + 1 / (bx.x_b_plus + err),
        upper_negative=2 * d + b + 1 / (bx.x_a_plus - err),
    )


def threshold_verdict(digit: int, thresholds: ExcursionThresholds) -> ThresholdVerdict:
    if digit > 0:
        lower, upper = thresholds.lower_positive, thresholds.upper_positive
    else:
        lower, upper = thresholds.lower_negative, thresholds.upper_negative
    size = abs(digit)
    if size < lower:
        return ThresholdVerdict.BELOW_LOWER
    if size > upper:
        return ThresholdVerdict.ABOVE_UPPER
    return ThresholdVerdict.INDETERMINATE_BAND


# ==================== (-1,1) RETURN TIMES ====================

def _log_return_factor(u: mpf, w: mpf) -> mpf:
    return mp.log(abs(w - u) * mp.sqrt(w * w - 1) / (w * w * mp.sqrt(1 - u * u)))


def return_time_closed_form_minus11(g: Geodesic, g_next: Geodesic) -> mpf:
    """t_j from the endpoints of two consecutive A-reduced lifts."""
    with mp.workdps(settings.geometry_dps):
        u, w = to_mpf(g.u), to_mpf(g.w)
        u1, w1 = to_mpf(g_next.u), to_mpf(g_next.w)
        return 2 * mp.log(abs(w)) + _log_return_factor(u, w) - _log_return_factor(u1, w1)


def return_time_bounds_minus11(e: CFExpansion, j: int, c, c_prime=None) -> tuple[float, float]:
    """Lower 2log|a_j| - c' and upper 2log|a_j| + 2(sum of the four neighbouring logs) + c."""
    if not e.params.is_minus_one_one:
        raise InvalidParameterError("return-time bounds apply to the (-1,1) expansion")
    if j < 2 or j + 2 >= len(e.quotients):
        raise InsufficientQuotientsError(f"index {j} needs two neighbours on each side")
    c_prime = float(C_PRIME) if c_prime is None else float(c_prime)
    q = e.quotients
    log_aj = math.log(abs(q[j]))
    neighbours = sum(math.log(abs(q[i])) for i in (j + 1, j - 1, j + 2, j - 2))
    return 2 * log_aj - c_prime, 2 * log_aj + 2 * neighbours + float(c)


# ==================== FUNDAMENTAL DOMAIN ORACLE ====================

def reduce_point(z: UpperHalfPoint, max_steps: int = 100000) -> tuple[UpperHalfPoint, MoebiusMap]:
    """Representative in {|z| >= 1, |x| <= 1/2} and the PSL(2,Z) word reaching it."""
    x, y = z.x, z.y
    word = MoebiusMap.identity()
    for _ in range(max_steps):
        n = int(mp.floor(x + mpf(1) / 2))
        if n:
            x -= n
            word = MoebiusMap.translation(-n) @ word
        norm = x * x + y * y
        if norm < 1:
            x, y = -x / norm, y / norm
            word = S @ word
        else:
            return UpperHalfPoint(x, y), word
    raise PrecisionExhaustedError("fundamental-domain reduction did not settle")


@dataclass(frozen=True)
class CuspTime:
    fraction: float
    time_inside: float
    length: float
    error_bound: float
    crossings: int
    components: int


def _sampler(g: Geodesic, start: UpperHalfPoint):
    """Unit-speed parametrization s -> point of g, starting at `start`, moving toward w."""
    if g.is_vertical:
        upward = is_infinite(g.w)
        return lambda s: UpperHalfPoint(start.x, start.y * (mp.exp(s) if upward else mp.exp(-s)))
    left, right = g.span
    radius = (right - left) / 2
    origin = arc_coordinate(g, start)
    towards = -1 if compare(g.w, g.u) is Ordering.GREATER else 1

    def point(s):
        tau = mp.exp(origin + towards * s)
        denominator = 1 + tau * tau
        # measured from the nearer foot
        if tau <= 1:
            x = right - 2 * radius * tau * tau / denominator
        else:
            x = left + 2 * radius / denominator
        return UpperHalfPoint(x, 2 * radius * tau / denominator)

    return point


def _count_cusp(point, length, d, step) -> CuspTime:
    samples = max(1, int(mp.ceil(length / step)))
    inside_time, crossings, components = mpf(0), 0, 0
    previous = None
    for k in range(samples):
        lo = k * step
        hi = min(length, lo + step)
        reduced, _ = reduce_point(point((lo + hi) / 2))
        inside = reduced.y > d
        if inside:
            inside_time += hi - lo
            if not previous:
                components += 1
        if previous is not None and inside != previous:
            crossings += 1
        previous = inside
    length = float(length)
    return CuspTime(
        fraction=float(inside_time / length) if length else 0.0,
        time_inside=float(inside_time),
        length=length,
        error_bound=step * (crossings + 1) / length if length else 0.0,
        crossings=crossings,
        components=components,
    )


def _oracle_dps(g: Geodesic, extra: int = 0) -> int:
    """Working digits so that sample abscissae keep their fractional part."""
    with mp.workdps(settings.geometry_dps):
        feet = [abs(to_mpf(e)) for e in (g.u, g.w) if not is_infinite(e)]
        magnitude = int(mp.log10(max(feet + [mpf(1)]))) + 1
    return settings.geometry_dps + magnitude + extra


def cusp_time_numeric(g: Geodesic, T, d, step=None) -> CuspTime:
    """
    Fraction of [0, T] that g spends above height d on the modular surface.

    Samples start where g meets C (at its apex when it misses C) and move
    toward w; each sample is reduced into the standard fundamental domain.
    """
    step = settings.ORACLE_STEP if step is None else step
    with mp.workdps(_oracle_dps(g, int(float(T)) + 10)):
        try:
            start = cross_section_point(g)
        except NoIntersectionError:
            if g.is_vertical:
                start = UpperHalfPoint(to_mpf(g.w if is_infinite(g.u) else g.u), 1)
            else:
                start = UpperHalfPoint(g.center, g.apex)
        return _count_cusp(_sampler(g, start), mpf(T), mpf(d), mpf(step))


def window_cusp_time(g: Geodesic, entry: UpperHalfPoint, exit_: UpperHalfPoint, d, step=None) -> CuspTime:
    """Oracle time above d on the segment of g between two of its points."""
    step = settings.ORACLE_STEP if step is None else step
    length = segment_length(g, entry, exit_)
    with mp.workdps(_oracle_dps(g)):
        return _count_cusp(_sampler(g, entry), length, mpf(d), mpf(step))
