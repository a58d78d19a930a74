# cuspfreq/excursions.py
"""
Cusp-excursion statistics along the coding of a geodesic.

Averages of log|a_j| (plain and with quotients at most xi replaced by 1),
checkpointed frequency profiles I_N^d, the classification into frequency 0,
frequency 1 and intermediate behaviour, and the constructors for very well
approximable and badly approximable test numbers.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from sympy import integer_nthroot

from .arith import Number, Surd, as_number, format_number, normalize_surd, to_mpf
from .cf import (
    CFExpansion,
    CFParams,
    _convergents,
    expand_ab,
    expand_classical,
    fold,
    modified_quotients,
)
from .config import settings
from .errors import (
    InsufficientQuotientsError,
    InvalidParameterError,
    PrecisionExhaustedError,
    ReductionFailedError,
    UnavailableError,
)
from .geodesics import (
    ReturnStep,
    excursion_thresholds,
    geodesic_towards,
    reduce_geodesic,
    return_step,
    threshold_verdict,
    time_above,
    window_cusp_time,
)
from .models import (
    BoundaryX,
    Checkpoint,
    Classification,
    ClassificationTag,
    ExcursionRecord,
    ExcursionThresholds,
    Flavor,
    FrequencyProfile,
    KhintchinEstimate,
    ProfileStatus,
    ThresholdVerdict,
    TrendTag,
    height_key,
)

logger = logging.getLogger(__name__)


# ==================== CESARO AVERAGES ====================

def _log_abs(digit: int) -> float:
    # a_0 may be 0; it contributes nothing
    return math.log(abs(digit)) if digit else 0.0


def _window(e: CFExpansion, n: int) -> Sequence[int]:
    if n < 1:
        raise InvalidParameterError("N must be at least 1")
    if e.flavor is Flavor.CLASSICAL:
        if len(e.quotients) < n + 1:
            raise InsufficientQuotientsError(f"need a_1..a_{n}, expansion has {len(e.quotients)} quotients")
        return e.quotients[1:n + 1]
    if len(e.quotients) < n:
        raise InsufficientQuotientsError(f"need a_0..a_{n - 1}, expansion has {len(e.quotients)} quotients")
    return e.quotients[:n]


def cesaro_log(e: CFExpansion, n: int) -> float:
    """A_N: indices 0..N-1 for (a,b) expansions, 1..N for classical ones."""
    return math.fsum(_log_abs(digit) for digit in _window(e, n)) / n


def cesaro_log_modified(e: CFExpansion, xi, n: int) -> float:
    return cesaro_log(modified_quotients(e, xi), n)


def checkpoint_schedule(n: int) -> list[int]:
    """10 * 2^k up to N, then N itself."""
    if n < 1:
        raise InvalidParameterError("N must be at least 1")
    schedule, k = [], 0
    while 10 * 2 ** k <= n:
        schedule.append(10 * 2 ** k)
        k += 1
    if not schedule or schedule[-1] != n:
        schedule.append(n)
    return schedule


def _trend(values: Sequence[float], tol: float, min_step: float) -> TrendTag:
    steps = [b - a for a, b in zip(values, values[1:])]
    if not steps:
        return TrendTag.OSCILLATING
    if all(step > 0 for step in steps) and steps[-1] >= min_step:
        return TrendTag.DIVERGING
    if abs(steps[-1]) <= tol:
        return TrendTag.CONVERGENT
    return TrendTag.OSCILLATING


def khintchin_exponent(e: CFExpansion, schedule: Optional[Sequence[int]] = None,
                       tol: Optional[float] = None) -> KhintchinEstimate:
    """A_N of a classical expansion along a schedule, with its trend."""
    if e.flavor is not Flavor.CLASSICAL:
        raise InvalidParameterError("the Khintchin exponent is defined on classical expansions")
    tol = settings.FREQUENCY_TOL if tol is None else tol
    schedule = list(schedule) if schedule else checkpoint_schedule(len(e.quotients) - 1)
    values = [cesaro_log(e, n) for n in schedule]
    return KhintchinEstimate(
        schedule=schedule,
        values=values,
        estimate=values[-1],
        trend=_trend(values, tol, settings.DIVERGENCE_MIN_STEP),
    )


# ==================== EXCURSION WALK ====================

@dataclass(frozen=True)
class Excursion:
    step: ReturnStep
    record: ExcursionRecord
    time_above: dict[str, float]
    oracle_time: Optional[dict[str, float]]
    oracle_error: Optional[dict[str, float]]


def nominal_thresholds(d, params: CFParams) -> ExcursionThresholds:
    """Cut-offs with the 1/x terms dropped, used where no boundary x-coordinates exist."""
    a, b, d = float(to_mpf(params.a)), float(to_mpf(params.b)), float(d)
    return ExcursionThresholds(
        d=d,
        lower_positive=2 * d - b,
        upper_positive=2 * d - a,
        lower_negative=2 * d + a,
        upper_negative=2 * d + b,
    )


def iter_excursions(g, params: CFParams, count: int, d_list: Sequence[float],
                    bx: Optional[BoundaryX] = None, oracle_step: Optional[float] = None,
                    start_index: int = 0) -> Iterator[Excursion]:
    """
    Walks `count` returns of the reduced geodesic g.

    Each return reports its time above every d inside the window between C and
    a_j + C. Threshold verdicts are attached when boundary x-coordinates are
    known; the fundamental-domain oracle runs when oracle_step is given.
    """
    thresholds = ({height_key(d): excursion_thresholds(d, params, bx, conservative=True) for d in d_list}
                  if bx else None)
    for j in range(start_index, start_index + count):
        step = return_step(g, params)
        window = (step.entry, step.exit)
        above = {height_key(d): float(time_above(step.geodesic, d, window)) for d in d_list}
        verdicts = None
        if thresholds is not None:
            verdicts = {key: threshold_verdict(step.quotient, t) for key, t in thresholds.items()}
        oracle_time = oracle_error = components = None
        if oracle_step is not None:
            oracle_time, oracle_error, components = {}, {}, {}
            for d in d_list:
                key = height_key(d)
                measured = window_cusp_time(step.geodesic, step.entry, step.exit, d, oracle_step)
                oracle_time[key] = measured.time_inside
                oracle_error[key] = measured.error_bound * measured.length
                components[key] = measured.components
        record = ExcursionRecord(
            index=j,
            quotient=step.quotient,
            apex_height=float(step.geodesic.apex),
            cross_height=float(step.entry.y),
            return_time=float(step.return_time),
            time_above=above,
            verdicts=verdicts,
            oracle_time=oracle_time,
            oracle_components=components,
        )
        yield Excursion(step, record, above, oracle_time, oracle_error)
        g = step.following


# ==================== FREQUENCY PROFILES ====================

class _Accumulator:
    """Running sums behind the checkpoint quantities."""

    def __init__(self, params: CFParams, d_list: Sequence[float], bx: Optional[BoundaryX], oracle: bool):
        self.keys = [height_key(d) for d in d_list]
        self.params = params
        if bx is not None:
            self.thresholds = {height_key(d): excursion_thresholds(d, params, bx, conservative=True)
                               for d in d_list}
        else:
            self.thresholds = {height_key(d): nominal_thresholds(d, params) for d in d_list}
        self.tail_cut = {height_key(d): 10 * math.log(d) if d > 1 else 0.0 for d in d_list}
        self.oracle = oracle
        self.n = 0
        self.total_time = 0.0
        self.above = dict.fromkeys(self.keys, 0.0)
        self.oracle_above = dict.fromkeys(self.keys, 0.0)
        self.oracle_error = dict.fromkeys(self.keys, 0.0)
        self.j_lower = dict.fromkeys(self.keys, 0)
        self.j_upper = dict.fromkeys(self.keys, 0)
        self.j_oracle = dict.fromkeys(self.keys, 0)
        self.tail_log = dict.fromkeys(self.keys, 0.0)
        self.tail_time = dict.fromkeys(self.keys, 0.0)
        self.floor = math.inf
        self.ceiling = 0.0

    def add(self, excursion: Excursion):
        record = excursion.record
        self.n += 1
        self.total_time += record.return_time
        self.floor = min(self.floor, record.cross_height)
        self.ceiling = max(self.ceiling, record.cross_height)
        for key in self.keys:
            self.above[key] += excursion.time_above[key]
            verdict = threshold_verdict(record.quotient, self.thresholds[key])
            if verdict is not ThresholdVerdict.BELOW_LOWER:
                self.j_lower[key] += 1
            if verdict is ThresholdVerdict.ABOVE_UPPER:
                self.j_upper[key] += 1
                self.tail_log[key] += _log_abs(record.quotient)
            if record.return_time > self.tail_cut[key]:
                self.tail_time[key] += record.return_time
            if self.oracle:
                self.oracle_above[key] += excursion.oracle_time[key]
                self.oracle_error[key] += excursion.oracle_error[key]
                if record.oracle_components[key]:
                    self.j_oracle[key] += 1

    def frequencies(self) -> dict[str, float]:
        if self.oracle and self.params.is_minus_one_one:
            source = self.oracle_above
        else:
            source = self.above
        return {key: min(1.0, value / self.total_time) for key, value in source.items()}

    def checkpoint(self, e: CFExpansion, xi_list: Sequence[float]) -> Checkpoint:
        n = self.n
        return Checkpoint(
            n=n,
            A=cesaro_log(e, n),
            A_xi={height_key(xi): cesaro_log_modified(e, xi, n) for xi in xi_list},
            S=self.total_time,
            I=self.frequencies(),
            I_oracle={k: min(1.0, v / self.total_time) for k, v in self.oracle_above.items()} if self.oracle else None,
            oracle_error={k: v / self.total_time for k, v in self.oracle_error.items()} if self.oracle else None,
            j_lower=dict(self.j_lower),
            j_upper=dict(self.j_upper),
            j_oracle=dict(self.j_oracle) if self.oracle else None,
            tail_log={k: v / n for k, v in self.tail_log.items()},
            tail_time={k: v / n for k, v in self.tail_time.items()},
        )


def _validate_lists(d_list: Sequence[float], xi_list: Sequence[float]):
    if any(d <= 0 for d in d_list):
        raise InvalidParameterError("heights d must be positive")
    if any(xi <= 1 for xi in xi_list):
        raise InvalidParameterError("xi values must exceed 1")


def frequency_profile(x: Number, params: CFParams, n: int, d_list: Sequence[float],
                      xi_list: Sequence[float], *, bx: Optional[BoundaryX] = None,
                      oracle_step: Optional[float] = None, schedule: Optional[Sequence[int]] = None,
                      u: Optional[Number] = None) -> FrequencyProfile:
    """
    Checkpointed averages for the geodesic with attracting endpoint x.

    Returns are counted from the first crossing of the reduced lift, which
    comes `reduction_steps` steps into the orbit; A_N and A_N^xi average the
    first N quotients of x. The step count is recorded in the profile. For the
    (-1,1) expansion the oracle measures I_N^d (it is switched on with the
    configured step when no step is given). A simulation that stops early
    raises with the partial profile attached as `partial`.
    """
    _validate_lists(d_list, xi_list)
    x = as_number(x)
    d_list, xi_list = sorted(d_list), sorted(xi_list)
    if params.is_minus_one_one and oracle_step is None:
        oracle_step = settings.ORACLE_STEP
    if not params.is_minus_one_one and bx is None:
        raise UnavailableError("boundary x-coordinates are needed to simulate this expansion")
    schedule = sorted(set(schedule)) if schedule else checkpoint_schedule(n)
    n = schedule[-1]
    e = expand_ab(x, params, max_terms=n + settings.REDUCTION_CAP + 1)

    profile = FrequencyProfile(
        x=format_number(x),
        flavor=Flavor.AB,
        a=format_number(params.a),
        b=format_number(params.b),
        status=ProfileStatus.COMPLETE,
        d_list=list(d_list),
        xi_list=list(xi_list),
        checkpoints=[],
    )
    if e.terminated and len(e.quotients) <= n:
        logger.info("Rational input %s has %d quotients; profile is degenerate", profile.x, len(e.quotients))
        return profile.model_copy(update={"status": ProfileStatus.DEGENERATE_RATIONAL})

    acc = _Accumulator(params, d_list, bx, oracle_step is not None)
    pending = list(schedule)
    try:
        reduced, _, steps = reduce_geodesic(geodesic_towards(x, u), params, bx)
        profile.reduction_steps = steps
        logger.debug("Profile of %s starts after %d reduction steps", profile.x, steps)
        for excursion in iter_excursions(reduced, params, n, d_list, bx, oracle_step):
            acc.add(excursion)
            if acc.n == pending[0]:
                profile.checkpoints.append(acc.checkpoint(e, xi_list))
                pending.pop(0)
    except (PrecisionExhaustedError, ReductionFailedError, InsufficientQuotientsError) as exc:
        exc.partial = _finish(profile, acc, ProfileStatus.PARTIAL, exc.detail)
        raise
    return _finish(profile, acc, ProfileStatus.COMPLETE, None)


def _finish(profile: FrequencyProfile, acc: _Accumulator, status: ProfileStatus,
            stopped: Optional[str]) -> FrequencyProfile:
    return profile.model_copy(update={
        "status": status,
        "stopped": stopped,
        "cross_section_floor": acc.floor if acc.n else None,
        "cross_section_ceiling": acc.ceiling if acc.n else None,
    })


def classical_profile(x: Number, n: int, xi_list: Sequence[float],
                      schedule: Optional[Sequence[int]] = None) -> FrequencyProfile:
    """A_N and A_N^xi from classical quotients only."""
    _validate_lists([], xi_list)
    x = as_number(x)
    xi_list = sorted(xi_list)
    schedule = sorted(set(schedule)) if schedule else checkpoint_schedule(n)
    e = expand_classical(x, max_terms=schedule[-1] + 1)
    status = ProfileStatus.COMPLETE
    if e.terminated and len(e.quotients) <= schedule[-1]:
        status = ProfileStatus.DEGENERATE_RATIONAL
        schedule = []
    elif len(e.quotients) <= schedule[-1]:
        status = ProfileStatus.PARTIAL
        schedule = [k for k in schedule if k < len(e.quotients)]
    checkpoints = [
        Checkpoint(
            n=k,
            A=cesaro_log(e, k),
            A_xi={height_key(xi): cesaro_log_modified(e, xi, k) for xi in xi_list},
        )
        for k in schedule
    ]
    return FrequencyProfile(
        x=format_number(x),
        flavor=Flavor.CLASSICAL,
        status=status,
        d_list=[],
        xi_list=list(xi_list),
        checkpoints=checkpoints,
        stopped="precision-exhausted" if e.precision_exhausted else None,
    )


# ==================== CLASSIFICATION ====================

def _non_increasing(values: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))


def classify(p: FrequencyProfile, tol: Optional[float] = None) -> Classification:
    """
    Frequency 0 when some A_N^xi ends at or below tol without rising over the
    last checkpoints; frequency 1 when A_N rises at every checkpoint and still
    by at least DIVERGENCE_MIN_STEP at the end; intermediate when I_N^d settles
    inside (tol, 1 - tol); undetermined otherwise.
    """
    tol = settings.FREQUENCY_TOL if tol is None else tol
    sampled = list(p.d_list)
    if p.status is ProfileStatus.DEGENERATE_RATIONAL or len(p.checkpoints) < 3:
        return Classification(tag=ClassificationTag.UNDETERMINED, sampled_d=sampled)
    tail = p.checkpoints[-3:]

    for xi in p.xi_list:
        key = height_key(xi)
        values = [c.A_xi[key] for c in tail]
        if values[-1] <= tol and _non_increasing(values):
            return Classification(tag=ClassificationTag.FREQUENCY_0,
                                  witness={"xi": xi, "A_xi": values[-1]}, sampled_d=sampled)

    averages = [c.A for c in p.checkpoints]
    steps = [b - a for a, b in zip(averages, averages[1:])]
    if all(step > 0 for step in steps) and steps[-1] >= settings.DIVERGENCE_MIN_STEP:
        return Classification(tag=ClassificationTag.FREQUENCY_1,
                              witness={"A": averages[-1], "increment": steps[-1]}, sampled_d=sampled)

    for d in p.d_list:
        key = height_key(d)
        values = [c.I[key] for c in tail if key in c.I]
        if len(values) == len(tail) and tol < values[-1] < 1 - tol and abs(values[-1] - values[-2]) <= tol:
            return Classification(tag=ClassificationTag.INTERMEDIATE,
                                  witness={"d": d, "I": values[-1]}, sampled_d=sampled)
    return Classification(tag=ClassificationTag.UNDETERMINED, sampled_d=sampled)


# ==================== CONSTRUCTIONS ====================

def construct_vwa(eps, a0: int = 0, a1: int = 1, n: int = 5) -> CFExpansion:
    """Classical quotients with a_{j+1} = [q_j^eps] + 1, eps a positive rational."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    if a1 < 1:
        raise InvalidParameterError("a1 must be a positive integer")
    if n < 2:
        raise InvalidParameterError("N must be at least 2")
    s, t = eps.numerator, eps.denominator
    quotients = [a0, a1]
    q_prev, q = 1, a1
    while len(quotients) < n:
        digit = int(integer_nthroot(q ** s, t)[0]) + 1
        quotients.append(digit)
        q_prev, q = q, digit * q + q_prev
    quotients = tuple(quotients)
    return CFExpansion(
        params=CFParams.classical(),
        quotients=quotients,
        terminated=False,
        source=fold(quotients, Flavor.CLASSICAL),
    )


def vwa_certificate(e: CFExpansion, eps) -> list[bool]:
    """
    For every convergent p_j/q_j, whether |x - p_j/q_j| < q_j^{-(2+eps)}.

    x is the exact rational value of `e`; with eps = s/t the test is
    |x - p_j/q_j|^t * q_j^{2t+s} < 1 in Fraction arithmetic.
    """
    if e.flavor is not Flavor.CLASSICAL:
        raise InvalidParameterError("the certificate uses classical convergents")
    if not isinstance(e.source, Fraction):
        raise InvalidParameterError("the certificate needs the exact rational value of the expansion")
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    s, t = eps.numerator, eps.denominator
    x = e.source
    return [abs(x - Fraction(c.p, c.q)) ** t * c.q ** (2 * t + s) < 1 for c in e.convergent_table]


def construct_badly_approximable(period: Sequence[int]) -> Surd:
    """The quadratic surd whose classical expansion is the given period repeated."""
    if not period or any(digit < 1 for digit in period):
        raise InvalidParameterError("period entries must be positive integers")
    table = list(_convergents(period, Flavor.CLASSICAL))
    big_p, big_q = table[-1].p, table[-1].q
    if len(table) > 1:
        prev_p, prev_q = table[-2].p, table[-2].q
    else:
        prev_p, prev_q = 1, 0
    # x = (P x + P') / (Q x + Q')  =>  Q x^2 + (Q' - P) x - P' = 0
    linear = prev_q - big_p
    disc = linear * linear + 4 * big_q * prev_p
    return normalize_surd(-linear, 1, disc, 2 * big_q)
