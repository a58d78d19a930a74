# cuspfreq/services.py
import logging
import math
from typing import Iterator, Optional, Sequence

import numpy as np
from tqdm import tqdm

from .arith import Number, Surd, as_number, format_number
from .cf import (
    CFExpansion,
    CFParams,
    classical_to_alternating,
    convergents,
    expand_ab,
    expand_classical,
    modified_quotients,
)
from .config import settings
from .errors import (
    CuspfreqError,
    ExtractionFailedError,
    InvalidParameterError,
    UnavailableError,
)
from .excursions import (
    classical_profile,
    classify,
    construct_badly_approximable,
    construct_vwa,
    frequency_profile,
    iter_excursions,
    khintchin_exponent,
    vwa_certificate,
)
from .fixtures import fixture_store
from .geodesics import (
    Geodesic,
    cross_section_point,
    geodesic_towards,
    reduce_geodesic,
    return_time_bounds_minus11,
    return_time_closed_form_minus11,
)
from .models import (
    AttractorSummary,
    BoundaryX,
    CalibrationFixture,
    ConstructionDocument,
    ConvergentOut,
    ConvertDocument,
    EndpointCycleOut,
    ExcursionRecord,
    ExpansionDocument,
    FrequencyDocument,
    OrbitDocument,
    OrbitOut,
    ReduceDocument,
    SimulationSummary,
    height_key,
)
from .natural_extension import (
    attractor_approx,
    boundary_sets,
    count_components,
    detect_cycles,
    extract_boundary_x,
    forward_invariance,
)

logger = logging.getLogger(__name__)

# Boundary x-coordinates computed on the fly, keyed by (a, b, grid, iters)
_boundary_cache: dict[tuple, BoundaryX] = {}


def _convergents_out(table) -> list[ConvergentOut]:
    return [ConvergentOut(index=c.index, p=str(c.p), q=str(c.q)) for c in table]


# ==================== CALIBRATION DATA ====================

def get_boundary_x(params: CFParams, grid: Optional[float] = None,
                   iters: Optional[int] = None) -> tuple[Optional[BoundaryX], Optional[CalibrationFixture]]:
    """
    Boundary x-coordinates for params, from the fixture store when a
    calibration exists, otherwise from a fresh attractor run (cached).
    (-1,1) needs none: its reduced region is given in closed form.
    """
    if params.is_minus_one_one:
        return None, fixture_store.load(params)
    fixture = fixture_store.load(params)
    if fixture is not None and fixture.boundary_x is not None:
        return fixture.boundary_x, fixture
    key = (format_number(params.a), format_number(params.b), grid, iters)
    if key not in _boundary_cache:
        logger.info("No calibration for (%s, %s); extracting boundary x-coordinates", *key[:2])
        levels = boundary_sets(detect_cycles(params))
        cloud = attractor_approx(params, grid, iters, levels=levels)
        bx = extract_boundary_x(cloud, levels, params)
        if not bx.signs_hold():
            raise ExtractionFailedError(f"extracted boundary x-coordinates have the wrong signs: {bx}")
        _boundary_cache[key] = bx
    return _boundary_cache[key], fixture


# ==================== EXPANSIONS ====================

def expansion_document(x: Number, params: Optional[CFParams], max_terms: Optional[int] = None,
                       with_convergents: bool = False) -> ExpansionDocument:
    if params is None:
        e = expand_classical(x, max_terms)
    else:
        e = expand_ab(x, params, max_terms)
    return ExpansionDocument(
        flavor=e.flavor,
        a=None if params is None else format_number(params.a),
        b=None if params is None else format_number(params.b),
        x=format_number(x),
        quotients=list(e.quotients),
        terminated=e.terminated,
        precision_exhausted=e.precision_exhausted,
        convergents=_convergents_out(e.convergent_table) if with_convergents else None,
    )


def convert_document(x: Number, max_terms: Optional[int] = None,
                     xi_list: Sequence[float] = ()) -> ConvertDocument:
    """Classical digits, their sign alternation and the (-1,1) digits side by side."""
    classical = expand_classical(x, max_terms)
    alternating = classical_to_alternating(classical)
    minus_one_one = expand_ab(x, CFParams.ab(-1, 1), max_terms)
    modified = None
    if xi_list:
        modified = {height_key(xi): list(modified_quotients(classical, xi).quotients) for xi in xi_list}
    return ConvertDocument(
        x=format_number(x),
        classical=list(classical.quotients),
        alternating=list(alternating.quotients),
        minus_one_one=list(minus_one_one.quotients),
        identical=alternating.quotients == minus_one_one.quotients,
        modified=modified,
    )


# ==================== NATURAL EXTENSION ====================

def orbit_document(params: CFParams, cap: Optional[int] = None, with_levels: bool = True) -> OrbitDocument:
    report = detect_cycles(params, cap)

    def endpoint(cycle) -> EndpointCycleOut:
        return EndpointCycleOut(
            tag=cycle.tag,
            cycle_end=None if cycle.cycle_end is None else format_number(cycle.cycle_end),
            m=cycle.m,
            k=cycle.k,
        )

    levels = None
    if with_levels:
        try:
            sets = boundary_sets(report)
            levels = {
                "lower": [format_number(v) for v in sets.lower],
                "upper": [format_number(v) for v in sets.upper],
            }
        except UnavailableError as e:
            logger.warning("Level sets skipped: %s", e.detail)
    return OrbitDocument(
        a=format_number(params.a),
        b=format_number(params.b),
        cap=report.cap,
        verdict=report.verdict,
        endpoint_a=endpoint(report.endpoint_a),
        endpoint_b=endpoint(report.endpoint_b),
        orbits=[
            OrbitOut(
                seed=orbit.seed,
                orbit=[format_number(v) for v in orbit.orbit],
                outcome=orbit.outcome,
                preperiod=orbit.preperiod,
                period=orbit.period,
            )
            for orbit in report.orbits
        ],
        levels=levels,
    )


def attractor_summary(params: CFParams, grid: Optional[float] = None, iters: Optional[int] = None,
                      override: bool = False) -> tuple[AttractorSummary, np.ndarray]:
    """Summary of the iterated cloud plus the cloud itself (backward, forward) for CSV export."""
    levels = None
    report = detect_cycles(params)
    try:
        levels = boundary_sets(report)
    except UnavailableError:
        if not override:
            raise
    cloud = attractor_approx(params, grid, iters, override=override, levels=levels)
    bx = None
    if levels is not None:
        try:
            bx = extract_boundary_x(cloud, levels, params)
        except ExtractionFailedError as e:
            logger.warning("Boundary x-coordinates unavailable: %s", e.detail)
    summary = AttractorSummary(
        a=format_number(params.a),
        b=format_number(params.b),
        grid=cloud.grid,
        iters=cloud.iters,
        points=len(cloud.points),
        stabilized=cloud.stabilized,
        set_distance=cloud.set_distance if math.isfinite(cloud.set_distance) else -1.0,
        components=count_components(cloud),
        lower_top=cloud.lower_top,
        upper_bottom=cloud.upper_bottom,
        levels={} if levels is None else {
            "lower": [format_number(v) for v in levels.lower],
            "upper": [format_number(v) for v in levels.upper],
        },
        boundary_x=bx,
        forward_invariance=forward_invariance(cloud),
    )
    return summary, cloud.points


# ==================== GEODESICS ====================

def reduce_document(params: CFParams, w: Number, u: Optional[Number] = None, cap: Optional[int] = None,
                    grid: Optional[float] = None, iters: Optional[int] = None) -> ReduceDocument:
    bx, _ = get_boundary_x(params, grid, iters)
    g = geodesic_towards(w, u)
    reduced, word, steps = reduce_geodesic(g, params, bx, cap)
    z = cross_section_point(reduced)
    return ReduceDocument(
        a=format_number(params.a),
        b=format_number(params.b),
        u=format_number(g.u),
        w=format_number(g.w),
        reduced_u=format_number(reduced.u),
        reduced_w=format_number(reduced.w),
        steps=steps,
        word=word.as_list(),
        cross_section=[float(z.x), float(z.y)],
    )


class SimulationRun:
    """
    Streams ExcursionRecords for one geodesic and keeps the run summary.

    The summary is complete once the records are exhausted; a failure part
    way through leaves the summary describing the returns seen so far.
    """
    def __init__(self, params: CFParams, x: Number, returns: int, d_list: Sequence[float],
                 oracle_step: Optional[float] = None, u: Optional[Number] = None,
                 grid: Optional[float] = None, iters: Optional[int] = None):
        if returns < 1:
            raise InvalidParameterError("the number of returns must be at least 1")
        self.params = params
        self.x = as_number(x)
        self.returns = returns
        self.d_list = sorted(d_list)
        self.oracle_step = oracle_step
        self.bx, self.fixture = get_boundary_x(params, grid, iters)
        self.geodesic = geodesic_towards(self.x, u)
        self.count = 0
        self.steps = 0
        self.kappa = 0.0
        self.floor = math.inf
        self.ceiling = 0.0
        self.closed_form_gap: Optional[float] = None
        self.stopped: Optional[str] = None

    def records(self) -> Iterator[ExcursionRecord]:
        reduced, _, self.steps = reduce_geodesic(self.geodesic, self.params, self.bx)
        try:
            for excursion in iter_excursions(reduced, self.params, self.returns, self.d_list,
                                             self.bx, self.oracle_step):
                record = excursion.record
                self.count += 1
                if record.quotient:
                    self.kappa = max(self.kappa, abs(record.return_time - 2 * math.log(abs(record.quotient))))
                self.floor = min(self.floor, record.cross_height)
                self.ceiling = max(self.ceiling, record.cross_height)
                if self.params.is_minus_one_one:
                    step = excursion.step
                    gap = abs(float(return_time_closed_form_minus11(step.geodesic, step.following)
                                    - step.return_time))
                    self.closed_form_gap = max(self.closed_form_gap or 0.0, gap)
                yield record
        except CuspfreqError as e:
            self.stopped = e.detail
            e.partial = self.summary()
            raise

    def summary(self) -> SimulationSummary:
        return SimulationSummary(
            a=format_number(self.params.a),
            b=format_number(self.params.b),
            x=format_number(self.x),
            returns=self.count,
            reduction_steps=self.steps,
            calibrated=self.fixture is not None,
            kappa_observed=self.kappa,
            kappa_fixture=None if self.fixture is None else self.fixture.kappa,
            cross_section_floor=self.floor if self.count else 0.0,
            cross_section_ceiling=self.ceiling,
            closed_form_gap=self.closed_form_gap,
            stopped=self.stopped,
        )


# ==================== FREQUENCY ANALYSIS ====================

def frequency_document(x: Number, params: Optional[CFParams], n: int, d_list: Sequence[float],
                       xi_list: Sequence[float], *, tol: Optional[float] = None,
                       oracle_step: Optional[float] = None, schedule: Optional[Sequence[int]] = None,
                       grid: Optional[float] = None, iters: Optional[int] = None) -> FrequencyDocument:
    """Profile, classification and (classical input) Khintchin trend for one number."""
    tol = settings.FREQUENCY_TOL if tol is None else tol
    x = as_number(x)
    khintchin = None
    if params is None:
        profile = classical_profile(x, n, xi_list, schedule)
        e = expand_classical(x, max_terms=profile.checkpoints[-1].n + 1) if profile.checkpoints else None
        if e is not None and len(profile.checkpoints) >= 2:
            khintchin = khintchin_exponent(e, [c.n for c in profile.checkpoints], tol)
    else:
        bx, fixture = get_boundary_x(params, grid, iters)
        try:
            profile = frequency_profile(x, params, n, d_list, xi_list, bx=bx,
                                        oracle_step=oracle_step, schedule=schedule)
        except CuspfreqError as e:
            if e.partial is not None:
                e.partial = FrequencyDocument(profile=e.partial.model_copy(update={"calibrated": fixture is not None}),
                                              classification=classify(e.partial, tol), tol=tol,
                                              seed=settings.RANDOM_SEED)
            raise
        profile = profile.model_copy(update={"calibrated": fixture is not None})
    return FrequencyDocument(
        profile=profile,
        classification=classify(profile, tol),
        khintchin=khintchin,
        tol=tol,
        seed=settings.RANDOM_SEED,
    )


# ==================== CONSTRUCTIONS ====================

def vwa_document(eps, a0: int, a1: int, n: int) -> ConstructionDocument:
    e = construct_vwa(eps, a0, a1, n)
    return ConstructionDocument(
        kind="vwa",
        quotients=list(e.quotients),
        convergents=_convergents_out(convergents(e, len(e.quotients))),
        eps=str(eps),
        certificate=vwa_certificate(e, eps),
        x=format_number(e.source),
    )


def badly_approximable_document(period: Sequence[int], n: int) -> ConstructionDocument:
    x = construct_badly_approximable(period)
    e = expand_classical(x, max_terms=n)
    return ConstructionDocument(
        kind="bad",
        quotients=list(e.quotients),
        convergents=_convergents_out(e.convergent_table),
        x=format_number(x),
    )


# ==================== CALIBRATION ====================

_RADICANDS = (2, 3, 5, 6, 7, 10, 11, 13)


def random_surds(count: int, seed: int) -> list[Surd]:
    """Seeded quadratic irrationals (p + q sqrt(d)) / r with small coefficients."""
    rng = np.random.default_rng(seed)
    surds = []
    while len(surds) < count:
        d = int(rng.choice(_RADICANDS))
        p = int(rng.integers(-20, 21))
        q = int(rng.integers(1, 6)) * int(rng.choice((-1, 1)))
        r = int(rng.integers(1, 12))
        value = Surd.of(p, q, d, r)
        if isinstance(value, Surd):
            surds.append(value)
    return surds


def calibrate(params: CFParams, surds: int = 100, returns: int = 200, seed: Optional[int] = None,
              grid: Optional[float] = None, iters: Optional[int] = None, save: bool = True) -> CalibrationFixture:
    """
    Runs `returns` returns on `surds` random quadratic surds and records the
    largest |t_j - 2 log|a_j||, the cross-section height range and, for
    (-1,1), the slack of the return-time bounds.
    """
    seed = settings.RANDOM_SEED if seed is None else seed
    bx = None
    if not params.is_minus_one_one:
        levels = boundary_sets(detect_cycles(params))
        cloud = attractor_approx(params, grid, iters, levels=levels)
        bx = extract_boundary_x(cloud, levels, params)
        if not cloud.stabilized:
            logger.warning("Attractor for (%s, %s) did not stabilize (distance %.2e)",
                           params.a, params.b, cloud.set_distance)
    kappa, floor, ceiling = 0.0, math.inf, 0.0
    slack, margin = -math.inf, math.inf
    for x in tqdm(random_surds(surds, seed), desc=f"calibrating ({params.a}, {params.b})", disable=None):
        reduced, _, _ = reduce_geodesic(Geodesic(x.conjugate(), x), params, bx)
        quotients, times = [], []
        for excursion in iter_excursions(reduced, params, returns, [], bx):
            record = excursion.record
            quotients.append(record.quotient)
            times.append(record.return_time)
            floor = min(floor, record.cross_height)
            ceiling = max(ceiling, record.cross_height)
            if record.quotient:
                kappa = max(kappa, abs(record.return_time - 2 * math.log(abs(record.quotient))))
        if params.is_minus_one_one:
            window = CFExpansion(params=params, quotients=tuple(quotients))
            for j in range(2, len(quotients) - 2):
                lower, upper = return_time_bounds_minus11(window, j, c=0.0)
                slack = max(slack, times[j] - upper)
                margin = min(margin, times[j] - lower)
    fixture = CalibrationFixture(
        a=format_number(params.a),
        b=format_number(params.b),
        boundary_x=bx,
        kappa=kappa,
        cross_section_floor=floor,
        cross_section_ceiling=ceiling,
        upper_slack_c=slack if params.is_minus_one_one and math.isfinite(slack) else None,
        lower_margin=margin if params.is_minus_one_one and math.isfinite(margin) else None,
        surds=surds,
        returns=returns,
        seed=seed,
    )
    if save:
        fixture_store.save(fixture)
    return fixture
