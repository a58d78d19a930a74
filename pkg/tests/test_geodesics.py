# tests/test_geodesics.py
import math
from fractions import Fraction

import pytest
from mpmath import mp, mpf

from cuspfreq.arith import INF, Surd, UpperHalfPoint
from cuspfreq.cf import expand_ab
from cuspfreq.errors import (
    InsufficientQuotientsError,
    NoIntersectionError,
    ReductionFailedError,
    UnavailableError,
)
from cuspfreq.excursions import iter_excursions
from cuspfreq.geodesics import (
    C_PRIME,
    Geodesic,
    cross_section_point,
    cusp_time_numeric,
    excursion_thresholds,
    geodesic_towards,
    is_reduced,
    iter_returns,
    reduce_geodesic,
    reduce_point,
    return_step,
    return_time_bounds_minus11,
    return_time_closed_form_minus11,
    start_orbit,
    threshold_verdict,
    time_above,
    unit_circle_arc,
)
from cuspfreq.models import BoundaryX, ThresholdVerdict

LOG_PHI = math.log((1 + math.sqrt(5)) / 2)


def _close(z: UpperHalfPoint, x, y, tol=1e-12):
    return abs(z.x - mpf(x)) < tol and abs(z.y - mpf(y)) < tol


@pytest.fixture
def golden_axis(golden):
    return Geodesic(golden.conjugate(), golden)


# ==================== CROSS-SECTION ====================

def test_cross_section_point_examples(golden_axis):
    assert _close(cross_section_point(Geodesic(Fraction(-1, 2), Fraction(2))), 0, 1)
    assert _close(cross_section_point(golden_axis), 0, 1)
    assert _close(cross_section_point(golden_axis, 1), 1, 1)


def test_vertical_geodesic_meets_c_at_its_foot():
    assert _close(cross_section_point(Geodesic(Fraction(0), INF)), 0, 1)
    z = cross_section_point(Geodesic(INF, Fraction(1, 2)))
    with mp.workdps(40):
        assert _close(z, mpf(1) / 2, mp.sqrt(3) / 2)


@pytest.mark.parametrize("u, w", [(Fraction(-1), Fraction(1)), (Fraction(3), Fraction(5))])
def test_missing_or_concentric_geodesics_raise(u, w):
    with pytest.raises(NoIntersectionError):
        cross_section_point(Geodesic(u, w))


def test_crossing_stays_accurate_for_huge_endpoints():
    shift = 10 ** 60 // 3
    z = cross_section_point(Geodesic(Fraction(-1, 3), Fraction(10 ** 60 + 1, 3)), shift)
    # the offset from the shift tends to 2/3, so the height tends to sqrt(5)/3
    assert abs(float(z.y) - math.sqrt(5) / 3) < 1e-12
    assert abs(float(z.x) / shift - 1) < 1e-12


# ==================== TIME ABOVE ====================

def test_time_above_closed_form():
    g = Geodesic(Fraction(-1, 2), Fraction(2))
    with mp.workdps(40):
        assert abs(time_above(g, 1) - 2 * mp.log(2)) < mpf(10) ** -30
    assert time_above(g, 1.25) == 0
    assert time_above(g, 2) == 0


def test_time_above_inside_a_window():
    g = Geodesic(Fraction(-1, 2), Fraction(2))
    window = (cross_section_point(g), UpperHalfPoint(mpf(3) / 4, mpf(5) / 4))
    assert abs(float(time_above(g, 1, window)) - math.log(2)) < 1e-12


def test_hyperbolic_arc_of_c():
    with mp.workdps(50):
        assert abs(unit_circle_arc(mp.pi / 3, mp.pi / 2) - C_PRIME) < mpf(10) ** -12


# ==================== REDUCTION ====================

def test_minus_one_one_reduced_region(minus_one_one):
    assert is_reduced(Geodesic(Fraction(-1, 2), Fraction(2)), minus_one_one)
    assert is_reduced(Geodesic(Fraction(1, 2), Fraction(-2)), minus_one_one)
    assert not is_reduced(Geodesic(Fraction(1, 2), Fraction(2)), minus_one_one)
    assert not is_reduced(Geodesic(Fraction(-1, 2), Fraction(1, 2)), minus_one_one)
    assert not is_reduced(Geodesic(Fraction(0), INF), minus_one_one)


def test_reduction_of_golden_lifts(golden, minus_one_one):
    g, word, steps = reduce_geodesic(Geodesic(golden.conjugate(), golden), minus_one_one)
    assert steps == 0 and g.w == golden

    g, word, steps = reduce_geodesic(Geodesic(golden.conjugate(), golden - 1), minus_one_one)
    assert steps == 2
    assert g.w == golden
    assert word.apply(golden - 1) == golden


def test_reduction_cap(golden, minus_one_one):
    with pytest.raises(ReductionFailedError):
        reduce_geodesic(Geodesic(golden.conjugate(), golden - 1), minus_one_one, cap=1)


def test_reduction_needs_boundary_data_off_minus_one_one(golden, nicf):
    with pytest.raises(UnavailableError):
        is_reduced(Geodesic(golden.conjugate(), golden), nicf)


def test_rational_endpoint_runs_out_of_returns(minus_one_one):
    g, _, steps = reduce_geodesic(geodesic_towards(Fraction(2, 5)), minus_one_one)
    assert steps == 1 and g.w == Fraction(-5, 2)
    quotients = []
    with pytest.raises(ReductionFailedError):
        while True:
            step = return_step(g, minus_one_one)
            quotients.append(step.quotient)
            g = step.following
    assert quotients == [-2, 2]


def test_nearest_integer_reduction(golden, nicf, nicf_boundary_x):
    g, _, _ = reduce_geodesic(geodesic_towards(golden), nicf, nicf_boundary_x)
    state = start_orbit(g, nicf)
    for state in iter_returns(state, 6):
        pass
    assert state.quotients[-3:] == (3, 3, 3)
    for t in state.return_times[-3:]:
        assert abs(float(t) - 4 * LOG_PHI) < 1e-12


# ==================== RETURN TIMES ====================

def test_golden_axis_returns(golden_axis, minus_one_one):
    state = start_orbit(golden_axis, minus_one_one)
    for state in iter_returns(state, 6):
        pass
    assert state.quotients == (1, -1, 1, -1, 1, -1)
    assert all(abs(float(t) - 2 * LOG_PHI) < 1e-12 for t in state.return_times)
    assert _close(state.cross_points[0], 0, 1)
    assert _close(state.exit_points[0], 1, 1)


def test_closed_form_matches_measured_return_times(minus_one_one):
    for x in (Surd.of(0, 1, 51), Surd.of(3, 2, 7, 5), Surd.of(1, 1, 5, 2)):
        g, _, _ = reduce_geodesic(geodesic_towards(x), minus_one_one)
        for _ in range(12):
            step = return_step(g, minus_one_one)
            closed = return_time_closed_form_minus11(step.geodesic, step.following)
            assert abs(float(closed - step.return_time)) < 1e-12
            g = step.following


def test_return_time_bounds(golden, minus_one_one):
    e = expand_ab(golden, minus_one_one, 10)
    low, high = return_time_bounds_minus11(e, 4, c=2.0)
    assert low == pytest.approx(-float(C_PRIME))
    assert high == pytest.approx(2.0)
    with pytest.raises(InsufficientQuotientsError):
        return_time_bounds_minus11(e, 1, c=2.0)
    with pytest.raises(InsufficientQuotientsError):
        return_time_bounds_minus11(e, 8, c=2.0)


# ==================== THRESHOLDS ====================

@pytest.fixture
def sample_boundary_x():
    return BoundaryX(x_a_minus=1.5, x_a_plus=2.0, x_b_minus=-1.5, x_b_plus=-2.0, resolution=1e-3, error=1e-3)


def test_threshold_values(nicf, sample_boundary_x):
    t = excursion_thresholds(3, nicf, sample_boundary_x)
    assert t.lower_positive == pytest.approx(29 / 6)
    assert t.upper_positive == pytest.approx(43 / 6)
    assert t.lower_negative == pytest.approx(5.0)
    assert t.upper_negative == pytest.approx(7.0)


def test_conservative_thresholds_widen_the_band(nicf, sample_boundary_x):
    nominal = excursion_thresholds(3, nicf, sample_boundary_x)
    wide = excursion_thresholds(3, nicf, sample_boundary_x, conservative=True)
    assert wide.lower_positive < nominal.lower_positive
    assert wide.upper_positive > nominal.upper_positive
    assert wide.lower_negative < nominal.lower_negative
    assert wide.upper_negative > nominal.upper_negative


@pytest.mark.parametrize("digit, verdict", [
    (4, ThresholdVerdict.BELOW_LOWER),
    (5, ThresholdVerdict.INDETERMINATE_BAND),
    (8, ThresholdVerdict.ABOVE_UPPER),
    (-4, ThresholdVerdict.BELOW_LOWER),
    (-6, ThresholdVerdict.INDETERMINATE_BAND),
    (-8, ThresholdVerdict.ABOVE_UPPER),
])
def test_threshold_verdicts(nicf, sample_boundary_x, digit, verdict):
    assert threshold_verdict(digit, excursion_thresholds(3, nicf, sample_boundary_x)) is verdict


def test_thresholds_need_boundary_data(nicf):
    with pytest.raises(UnavailableError):
        excursion_thresholds(3, nicf, None)


# ==================== FUNDAMENTAL DOMAIN ORACLE ====================

@pytest.mark.parametrize("x, y, expected", [
    ("5.3", "1", ("0.3", "1")),
    ("0", "0.3", ("0", "3.3333333333333333")),
    ("0", "1", ("0", "1")),
])
def test_reduce_point(x, y, expected):
    reduced, word = reduce_point(UpperHalfPoint(mpf(x), mpf(y)))
    assert abs(reduced.x - mpf(expected[0])) < 1e-12
    assert abs(reduced.y - mpf(expected[1])) < 1e-12
    image = word.apply_point(UpperHalfPoint(mpf(x), mpf(y)))
    assert abs(image.x - reduced.x) < 1e-12 and abs(image.y - reduced.y) < 1e-12


def test_golden_axis_never_reaches_height_two(golden_axis):
    measured = cusp_time_numeric(golden_axis, 100, 2, step=0.05)
    assert measured.fraction == 0.0
    assert measured.components == 0


def test_rational_geodesic_fraction_grows_with_time():
    g = geodesic_towards(Fraction(2, 5))
    fractions = [cusp_time_numeric(g, T, 2, step=0.1).fraction for T in (50, 100, 200)]
    assert fractions[0] < fractions[1] < fractions[2]
    assert fractions[2] > 0.9


def test_window_oracle_agrees_with_closed_form(nicf, nicf_boundary_x):
    g, _, _ = reduce_geodesic(geodesic_towards(Surd.of(0, 1, 51)), nicf, nicf_boundary_x)
    excursions = list(iter_excursions(g, nicf, 6, [2, 3], nicf_boundary_x, oracle_step=0.02))
    assert any(e.time_above["2"] > 0 for e in excursions)
    for e in excursions:
        for key in ("2", "3"):
            assert abs(e.time_above[key] - e.oracle_time[key]) <= e.oracle_error[key] + 1e-9
