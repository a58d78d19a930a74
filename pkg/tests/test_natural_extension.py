# tests/test_natural_extension.py
from fractions import Fraction

import numpy as np
import pytest

from cuspfreq.arith import INF, S, T, T_INV, MoebiusMap, parse_number
from cuspfreq.cf import CFParams
from cuspfreq.config import settings
from cuspfreq.errors import DiagonalInputError, InconsistentCycleError, InvalidParameterError, UnavailableError
from cuspfreq.models import CycleTag, FinitenessVerdict, OrbitOutcome
from cuspfreq.natural_extension import (
    F_ab_step,
    _OrbitWalk,
    attractor_approx,
    boundary_sets,
    branch_map,
    chart,
    count_components,
    detect_cycles,
    extract_boundary_x,
    f_ab_step,
    first_return,
    forward_invariance,
    point_set_distance,
)


# ==================== MAPS ====================

def test_branch_map_by_position(nicf):
    assert branch_map(Fraction(-3, 2), nicf) == T
    assert branch_map(Fraction(-1, 2), nicf) == S
    assert branch_map(Fraction(1, 2), nicf) == T_INV
    assert branch_map(INF, nicf) == T_INV


def test_interval_map_steps(nicf):
    assert f_ab_step(Fraction(2, 5), nicf) == Fraction(-5, 2)
    assert f_ab_step(Fraction(-5, 2), nicf) == Fraction(-3, 2)
    assert f_ab_step(Fraction(0), nicf) is INF
    assert f_ab_step(INF, nicf) is INF


def test_first_return_to_the_middle_interval(nicf):
    assert first_return(Fraction(2, 5), nicf) == Fraction(-1, 2)
    assert first_return(Fraction(1, 5), nicf) == Fraction(0)


def test_planar_map_acts_on_both_coordinates(nicf):
    assert F_ab_step((Fraction(2, 5), Fraction(-3)), nicf) == (Fraction(-5, 2), Fraction(1, 3))
    assert F_ab_step((Fraction(3), Fraction(-3)), nicf) == (Fraction(2), Fraction(-4))


def test_planar_map_is_undefined_on_the_diagonal(nicf):
    with pytest.raises(DiagonalInputError):
        F_ab_step((Fraction(1, 3), Fraction(1, 3)), nicf)


# ==================== CYCLES ====================

def test_nearest_integer_cycle_structure(nicf):
    report = detect_cycles(nicf)
    assert report.verdict is FinitenessVerdict.HOLDS

    at_a = report.endpoint_a
    assert at_a.tag is CycleTag.STRONG
    assert (at_a.cycle_end, at_a.m, at_a.k) == (Fraction(2), 0, 2)
    assert at_a.lower.orbit[:3] == (Fraction(1, 2), Fraction(-1, 2), Fraction(2))

    at_b = report.endpoint_b
    assert at_b.tag is CycleTag.WEAK
    assert (at_b.cycle_end, at_b.m, at_b.k) == (Fraction(0), 3, 2)
    assert at_b.upper.outcome is OrbitOutcome.CYCLE_MET


def test_level_sets_skip_the_cycle_end(nicf):
    levels = boundary_sets(detect_cycles(nicf))
    assert levels.lower == tuple(Fraction(v) for v in ("-2", "-1", "-1/2", "0", "1/2"))
    assert levels.upper == tuple(Fraction(v) for v in ("-1/2", "0", "1", "2"))
    assert max(levels.lower) == nicf.a + 1
    assert min(levels.upper) == nicf.b - 1


def test_minus_one_one_cycle(minus_one_one):
    report = detect_cycles(minus_one_one)
    assert report.verdict is FinitenessVerdict.HOLDS
    assert report.endpoint_a.cycle_end == Fraction(0)


@pytest.mark.parametrize("a, b", [("-1/2", "1/2"), ("-2/5", "3/5"), ("-1/3", "2/3"), ("-1", "1")])
def test_cycle_report_does_not_depend_on_the_cap(a, b):
    params = CFParams.ab(parse_number(a), parse_number(b))
    short, long = detect_cycles(params, 100), detect_cycles(params, 10 ** 4)
    for first, second in ((short.endpoint_a, long.endpoint_a), (short.endpoint_b, long.endpoint_b)):
        assert (first.tag, first.cycle_end, first.m, first.k) == (second.tag, second.cycle_end, second.m, second.k)
    assert short.verdict is FinitenessVerdict.HOLDS


def test_tiny_cap_leaves_finiteness_undetermined(nicf):
    report = detect_cycles(nicf, cap=1)
    assert report.verdict is FinitenessVerdict.UNDETERMINED
    assert report.endpoint_a.upper.outcome is OrbitOutcome.CAP_REACHED
    with pytest.raises(UnavailableError):
        boundary_sets(report)


def test_cap_must_be_positive(nicf):
    with pytest.raises(InvalidParameterError):
        detect_cycles(nicf, cap=0)


# ==================== ATTRACTOR ====================

def test_chart_is_identity_inside_the_window():
    values = np.array([-3.0, 0.0, 2.5, 40.0, -1e9])
    charted = chart(values, 10.0)
    assert np.allclose(charted[:3], values[:3])
    assert 10.0 < charted[3] < 20.0
    assert -20.0 < charted[4] < -19.9


def test_zero_iterations_returns_the_seeds(nicf, coarse_attractor):
    cloud = attractor_approx(nicf, coarse_attractor, iters=0)
    assert cloud.iters == 0
    u, w = cloud.points[:, 0], cloud.points[:, 1]
    assert len(np.unique(w)) == len(w)
    assert np.diff(np.sort(w)).min() >= 0.99 * coarse_attractor
    assert np.all(np.abs(u - w) >= 1.0)
    assert len(w) <= int(np.ceil(2 * cloud.window / coarse_attractor))


def test_halving_the_grid_doubles_the_seeds(nicf):
    coarse = attractor_approx(nicf, 0.04, iters=0)
    fine = attractor_approx(nicf, 0.02, iters=0)
    assert 1.8 < len(fine.points) / len(coarse.points) < 2.2
    assert not np.isin(fine.points[:, 1], coarse.points[:, 1]).all()


def test_point_set_distance():
    xs, ys = np.mgrid[0:5:0.1, 0:5:0.1]
    cloud = np.column_stack([xs.ravel(), ys.ravel()])
    assert point_set_distance(cloud, cloud, 20.0) == 0.0
    assert point_set_distance(cloud, cloud + [2.0, 0.0], 20.0) > 1.0
    assert point_set_distance(cloud[:1], cloud, 20.0) == float("inf")


def test_a_single_iteration_cannot_stabilize(nicf, coarse_attractor):
    cloud = attractor_approx(nicf, coarse_attractor, iters=1)
    assert not cloud.stabilized
    assert cloud.set_distance == float("inf")


def test_nearest_integer_attractor(nicf, coarse_attractor):
    levels = boundary_sets(detect_cycles(nicf))
    cloud = attractor_approx(nicf, coarse_attractor, levels=levels)
    assert cloud.stabilized
    assert count_components(cloud) == 2
    assert abs(cloud.lower_top - 0.5) <= coarse_attractor
    assert abs(cloud.upper_bottom + 0.5) <= coarse_attractor
    assert forward_invariance(cloud) >= 0.9

    bx = extract_boundary_x(cloud, levels, nicf)
    assert bx.signs_hold()
    assert bx.error >= coarse_attractor


def test_nearest_integer_attractor_at_default_settings(nicf):
    levels = boundary_sets(detect_cycles(nicf))
    cloud = attractor_approx(nicf, levels=levels)
    assert cloud.grid == settings.ATTRACTOR_GRID
    assert cloud.stabilized
    assert count_components(cloud) == 2
    assert abs(cloud.lower_top - 0.5) <= 0.01
    assert abs(cloud.upper_bottom + 0.5) <= 0.01
    assert extract_boundary_x(cloud, levels, nicf).signs_hold()


def test_boundary_signs_at_default_settings():
    params = CFParams.ab(Fraction(-2, 5), Fraction(3, 5))
    levels = boundary_sets(detect_cycles(params))
    cloud = attractor_approx(params, levels=levels)
    assert cloud.lower_top <= float(params.a + 1) + 0.01
    assert cloud.upper_bottom >= float(params.b - 1) - 0.01
    assert extract_boundary_x(cloud, levels, params).signs_hold()


def test_boundary_signs_for_another_pair(coarse_attractor):
    params = CFParams.ab(Fraction(-2, 5), Fraction(3, 5))
    levels = boundary_sets(detect_cycles(params))
    cloud = attractor_approx(params, coarse_attractor, levels=levels)
    assert extract_boundary_x(cloud, levels, params).signs_hold()


def test_undetermined_finiteness_blocks_iteration_unless_overridden(nicf, coarse_attractor, monkeypatch):
    monkeypatch.setattr("cuspfreq.natural_extension.settings.CYCLE_CAP", 1)
    with pytest.raises(UnavailableError):
        attractor_approx(nicf, coarse_attractor)
    cloud = attractor_approx(nicf, coarse_attractor, override=True)
    assert len(cloud.points) > 0


def test_cycle_words_must_carry_the_endpoint_to_the_cycle_end(nicf, monkeypatch):
    monkeypatch.setattr(_OrbitWalk, "word", lambda self, steps: MoebiusMap.identity())
    with pytest.raises(InconsistentCycleError):
        detect_cycles(nicf)


def test_boundary_x_agrees_under_grid_refinement(nicf):
    levels = boundary_sets(detect_cycles(nicf))
    coarse = extract_boundary_x(attractor_approx(nicf, 0.02, levels=levels), levels, nicf)
    fine = extract_boundary_x(attractor_approx(nicf, 0.01, levels=levels), levels, nicf)
    for name in ("x_a_minus", "x_a_plus", "x_b_minus", "x_b_plus"):
        assert abs(getattr(coarse, name) - getattr(fine, name)) <= coarse.error + fine.error
