# tests/test_services.py
import math
from fractions import Fraction

import pytest

from cuspfreq import services
from cuspfreq.arith import Surd, parse_number
from cuspfreq.cf import CFExpansion, CFParams
from cuspfreq.errors import CuspfreqError, InvalidParameterError, ReductionFailedError
from cuspfreq.excursions import iter_excursions
from cuspfreq.geodesics import geodesic_towards, reduce_geodesic, return_time_bounds_minus11
from cuspfreq.models import ClassificationTag, CycleTag, FinitenessVerdict, Flavor, ProfileStatus


def test_expansion_document(nicf):
    document = services.expansion_document(Fraction(2, 5), nicf, with_convergents=True)
    assert document.flavor is Flavor.AB
    assert (document.a, document.b, document.x) == ("-1/2", "1/2", "2/5")
    assert document.quotients == [0, -2, 2]
    assert document.terminated
    assert [(c.p, c.q) for c in document.convergents] == [("0", "1"), ("1", "2"), ("2", "5")]


def test_convert_document_for_positive_input(golden):
    document = services.convert_document(golden, max_terms=6, xi_list=[2])
    assert document.classical == [1] * 6
    assert document.alternating == [1, -1, 1, -1, 1, -1]
    assert document.identical
    assert document.modified == {"2": [1] * 6}


def test_orbit_document(nicf):
    document = services.orbit_document(nicf)
    assert document.verdict is FinitenessVerdict.HOLDS
    assert document.endpoint_a.tag is CycleTag.STRONG
    assert document.endpoint_b.tag is CycleTag.WEAK
    assert document.levels == {"lower": ["-2", "-1", "-1/2", "0", "1/2"], "upper": ["-1/2", "0", "1", "2"]}
    assert len(document.orbits) == 4


def test_attractor_summary(nicf, coarse_attractor):
    summary, points = services.attractor_summary(nicf, grid=coarse_attractor)
    assert summary.points == len(points)
    assert summary.components == 2
    assert summary.boundary_x is not None


def test_boundary_x_comes_from_a_saved_fixture(nicf, coarse_attractor, isolated_fixtures):
    fixture = services.calibrate(nicf, surds=2, returns=10, seed=3, grid=coarse_attractor)
    services._boundary_cache.clear()
    bx, loaded = services.get_boundary_x(nicf)
    assert loaded == fixture
    assert bx == fixture.boundary_x
    assert services._boundary_cache == {}


def test_minus_one_one_needs_no_boundary_data(minus_one_one):
    assert services.get_boundary_x(minus_one_one) == (None, None)


def test_reduce_document(minus_one_one, golden):
    document = services.reduce_document(minus_one_one, golden)
    assert document.steps == 0
    assert (document.reduced_u, document.reduced_w) == (document.u, document.w)
    assert 0 < document.cross_section[1] <= 1


def test_simulation_run_on_golden_axis(minus_one_one, golden):
    run = services.SimulationRun(minus_one_one, golden, 6, [2])
    records = list(run.records())
    assert [abs(r.quotient) for r in records] == [1] * 6
    summary = run.summary()
    assert summary.returns == 6
    assert not summary.calibrated
    assert summary.closed_form_gap < 1e-9
    assert summary.stopped is None


def test_simulation_run_keeps_a_partial_summary(minus_one_one):
    run = services.SimulationRun(minus_one_one, Fraction(2, 5), 10, [2])
    with pytest.raises(ReductionFailedError) as excinfo:
        list(run.records())
    assert excinfo.value.partial.returns == run.count
    assert excinfo.value.partial.stopped


def test_simulation_run_needs_returns(minus_one_one, golden):
    with pytest.raises(InvalidParameterError):
        services.SimulationRun(minus_one_one, golden, 0, [2])


def test_frequency_document_classical(golden):
    document = services.frequency_document(golden, None, 40, [], [2])
    assert document.profile.flavor is Flavor.CLASSICAL
    assert document.classification.tag is ClassificationTag.FREQUENCY_0
    assert document.khintchin.estimate == 0.0


def test_frequency_document_attaches_partial_document(minus_one_one):
    with pytest.raises(CuspfreqError) as excinfo:
        services.frequency_document(parse_number("dec:1.41421356@-8"), minus_one_one, 40, [2], [2])
    assert excinfo.value.partial.profile.status is ProfileStatus.PARTIAL


def test_construction_documents():
    vwa = services.vwa_document(Fraction(1), 0, 1, 5)
    assert vwa.quotients == [0, 1, 2, 4, 14]
    assert vwa.certificate == [True] * len(vwa.certificate)
    bad = services.badly_approximable_document([2], 4)
    assert bad.quotients == [2, 2, 2, 2]
    assert bad.x == "surd:1,1,2,1"


def test_random_surds_are_seeded():
    first = services.random_surds(5, seed=11)
    assert first == services.random_surds(5, seed=11)
    assert all(isinstance(x, Surd) for x in first)


def test_calibrate_minus_one_one(minus_one_one, isolated_fixtures):
    fixture = services.calibrate(minus_one_one, surds=3, returns=20, seed=1)
    assert fixture.boundary_x is None
    assert fixture.kappa >= 0
    assert 0 < fixture.cross_section_floor <= fixture.cross_section_ceiling <= 1
    assert isolated_fixtures.load(minus_one_one) == fixture


def test_kappa_stays_within_the_calibrated_fixture(minus_one_one):
    fixture = services.calibrate(minus_one_one, surds=3, returns=30, seed=5)
    for x in services.random_surds(3, seed=5):
        run = services.SimulationRun(minus_one_one, x, 30, [2])
        running = []
        for record in run.records():
            running.append(run.kappa)
            assert abs(record.return_time - 2 * math.log(abs(record.quotient))) <= fixture.kappa
        assert running == sorted(running)
        summary = run.summary()
        assert summary.calibrated
        assert summary.kappa_fixture == fixture.kappa
        assert summary.kappa_observed <= fixture.kappa


def test_return_time_bounds_hold_with_the_calibrated_slack(minus_one_one):
    fixture = services.calibrate(minus_one_one, surds=3, returns=30, seed=4)
    assert fixture.lower_margin >= 0
    for x in services.random_surds(3, seed=4):
        reduced, _, _ = reduce_geodesic(geodesic_towards(x), minus_one_one)
        records = [excursion.record for excursion in iter_excursions(reduced, minus_one_one, 30, [])]
        window = CFExpansion(params=minus_one_one, quotients=tuple(r.quotient for r in records))
        for j in range(2, len(records) - 2):
            lower, upper = return_time_bounds_minus11(window, j, c=fixture.upper_slack_c)
            assert lower - 1e-9 <= records[j].return_time <= upper + 1e-9
