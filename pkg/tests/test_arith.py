# tests/test_arith.py
from fractions import Fraction

import pytest
from mpmath import mp, mpf

from cuspfreq.arith import (
    INF,
    S,
    T,
    T_INV,
    MoebiusMap,
    Ordering,
    Surd,
    TrackedReal,
    UpperHalfPoint,
    compare,
    format_number,
    hyperbolic_distance,
    moebius_apply,
    normalize,
    normalize_surd,
    parse_number,
)
from cuspfreq.errors import (
    InvalidParameterError,
    MalformedNumberError,
    PrecisionExhaustedError,
    UndecidableComparisonError,
)


# ==================== SURDS ====================

def test_surd_without_root_part_collapses_to_fraction():
    assert normalize_surd(2, 0, 5, 4) == Fraction(1, 2)
    assert normalize_surd(1, 1, 4, 1) == Fraction(3)


def test_surd_canonical_form():
    assert Surd.of(2, 2, 8, 4) == Surd(1, 2, 2, 2)
    assert Surd.of(1, 1, 5, -2) == Surd(-1, -1, 5, 2)


def test_normalize_is_idempotent(golden):
    assert normalize(golden) == golden
    assert normalize(Fraction(6, -4)) == Fraction(-3, 2)


def test_golden_ratio_identities(golden):
    assert golden * golden == golden + 1
    assert golden.reciprocal() == golden - 1
    assert golden.conjugate() == Surd.of(1, -1, 5, 2)
    assert golden.floor() == 1
    assert (-golden).floor() == -2
    assert golden.sign() == 1 and golden.conjugate().sign() == -1


def test_surds_with_different_radicands_do_not_mix():
    with pytest.raises(InvalidParameterError):
        Surd.of(0, 1, 2) + Surd.of(0, 1, 3)


# ==================== ORDERING ====================

def test_compare_exact_values(golden):
    assert compare(Fraction(1, 2), golden) is Ordering.LESS
    assert compare(golden, Fraction(1618, 1000)) is Ordering.GREATER
    assert compare(Surd.of(0, 1, 2), Surd.of(0, 1, 3)) is Ordering.LESS
    assert compare(golden, golden) is Ordering.EQUAL


def test_infinity_sits_above_every_finite_value():
    assert compare(INF, Fraction(10 ** 30)) is Ordering.GREATER
    assert compare(Fraction(-7), INF) is Ordering.LESS
    assert compare(INF, INF) is Ordering.EQUAL
    assert -INF is INF


def test_tracked_comparison_needs_disjoint_intervals():
    close = parse_number("dec:1.5@-10")
    with pytest.raises(UndecidableComparisonError):
        compare(close, Fraction(3, 2))
    assert compare(parse_number("dec:1.4@-10"), Fraction(3, 2)) is Ordering.LESS


def test_tracked_reciprocal_refuses_an_interval_around_zero():
    near_zero = TrackedReal.from_mpf("0.0001", 30, radius="0.001")
    with pytest.raises(PrecisionExhaustedError):
        near_zero.reciprocal()


# ==================== PARSE / FORMAT ====================

@pytest.mark.parametrize("text, expected", [
    ("6/-4", Fraction(-3, 2)),
    ("17", Fraction(17)),
    ("surd:1,1,5,2", Surd(1, 1, 5, 2)),
    ("surd:3,0,7,6", Fraction(1, 2)),
    ("inf", INF),
])
def test_parse_number(text, expected):
    assert parse_number(text) == expected


@pytest.mark.parametrize("text", ["abc", "1/0", "surd:1,1,5,0", "surd:1,1,-5,2", "dec:"])
def test_parse_number_rejects_malformed_input(text):
    with pytest.raises(MalformedNumberError):
        parse_number(text)


def test_format_number_matches_parse_syntax(golden):
    assert format_number(Fraction(-3, 2)) == "-3/2"
    assert format_number(Fraction(4)) == "4"
    assert format_number(golden) == "surd:1,1,5,2"
    assert format_number(INF) == "inf"
    assert parse_number(format_number(golden)) == golden
    assert format_number(parse_number("dec:1.41421@-5")).startswith("dec:1.414")


# ==================== MOEBIUS MAPS ====================

def test_moebius_apply_handles_infinity():
    assert moebius_apply(S, Fraction(0)) is INF
    assert moebius_apply(S, INF) == Fraction(0)
    assert moebius_apply(T, INF) is INF
    assert moebius_apply(T, Fraction(1, 2)) == Fraction(3, 2)


def test_moebius_group_laws():
    word = T @ S @ T @ T
    assert (word @ word.inverse()) == MoebiusMap.identity()
    assert (S @ S).same_in_psl(MoebiusMap.identity())
    assert not T.same_in_psl(MoebiusMap.identity())
    assert MoebiusMap.translation(-3).apply(Fraction(1)) == Fraction(-2)


def _random_word(rng, length: int = 6) -> MoebiusMap:
    word = MoebiusMap.identity()
    for index in rng.integers(0, 3, size=length):
        word = (T, T_INV, S)[int(index)] @ word
    return word


def test_composition_is_successive_application(rng):
    for _ in range(300):
        first, second = _random_word(rng), _random_word(rng)
        x = Fraction(int(rng.integers(-10 ** 4, 10 ** 4)), int(rng.integers(1, 10 ** 4)))
        assert (first @ second).apply(x) == first.apply(second.apply(x))
        assert (S @ S).apply(x) == x
        assert S.apply(S.apply(x)) == x


def test_moebius_map_needs_unit_determinant():
    with pytest.raises(InvalidParameterError):
        MoebiusMap(2, 0, 0, 1)


def test_surd_images_stay_exact(golden):
    image = moebius_apply(S, golden)
    assert image == Surd.of(1, -1, 5, 2)
    assert moebius_apply(S, image) == golden


# ==================== UPPER HALF-PLANE ====================

def test_hyperbolic_distance_along_imaginary_axis():
    d = hyperbolic_distance(UpperHalfPoint(0, 1), UpperHalfPoint(0, 2))
    assert abs(d - mp.log(2)) < mpf(10) ** -12


def test_inversion_of_a_point():
    z = S.apply_point(UpperHalfPoint(0, 2))
    assert abs(z.x) < mpf(10) ** -12
    assert abs(z.y - mpf(1) / 2) < mpf(10) ** -12


def test_points_must_lie_above_the_real_axis():
    with pytest.raises(InvalidParameterError):
        UpperHalfPoint(0, 0)


def _random_point(rng) -> UpperHalfPoint:
    return UpperHalfPoint(mpf(float(rng.uniform(-5, 5))), mpf(float(rng.uniform(0.05, 10))))


def test_hyperbolic_distance_is_a_metric(rng):
    for _ in range(200):
        p, q, r = _random_point(rng), _random_point(rng), _random_point(rng)
        pq = hyperbolic_distance(p, q)
        assert pq >= 0
        assert abs(pq - hyperbolic_distance(q, p)) < mpf(10) ** -10
        assert hyperbolic_distance(p, r) <= pq + hyperbolic_distance(q, r) + mpf(10) ** -10
        assert abs(hyperbolic_distance(S.apply_point(p), S.apply_point(q)) - pq) < mpf(10) ** -8
