import random

import pytest
from hypothesis import given, settings, strategies as st

from qvilat import catalog, generators as gen
from qvilat.errors import HypothesisViolation
from qvilat.fixpoint import (
    Multifunction,
    brute_force_greatest_fixed_point,
    brute_force_smallest_fixed_point,
    check_greatest_hypotheses,
    check_prop_meta,
    fixed_points,
    fixpoint_report,
    greatest_element,
    greatest_fixed_point_ascent,
    greatest_fixed_point_theorem,
    is_directed_upward,
    is_increasing_upward,
    is_inductive_chainwise,
    is_permanent_upward,
    maximal_elements,
    smallest_element,
    smallest_fixed_point_theorem,
    subpoints,
)
from qvilat.order import chain, diamond, square

NAMED = list(catalog.named_lattices().values())


def test_identity_map_fixes_everything():
    L = square()
    S = Multifunction.single_valued(L, lambda v: v)
    assert fixed_points(S) == set(L.elements)
    assert subpoints(S) == set(L.elements)


def test_constant_map_on_a_chain():
    L = chain(4)
    S = Multifunction.single_valued(L, lambda v: 2)
    assert fixed_points(S) == {2}
    assert subpoints(S) == {0, 1, 2}
    assert brute_force_greatest_fixed_point(S) == 2


def test_greatest_and_smallest_elements():
    P = square().poset
    assert greatest_element({"0", "x", "y"}, P) is None
    assert greatest_element({"0", "x"}, P) == "x"
    assert smallest_element({"x", "1"}, P) == "x"
    assert maximal_elements({"0", "x", "y"}, P) == {"x", "y"}


def test_directed_and_inductive():
    P = square().poset
    assert not is_directed_upward({"x", "y"}, P)
    assert is_directed_upward({"x", "y", "1"}, P)
    assert is_inductive_chainwise({"0", "x"}, P)


def test_increasing_and_permanent_upward():
    L = chain(3)
    up = Multifunction(L, {0: {0}, 1: {0, 1}, 2: {0, 1, 2}})
    assert is_increasing_upward(up) and is_permanent_upward(up)
    down = Multifunction(L, {0: {2}, 1: {1}, 2: {0}})
    assert not is_increasing_upward(down)
    assert not is_permanent_upward(down)


def test_prop_meta_rejects_non_increasing():
    L = chain(2)
    with pytest.raises(HypothesisViolation):
        check_prop_meta(Multifunction(L, {0: {1}, 1: {0}}))


def test_report_csv_lists_every_element():
    L = chain(3)
    S = Multifunction.single_valued(L, lambda v: min(v + 1, 2))
    report = fixpoint_report(S)
    assert report.greatest_fixed_point == 2
    lines = report.to_csv().splitlines()
    assert lines[0] == "element,is_subpoint,is_fixed_point"
    assert len(lines) == 4


def test_ascent_certificate_ends_at_greatest():
    L = diamond()
    S, ulS, ul_u = gen.random_greatest_instance(L, random.Random(5))
    x, cert = greatest_fixed_point_ascent(S, ulS, L, ul_u)
    assert cert[0][0] == "start" and cert[-1] == ("greatest", x, None)
    assert x == brute_force_greatest_fixed_point(S)


def test_hypothesis_check_names_the_clause():
    L = chain(3)
    S = Multifunction(L, {0: {0}, 1: set(), 2: {2}})
    with pytest.raises(HypothesisViolation) as exc:
        check_greatest_hypotheses(S, S, L, 0)
    assert exc.value.clause == "S-nonempty"


def test_hypothesis_check_rejects_non_permanent_suboperator():
    L = chain(2)
    S = Multifunction(L, {0: {0}, 1: {1}})
    with pytest.raises(HypothesisViolation) as exc:
        check_greatest_hypotheses(S, S, L, 0)
    assert exc.value.clause == "ulS-permanent-upward"


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(NAMED), st.integers(0, 10**6))
def test_fixed_points_are_subpoints(L, seed):
    S = gen.random_increasing_upward(L, random.Random(seed))
    assert fixed_points(S) <= subpoints(S)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(NAMED), st.integers(0, 10**6))
def test_maximal_subpoints_are_maximal_fixed_points(L, seed):
    S = gen.random_increasing_upward(L, random.Random(seed))
    assert is_increasing_upward(S)
    assert check_prop_meta(S)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(NAMED), st.integers(0, 10**6))
def test_ascent_matches_brute_force(L, seed):
    S, ulS, ul_u = gen.random_greatest_instance(L, random.Random(seed))
    assert greatest_fixed_point_theorem(S, ulS, L, ul_u) == brute_force_greatest_fixed_point(S)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(NAMED), st.integers(0, 10**6))
def test_descent_matches_brute_force(L, seed):
    S, olS, ol_u = gen.random_greatest_instance(L.dual(), random.Random(seed))
    S, olS = S.dual(), olS.dual()
    assert smallest_fixed_point_theorem(S, olS, L, ol_u) == brute_force_smallest_fixed_point(S)
