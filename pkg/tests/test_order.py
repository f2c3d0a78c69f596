import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qvilat import catalog, generators as gen
from qvilat.errors import (
    CarrierMismatchError,
    HypothesisViolation,
    InvalidFunctionalError,
    NotALatticeError,
)
from qvilat.order import (
    INF,
    ExtendedFunctional,
    FiniteLattice,
    FinitePoset,
    antichain,
    boolean_lattice,
    chain,
    check_modified_transitivity,
    constant,
    diamond,
    effective_domain,
    grid_lattice,
    indicator,
    is_submodular,
    is_t_monotone,
    lattice_identity_counterexample,
    lattice_identity_holds,
    linear_functional,
    pentagon,
    positive_part,
    precsim,
    precsim_linear,
    precsim_star,
    precsim_violation,
    precsim_wrt,
    product,
    square,
    star_leq,
    strong_set_order,
)

LATTICES = catalog.all_lattices(5)


# -- oracles on hand-built lattices ---------------------------------------------

def test_chain_meet_is_min_and_join_is_max():
    L = chain(5)
    for x, y in itertools.product(range(5), repeat=2):
        assert L.meet(x, y) == min(x, y)
        assert L.join(x, y) == max(x, y)
    assert (L.bottom, L.top) == (0, 4)


def test_grid_lattice_is_componentwise():
    L = grid_lattice([(0, 1, 2), (0, 1)])
    assert L.meet((2, 0), (1, 1)) == (1, 0)
    assert L.join((2, 0), (1, 1)) == (2, 1)
    assert L.distributive


def test_distributivity_flags():
    assert square().distributive
    assert boolean_lattice(3).distributive
    assert not diamond().distributive
    assert not pentagon().distributive


def test_antichain_is_not_a_lattice():
    with pytest.raises(NotALatticeError):
        FiniteLattice(antichain(2))


def test_poset_rejects_cycles():
    with pytest.raises(ValueError):
        FinitePoset.from_relation("ab", [("a", "b"), ("b", "a")])


def test_catalog_counts_match_known_sequence():
    for n in range(1, 7):
        assert len(catalog.all_lattices(n, min_size=n)) == catalog.LATTICE_COUNTS[n]


def test_product_of_chains_is_a_square():
    L = product(chain(2), chain(2))
    assert len(L) == 4 and L.distributive


def test_dual_swaps_meet_and_join():
    L = pentagon()
    D = L.dual()
    for x, y in itertools.product(L.elements, repeat=2):
        assert D.meet(x, y) == L.join(x, y)


# -- set orders -------------------------------------------------------------------

def test_star_leq_examples():
    P = square().poset
    assert star_leq({"0", "x"}, {"x"}, P)
    assert not star_leq({"y"}, {"x"}, P)
    assert star_leq(set(), {"x"}, P)
    assert not star_leq({"x"}, set(), P)


def test_star_leq_rejects_foreign_elements():
    with pytest.raises(CarrierMismatchError):
        star_leq({"zz"}, {"x"}, square().poset)


def test_strong_set_order_examples():
    L = square()
    assert strong_set_order({"0", "x"}, {"x", "1"}, L)
    assert not strong_set_order({"x"}, {"y"}, L)
    assert strong_set_order(set(L.elements), set(L.elements), L)


# -- functionals ------------------------------------------------------------------

def test_functional_needs_a_finite_value():
    with pytest.raises(InvalidFunctionalError):
        ExtendedFunctional({0: INF, 1: INF})


def test_functional_rejects_minus_infinity_and_nan():
    with pytest.raises(InvalidFunctionalError):
        ExtendedFunctional({0: -math.inf, 1: 0})
    with pytest.raises(InvalidFunctionalError):
        ExtendedFunctional({0: math.nan, 1: 0})


def test_indicator_and_domain():
    L = square()
    f = indicator({"x", "1"}, L)
    assert f("x") == 0 and f("y") == INF
    assert effective_domain(f) == {"x", "1"}
    with pytest.raises(CarrierMismatchError):
        indicator({"q"}, L)


def test_precsim_rejects_other_carriers():
    with pytest.raises(CarrierMismatchError):
        precsim(constant(0, chain(2)), constant(0, chain(3)), chain(3))


def test_diamond_two_atoms_indicator_is_not_submodular():
    L = diamond()
    f = indicator({"a", "b"}, L)
    assert not is_submodular(f, L)
    assert precsim_violation(f, f, L) in {("a", "b"), ("b", "a")}


def test_constant_functional_is_submodular_everywhere():
    for L in LATTICES:
        assert is_submodular(constant(3, L), L)


def test_precsim_wrt_matches_full_check():
    L = square()
    a = ExtendedFunctional({"0": 0, "x": 1, "y": 1, "1": 3})
    assert precsim_wrt(a, a, "x", "y", L) == (a("0") + a("1") <= a("x") + a("y"))
    assert not precsim(a, a, L)


def test_precsim_star():
    L = chain(3)
    a = constant(0, L)
    top = indicator({2}, L)
    bottom = indicator({0}, L)
    assert precsim_star([a], [a, top], L)
    assert precsim(a, top, L)
    assert not precsim_star([a], [bottom], L)


def test_positive_part():
    assert positive_part((-1, 0, 2)) == (0, 0, 2)


def test_precsim_linear_componentwise():
    assert precsim_linear([1, 2], [0, 2])
    assert not precsim_linear([1, 1], [0, 2])
    with pytest.raises(CarrierMismatchError):
        precsim_linear([1], [1, 2])


def test_t_monotone_family_from_increasing_maps():
    L = grid_lattice([(0, 1), (0, 1, 2)])
    fam = gen.random_t_monotone_family(L, random.Random(3), 2)
    assert is_t_monotone(fam, L)
    flipped = {u: [tuple(-c for c in fam[u][0])] for u in L.elements}
    nonconstant = len({fam[u][0] for u in L.elements}) > 1
    assert not nonconstant or not is_t_monotone(flipped, L)


def test_lattice_identity_holds_exactly_on_distributive_lattices():
    for L in catalog.all_lattices(6):
        assert (lattice_identity_counterexample(L) is None) == L.distributive
    assert not lattice_identity_holds("a", "b", "c", pentagon())


def test_modified_transitivity_names_the_failed_hypothesis():
    L = square()
    bad = indicator({"x", "y"}, L)  # not submodular
    good = constant(0, L)
    with pytest.raises(HypothesisViolation) as exc:
        check_modified_transitivity(good, bad, good, L)
    assert exc.value.clause in {"a<<b", "b<<b"}


def test_modified_transitivity_needs_distributivity():
    L = diamond()
    z = constant(0, L)
    with pytest.raises(HypothesisViolation) as exc:
        check_modified_transitivity(z, z, z, L)
    assert exc.value.clause == "distributive"


# -- property tests ----------------------------------------------------------------

lattice_st = st.sampled_from(catalog.all_lattices(6))


@settings(max_examples=60, deadline=None)
@given(lattice_st, st.data())
def test_star_leq_is_a_preorder(L, data):
    subset = st.frozensets(st.sampled_from(L.elements))
    A, B, C = data.draw(subset), data.draw(subset), data.draw(subset)
    assert star_leq(A, A, L)
    if star_leq(A, B, L) and star_leq(B, C, L):
        assert star_leq(A, C, L)


@settings(max_examples=60, deadline=None)
@given(lattice_st, st.data())
def test_strong_set_order_matches_indicators(L, data):
    subset = st.frozensets(st.sampled_from(L.elements), min_size=1)
    A, B = data.draw(subset), data.draw(subset)
    assert strong_set_order(A, B, L) == precsim(indicator(A, L), indicator(B, L), L)


values_st = st.sampled_from([0, 1, 2, Fraction(1, 2), INF])


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(catalog.distributive_lattices(6)), st.data())
def test_modified_transitivity_property(L, data):
    def functional():
        vals = data.draw(st.lists(values_st, min_size=len(L), max_size=len(L)).filter(lambda v: any(x != INF for x in v)))
        return ExtendedFunctional(dict(zip(L.elements, vals)))

    a, b, c = functional(), functional(), functional()
    if precsim(a, b, L) and precsim(b, b, L) and precsim(b, c, L):
        assert check_modified_transitivity(a, b, c, L)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_positivity_characterization(n, data):
    coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)
    a = data.draw(st.lists(coeff, min_size=n, max_size=n))
    b = data.draw(st.lists(coeff, min_size=n, max_size=n))
    L = grid_lattice([(Fraction(-1), Fraction(0), Fraction(3, 2))] * n)
    assert precsim(linear_functional(a, L), linear_functional(b, L), L) == precsim_linear(a, b)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(catalog.all_lattices(5)), st.integers(0, 10_000))
def test_precsim_matrix_agrees_with_precsim(L, seed):
    rng = random.Random(seed)
    pool = gen.functional_pool(L, rng, 12)
    M = gen.precsim_matrix(pool, L)
    for i, j in itertools.product(range(len(pool)), repeat=2):
        assert M[i, j] == precsim(pool[i], pool[j], L)
