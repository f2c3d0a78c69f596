import numpy as np
import pytest

from qvilat import generators as gen
from qvilat.errors import InstanceTooLargeError
from qvilat.extremal import (
    brute_force_extremal,
    extremal_solutions,
    greatest_solution,
    smallest_solution,
    verify_subsolution,
    verify_supersolution,
)
from qvilat.grid import PRESETS, preset


@pytest.mark.parametrize("name", PRESETS)
def test_presets_have_ordered_fixed_points(name):
    prob = preset(name)
    ex = extremal_solutions(prob)
    assert all(ex.converged) and ex.both_fixed and ex.monotone_ok
    assert np.all(prob.sub <= ex.u_smallest + 1e-8)
    assert ex.ordered
    assert np.all(ex.u_greatest <= prob.sup + 1e-8)


def test_monotone_problem_has_one_solution():
    # f does not depend on u and E is strictly monotone, so both drivers agree
    prob = preset("plain-obstacle")
    ex = extremal_solutions(prob)
    assert np.max(np.abs(ex.u_greatest - ex.u_smallest)) <= 1e-10


def test_traces_are_monotone():
    prob = preset("quasi-obstacle")
    lo = smallest_solution(prob)
    hi = greatest_solution(prob)
    assert [s.outer_iter for s in lo.steps] == list(range(1, len(lo.steps) + 1))
    maxima = [s.u_max for s in lo.steps]
    assert all(a <= b + 1e-12 for a, b in zip(maxima, maxima[1:]))
    maxima = [s.u_max for s in hi.steps]
    assert all(a >= b - 1e-12 for a, b in zip(maxima, maxima[1:]))
    u, steps = hi
    assert u is hi.u and steps is hi.steps


def test_tiny_preset_against_enumeration():
    prob = preset("tiny-quantized")
    bf = brute_force_extremal(prob)
    assert bf.has_smallest and bf.has_greatest
    ex = extremal_solutions(prob)
    assert np.allclose(ex.u_smallest, bf.minimum, atol=0.25)
    assert np.allclose(ex.u_greatest, bf.maximum, atol=0.25)
    for u in bf.solutions:
        assert np.all(ex.u_smallest <= u + 1e-8) and np.all(u <= ex.u_greatest + 1e-8)


def test_enumeration_caps_and_needs_levels():
    with pytest.raises(InstanceTooLargeError):
        brute_force_extremal(preset("linear-load"), levels=[0, 1])
    with pytest.raises(ValueError):
        brute_force_extremal(preset("tiny-quantized", meta={}))


def test_sub_and_supersolution_checks():
    prob = preset("linear-load")
    assert verify_subsolution(prob, prob.sub)
    assert verify_supersolution(prob, prob.sup)
    assert not verify_subsolution(prob, prob.sup * 4)
    assert not verify_supersolution(prob, prob.sub)
    obst = preset("plain-obstacle")
    bad = verify_subsolution(obst, obst.sup + 1)
    assert not bad and "obstacle" in bad.detail


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_problems_give_ordered_extremal_pair(seed):
    rng = np.random.default_rng(seed)
    prob = gen.random_grid_problem(rng, (1.5, 2.0, 3.0)[seed], 15)
    ex = extremal_solutions(prob)
    assert ex.ordered and ex.monotone_ok and ex.both_fixed
