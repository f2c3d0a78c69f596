import math
from fractions import Fraction

import numpy as np
import pytest

from qvilat import suites
from qvilat.order import constant, chain


@pytest.mark.parametrize("name", ["verify-order", "verify-fixpoint", "verify-qvip"])
def test_finite_suites_pass_at_small_scale(name):
    results = suites.SUITES[name](seed=5, scale=0.02)
    assert results and all(r.passed for r in results)


def test_grid_suite_subset():
    only = {"selection-combination", "cutoff-growth-and-coercivity", "obstacle-permanence"}
    results = suites.verify_grid(seed=2, scale=0.1, only=only)
    assert {r.name for r in results} == only
    assert all(r.passed for r in results)


def test_only_filters_checks():
    results = suites.verify_order(seed=0, only={"lattice-identity"})
    assert [r.name for r in results] == ["lattice-identity"]


def test_check_result_records_first_counterexample():
    r = suites.CheckResult("c", "s")
    r.record(True)
    r.record(False, "first")
    r.record(False, "second")
    assert (r.samples, r.failures, r.counterexample, r.passed) == (3, 2, "first", False)
    assert not suites.CheckResult("empty", "s").passed


def test_to_plain_handles_package_types():
    L = chain(2)
    out = suites.to_plain({"f": constant(0, L), "x": np.array([1.0, math.inf]), "q": Fraction(1, 3),
                           "s": frozenset({2, 1}), "t": (np.float64(0.5),)})
    assert out == {"f": {"0": 0, "1": 0}, "x": [1.0, "inf"], "q": "1/3", "s": [1, 2], "t": [0.5]}


def test_projected_gauss_seidel_respects_the_obstacle():
    from qvilat.grid import preset

    prob = preset("plain-obstacle")
    u = suites.projected_gauss_seidel(prob, prob.sup)
    assert np.all(u <= prob.psi(prob.sup) + 1e-15)
