"""The eleven acceptance criteria, each with its stated tolerance and time
budget. Every criterion prints one PASS/FAIL line, repeated in the terminal
summary."""

import time

import numpy as np
import pytest

from qvilat import suites
from qvilat.auxiliary import AuxData, solve_auxiliary
from qvilat.grid import PRESETS, preset

from conftest import ACCEPTANCE_LINES

SEED = 0


def _report(number, title, ok, seconds, budget, detail=""):
    ok = ok and seconds < budget
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} {title} ({seconds:.1f}s of {budget:g}s) {detail}".rstrip()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def _run(suite, only, **kw):
    t0 = time.perf_counter()
    results = {r.name: r for r in suites.SUITES[suite](seed=SEED, only=only, **kw)}
    return results, time.perf_counter() - t0


def _describe(results):
    return "; ".join(f"{r.name}: {r.samples} samples, {r.failures} failures" for r in results.values())


def test_criterion_01_order_kernel_laws():
    only = {"star-leq-preorder", "star-leq-extends-order", "strong-set-order-indicators",
            "precsim-not-reflexive-on-diamond"}
    res, dt = _run("verify-order", only)
    ok = len(res) == 4 and all(r.passed for r in res.values())
    assert _report(1, "order-kernel laws", ok, dt, 10, _describe(res))


def test_criterion_02_modified_transitivity():
    res, dt = _run("verify-order", {"modified-transitivity", "lattice-identity"})
    mt = res["modified-transitivity"]
    ok = mt.passed and mt.samples >= 10_000 and res["lattice-identity"].passed
    assert _report(2, "modified transitivity", ok, dt, 30, _describe(res))


def test_criterion_03_positivity():
    res, dt = _run("verify-order", {"positivity-characterization"})
    r = res["positivity-characterization"]
    # two records per pair: the agreement and the (u - w)+ identity
    ok = r.passed and r.samples >= 2 * 1000
    assert _report(3, "positivity characterization", ok, dt, 10, _describe(res))


def test_criterion_04_maximal_subpoints():
    res, dt = _run("verify-fixpoint", {"maximal-subpoints-are-maximal-fixed-points"})
    r = res["maximal-subpoints-are-maximal-fixed-points"]
    from qvilat.catalog import named_lattices

    ok = r.passed and r.samples >= 1000 * len(named_lattices())
    assert _report(4, "maximal-subpoint theorem", ok, dt, 30, _describe(res))


def test_criterion_05_greatest_fixed_point():
    res, dt = _run("verify-fixpoint", {"greatest-fixed-point-ascent", "smallest-fixed-point-descent"})
    ok = all(r.passed and r.samples >= 200 for r in res.values()) and len(res) == 2
    assert _report(5, "greatest/smallest fixed point", ok, dt, 60, _describe(res))


def test_criterion_06_dependence_lemma():
    res, dt = _run("verify-qvip", {"dependence-lemma"})
    r = res["dependence-lemma"]
    ok = r.passed and r.samples >= 1000
    assert _report(6, "dependence lemma", ok, dt, 60, _describe(res))


def test_criterion_07_p2_oracles():
    res, dt = _run("verify-grid", {"p2-linear-oracle", "p2-obstacle-oracle"})
    ok = len(res) == 2 and all(r.passed for r in res.values())
    detail = "; ".join(f"{r.name}: {r.note}" for r in res.values())
    assert _report(7, "p=2 oracles (1e-10 linear, 1e-6 obstacle)", ok, dt, 5, detail)


def test_criterion_08_sandwich():
    res, dt = _run("verify-grid", {"sandwich"})
    r = res["sandwich"]
    ok = r.passed and r.samples >= 2 * 50
    detail = f"{r.samples} solves, {r.failures} failures, {r.note}"
    if r.counterexample is not None:
        detail += f", first failure {suites.to_plain(r.counterexample)}"
    assert _report(8, "sandwich at desk scale", ok, dt, 300, detail)


def test_criterion_09_compensator():
    res, dt = _run("verify-grid", {"compensator-inequalities"})
    r = res["compensator-inequalities"]
    ok = r.passed and r.samples >= 100_000 and r.note == "h is exactly 0 on the band"
    assert _report(9, "compensator inequalities", ok, dt, 10, f"{r.samples} samples, {r.note}")


def test_criterion_10_extremality_at_oracle_scale():
    res, dt = _run("verify-grid", {"extremal-oracle", "directedness-witness", "drivers-ordered"})
    ok = len(res) == 3 and all(r.passed for r in res.values())
    assert _report(10, "extremality at oracle scale", ok, dt, 60, _describe(res))


def test_criterion_11_final_theorem_smoke():
    t0 = time.perf_counter()
    bad = []
    for name in PRESETS:
        prob = preset(name)
        from qvilat.extremal import extremal_solutions

        ex = extremal_solutions(prob)
        ok = (
            all(ex.converged)
            and max(ex.residuals) <= 1e-8
            and np.all(prob.sub <= ex.u_smallest + 1e-8)
            and np.all(ex.u_smallest <= ex.u_greatest + 1e-8)
            and np.all(ex.u_greatest <= prob.sup + 1e-8)
        )
        if not ok:
            bad.append(name)
    dt = time.perf_counter() - t0
    assert _report(11, "both extremal solutions on every preset", not bad, dt, 120,
                   f"{len(PRESETS)} presets, failing: {bad or 'none'}")
