"""Property suites behind the ``verify-*`` commands.

Each suite runs a list of named checks and returns one ``CheckResult`` per
check with its sample count and the first counterexample found. Suites are
deterministic for a given seed. ``scale`` shrinks the randomized sample
counts (never the exhaustive ones) for quick runs, and ``only`` restricts a
suite to the named checks.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import catalog, generators as gen
from .auxiliary import (
    AuxData,
    coercive_bound_constants,
    FEAS_TOL,
    best_selection,
    compensator_h,
    compensator_violations,
    cutoff_d,
    cutoff_growth_constant,
    solution_norm_bound,
    solve_auxiliary,
)
from .errors import HypothesisViolation
from .extremal import ORDER_TOL, brute_force_extremal, extremal_solutions
from .fixpoint import (
    Multifunction,
    brute_force_greatest_fixed_point,
    brute_force_smallest_fixed_point,
    check_prop_meta,
    fixed_points,
    greatest_element,
    greatest_fixed_point_theorem,
    is_directed_upward,
    is_inductive_chainwise,
    is_increasing_upward,
    is_permanent_upward,
    maximal_elements,
    smallest_fixed_point_theorem,
    subpoints,
)
from .grid import PRESETS, grad_norm_p, lp_norm, preset
from .order import (
    INF,
    ExtendedFunctional,
    check_modified_transitivity,
    diamond,
    grid_lattice,
    indicator,
    lattice_identity_counterexample,
    linear_functional,
    positive_part,
    precsim,
    precsim_linear,
    precsim_wrt,
    star_leq,
    strong_set_order,
)
from .qvip import (
    QVIPInstance,
    build_sub_operator,
    check_dependence,
    default_universe,
    dependence_hypothesis_violation,
    qvip_solutions,
    solution_operator,
    solve_parameterized,
)

SAMPLE_TOL = 1e-8


@dataclass
class CheckResult:
    name: str
    suite: str
    samples: int = 0
    failures: int = 0
    counterexample: object = None
    seconds: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.samples > 0

    def record(self, ok, witness=None) -> None:
        self.samples += 1
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = witness

    def summary(self) -> dict:
        return {
            "check": self.name,
            "suite": self.suite,
            "samples": self.samples,
            "failures": self.failures,
            "passed": self.passed,
            "seconds": round(self.seconds, 3),
            "note": self.note,
            "counterexample": to_plain(self.counterexample),
        }


def to_plain(x):
    """JSON-ready form of a counterexample."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float):
        return "inf" if x == math.inf else "-inf" if x == -math.inf else x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.ndarray):
        return [to_plain(v) for v in x.tolist()]
    if isinstance(x, np.generic):
        return to_plain(x.item())
    if isinstance(x, ExtendedFunctional):
        return {str(k): to_plain(v) for k, v in x.values.items()}
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x, key=repr) if isinstance(x, (set, frozenset)) else x
        return [to_plain(v) for v in items]
    return repr(x)


class _Suite:
    def __init__(self, name: str, only=None):
        self.name = name
        self.only = None if only is None else set(only)
        self.results: list[CheckResult] = []

    def check(self, name: str, fn, *args) -> CheckResult | None:
        if self.only is not None and name not in self.only:
            return None
        res = CheckResult(name, self.name)
        t0 = time.perf_counter()
        fn(res, *args)
        res.seconds = time.perf_counter() - t0
        self.results.append(res)
        return res


def _count(n: int, scale: float) -> int:
    return max(1, int(round(n * scale)))


def _subsets(elements, nonempty=False):
    n = len(elements)
    return [frozenset(elements[i] for i in range(n) if bits >> i & 1) for bits in range(1 if nonempty else 0, 1 << n)]


# -- order-core -----------------------------------------------------------------

def _star_preorder(res, posets):
    for P in posets:
        subs = _subsets(P.elements)
        R = np.array([[star_leq(A, B, P) for B in subs] for A in subs])
        for i in range(len(subs)):
            res.record(R[i, i], ("not reflexive", subs[i]))
        two_step = (R.astype(np.int64) @ R.astype(np.int64)) > 0
        bad = np.argwhere(two_step & ~R)
        res.samples += len(subs) ** 3 - 1
        if len(bad):
            i, k = bad[0]
            j = int(np.flatnonzero(R[i] & R[:, k])[0])
            res.record(False, ("not transitive", subs[i], subs[j], subs[k]))


def _star_singletons(res, posets):
    for P in posets:
        for a, b in itertools.product(P.elements, repeat=2):
            res.record(star_leq({a}, {b}, P) == P.le(a, b), (a, b))


def _strong_set_indicator(res, lattices):
    for L in lattices:
        subs = _subsets(L.elements, nonempty=True)
        ind = [indicator(A, L) for A in subs]
        for (A, a), (B, b) in itertools.product(zip(subs, ind), repeat=2):
            res.record(strong_set_order(A, B, L) == precsim(a, b, L), (A, B))


def _diamond_witness(res):
    L = diamond()
    atoms = ("a", "b")
    witness = indicator(atoms, L)
    res.record(not precsim(witness, witness, L), ("indicator of two atoms is submodular", atoms))
    found = None
    for combo in itertools.product((0, 1, INF), repeat=len(L)):
        if all(c == INF for c in combo):
            continue
        a = ExtendedFunctional(dict(zip(L.elements, combo)))
        res.samples += 1
        if found is None and not precsim(a, a, L):
            found = a
    res.record(found is not None, "no non-submodular functional on the diamond")
    res.note = f"witness {to_plain(found)}"


def _random_grid(rng, n):
    levels = []
    for _ in range(n):
        levels.append(sorted(Fraction(x, 2) for x in rng.sample(range(-4, 5), rng.randint(2, 3))))
    return grid_lattice(levels)


def _positivity(res, rng, count):
    for _ in range(count):
        n = rng.randint(1, 3)
        L = _random_grid(rng, n)
        a, b = gen.random_linear_pair(rng, n)
        got = precsim(linear_functional(a, L), linear_functional(b, L), L)
        res.record(got == precsim_linear(a, b), (a, b, L.elements))
        u, w = rng.choice(L.elements), rng.choice(L.elements)
        lhs = tuple(x - y for x, y in zip(u, L.meet(u, w)))
        res.record(lhs == positive_part(tuple(x - y for x, y in zip(u, w))), ("u - u^w != (u-w)+", u, w))


def _t_monotone(res, rng, count):
    for _ in range(count):
        n = rng.randint(1, 3)
        L = _random_grid(rng, n)
        fam = gen.random_t_monotone_family(L, rng, n)
        funcs = {u: [linear_functional(a, L) for a in fam[u]] for u in L.elements}
        for u, w in itertools.product(L.elements, repeat=2):
            ok = all(precsim_wrt(a, b, u, w, L) for a in funcs[u] for b in funcs[w])
            res.record(ok, (u, w, fam[u], fam[w]))


def _modified_transitivity(res, rng, lattices, total):
    per = -(-total // len(lattices))
    for L in lattices:
        pool = gen.functional_pool(L, rng)
        M = gen.precsim_matrix(pool, L)
        for _ in range(20):
            i, j = rng.randrange(len(pool)), rng.randrange(len(pool))
            if M[i, j] != precsim(pool[i], pool[j], L):  # pragma: no cover - guards the fast path
                res.record(False, ("precsim matrix disagrees", pool[i], pool[j]))
        for _ in range(per):
            a, b, c = gen.random_transitivity_triple(pool, M, rng)
            try:
                ok = check_modified_transitivity(a, b, c, L)
            except HypothesisViolation as exc:  # pragma: no cover - generator guarantees hypotheses
                ok, a = False, ("hypothesis", exc.clause)
            res.record(ok, (a, b, c, L.elements))


def _lattice_identity(res, lattices):
    for L in lattices:
        res.samples += len(L) ** 3 - 1
        res.record(lattice_identity_counterexample(L) is None, (L.elements, lattice_identity_counterexample(L)))


def verify_order(seed: int = 0, scale: float = 1.0, only=None) -> list[CheckResult]:
    rng = random.Random(seed)
    s = _Suite("verify-order", only)
    lattices6 = catalog.all_lattices(6)
    posets = catalog.small_posets() + [L.poset for L in lattices6 if len(L) == 6]
    dist = catalog.distributive_lattices(6)
    s.check("star-leq-preorder", _star_preorder, posets)
    s.check("star-leq-extends-order", _star_singletons, posets)
    s.check("strong-set-order-indicators", _strong_set_indicator, lattices6)
    s.check("precsim-not-reflexive-on-diamond", _diamond_witness)
    s.check("positivity-characterization", _positivity, rng, _count(1000, scale))
    s.check("t-monotone-consequence", _t_monotone, rng, _count(100, scale))
    s.check("modified-transitivity", _modified_transitivity, rng, dist, _count(10_000, scale))
    s.check("lattice-identity", _lattice_identity, dist)
    return s.results


# -- fixpoint-engine ------------------------------------------------------------

def _random_multifunction(L, rng):
    return Multifunction(L, {v: {x for x in L.elements if rng.random() < 0.3} for v in L.elements})


def _nonempty_increasing(L, rng):
    S = gen.random_increasing_upward(L, rng)
    return Multifunction(L, {v: S(v) or {L.bottom} for v in L.elements})


def _fix_in_sub(res, rng, lattices, count):
    for _ in range(count):
        L = rng.choice(lattices)
        S = _random_multifunction(L, rng)
        res.record(fixed_points(S) <= subpoints(S), S.items())


def _sub_inductive(res, rng, lattices, count):
    for _ in range(count):
        L = rng.choice(lattices)
        S = _nonempty_increasing(L, rng)
        res.record(is_inductive_chainwise(subpoints(S), L.poset), dict(S.items()))


def _sub_nonempty(res, rng, lattices, count):
    for _ in range(count):
        L = rng.choice(lattices)
        S = _nonempty_increasing(L, rng)
        res.record(is_increasing_upward(S) and bool(subpoints(S)), dict(S.items()))


def _transport(res, rng, lattices, count):
    for k in range(count):
        L = rng.choice(lattices)
        P = L.poset
        S = gen.random_increasing_upward(L, rng) if k % 2 else _random_multifunction(L, rng)
        ul = {}
        for v in L.elements:
            below = set().union(*(P.downset(x) for x in S(v))) if S(v) else set()
            ul[v] = set(S(v)) | {x for x in below if rng.random() < 0.5}
        ulS = Multifunction(L, ul)
        res.record(is_increasing_upward(S) == is_increasing_upward(ulS), (dict(S.items()), ul))


def _greatest_exists(res, rng, lattices, count):
    while res.samples < count:
        L = rng.choice(lattices)
        S = _random_multifunction(L, rng)
        fix = fixed_points(S)
        if not maximal_elements(fix, L.poset) or not is_directed_upward(fix, L.poset):
            continue
        res.record(greatest_element(fix, L.poset) is not None, dict(S.items()))


def _directed_permanent(L, rng):
    P = L.poset
    values = {}
    for v in sorted(L.elements, key=lambda x: len(P.downset(x))):
        acc = set().union(*(values[x] for x in P.downset(v) if x != v))
        acc |= {x for x in L.elements if rng.random() < 0.2}
        if acc:
            acc.add(L.join_all(list(acc)))
        values[v] = acc
    return Multifunction(L, values)


def _directed_fix(res, rng, lattices, count):
    for _ in range(count):
        L = rng.choice(lattices)
        S = _directed_permanent(L, rng)
        ok_hyp = is_permanent_upward(S) and all(is_directed_upward(S(v), L.poset) for v in L.elements)
        res.record(ok_hyp and is_directed_upward(fixed_points(S), L.poset), dict(S.items()))


def _maximal_subpoints(res, rng, lattices, per_lattice):
    for L in lattices:
        for _ in range(per_lattice):
            S = gen.random_increasing_upward(L, rng)
            v = check_prop_meta(S)
            res.record(bool(v), (dict(S.items()), v.witness))


def _greatest_fp(res, rng, lattices, count):
    for k in range(count):
        L = lattices[k % len(lattices)]
        S, ulS, ul_u = gen.random_greatest_instance(L, rng)
        got = greatest_fixed_point_theorem(S, ulS, L, ul_u)
        want = brute_force_greatest_fixed_point(S)
        res.record(got == want, (dict(S.items()), dict(ulS.items()), ul_u, got, want))


def _smallest_fp(res, rng, lattices, count):
    for k in range(count):
        L = lattices[k % len(lattices)]
        S, olS, ol_u = gen.random_greatest_instance(L.dual(), rng)
        S, olS = S.dual(), olS.dual()
        got = smallest_fixed_point_theorem(S, olS, L, ol_u)
        want = brute_force_smallest_fixed_point(S)
        res.record(got == want, (dict(S.items()), dict(olS.items()), ol_u, got, want))


def verify_fixpoint(seed: int = 0, scale: float = 1.0, only=None) -> list[CheckResult]:
    rng = random.Random(seed)
    s = _Suite("verify-fixpoint", only)
    named = list(catalog.named_lattices().values())
    small = catalog.all_lattices(5)
    s.check("fixed-points-are-subpoints", _fix_in_sub, rng, named, _count(500, scale))
    s.check("subpoints-inductive", _sub_inductive, rng, small, _count(300, scale))
    s.check("subpoints-nonempty", _sub_nonempty, rng, named, _count(300, scale))
    s.check("increasing-upward-transport", _transport, rng, named, _count(300, scale))
    s.check("greatest-fixed-point-exists", _greatest_exists, rng, named, _count(200, scale))
    s.check("fixed-points-directed", _directed_fix, rng, named, _count(300, scale))
    s.check("maximal-subpoints-are-maximal-fixed-points", _maximal_subpoints, rng, named, _count(1000, scale))
    s.check("greatest-fixed-point-ascent", _greatest_fp, rng, named, _count(200, scale))
    s.check("smallest-fixed-point-descent", _smallest_fp, rng, named, _count(200, scale))
    return s.results


# -- qvip-finite ----------------------------------------------------------------

def _qvip_lattices():
    named = catalog.named_lattices()
    return [named[k] for k in ("chain2", "chain3", "square", "diamond", "pentagon", "chain4")]


def _fixed_points_are_solutions(res, rng, lattices, count):
    for _ in range(count):
        L = rng.choice(lattices)
        pool = gen.functional_pool(L, rng, 40)
        inst = gen.random_qvip(L, rng, pool)
        direct = set()
        for u in L.elements:
            if u in inst.K(u, u) and any(
                a(u) != INF and all(a(w) >= a(u) for w in inst.T(u, u)) for a in inst.A(u, u)
            ):
                direct.add(u)
        res.record(qvip_solutions(inst) == direct, (L.elements, sorted(direct, key=repr)))


def _dependence(res, rng, lattices, count):
    pools = {}
    for L in lattices:
        pool = gen.functional_pool(L, rng, 60)
        pools[id(L)] = (pool, gen.precsim_matrix(pool, L))
    rejected = 0
    while res.samples < count:
        L = lattices[res.samples % len(lattices)]
        pool, M = pools[id(L)]
        inst, inst2, v, v2 = gen.random_dependence_pair(L, rng, pool, M)
        if dependence_hypothesis_violation(inst, inst2, v, v2) is not None:
            rejected += 1
            continue
        verdict = check_dependence(inst, inst2, v, v2)
        res.record(bool(verdict), (v, v2, verdict.witness))
    res.note = f"{rejected} generated pairs rejected for failing a hypothesis"


def _sub_operator(res, rng, lattices, count):
    universes = {id(L): default_universe(L) for L in lattices}
    for k in range(count):
        L = lattices[k % len(lattices)]
        pool = gen.functional_pool(L, rng, 30)
        inst = gen.random_split_qvip(L, rng, pool, universes[id(L)])
        sub = build_sub_operator(inst)
        for v in L.elements:
            S = solve_parameterized(inst, v).solutions
            S_sub = solve_parameterized(sub, v).solutions
            res.record(S <= S_sub, (v, S - S_sub))


def _permanent_instance(L, rng, pool):
    P = L.poset
    subm = [a for a in pool if precsim(a, a, L)]
    A, K, T = {}, {}, {}
    order = sorted(L.elements, key=lambda x: len(P.downset(x)))
    for u in L.elements:
        finite = [a for a in subm if a(u) != INF] or subm
        fam = tuple(rng.sample(finite, min(len(finite), rng.randint(1, 2))))
        K_prev = set()
        for v in order:
            below = [K[u, x] for x in P.downset(v) if x != v]
            K_prev = set().union(*below) if below else set()
            A[u, v] = fam
            K[u, v] = frozenset(K_prev | {x for x in L.elements if rng.random() < 0.3})
        for v in reversed(order):
            above = [T[u, x] for x in P.upset(v) if x != v]
            base = frozenset(P.downset(u))
            if above:
                base = frozenset.intersection(*above)
            T[u, v] = frozenset(x for x in base if rng.random() < 0.8 or x == u)
    return QVIPInstance(L, A=A, K=K, T=T)


def _permanence(res, rng, lattices, count):
    tried = 0
    while res.samples < count and tried < 50 * count:
        tried += 1
        L = rng.choice(lattices)
        pool = gen.functional_pool(L, rng, 40)
        inst = _permanent_instance(L, rng, pool)
        P = L.poset
        if any(
            dependence_hypothesis_violation(inst, inst, v, w) is not None
            for v in L.elements
            for w in L.elements
            if P.le(v, w)
        ):
            continue
        S = solution_operator(inst)
        res.record(is_permanent_upward(S), dict(S.items()))
    res.note = f"{tried} instances generated"


def verify_qvip(seed: int = 0, scale: float = 1.0, only=None) -> list[CheckResult]:
    rng = random.Random(seed)
    s = _Suite("verify-qvip", only)
    lattices = _qvip_lattices()
    small = [L for L in lattices if len(L) <= 4]
    s.check("fixed-points-are-solutions", _fixed_points_are_solutions, rng, lattices, _count(200, scale))
    s.check("dependence-lemma", _dependence, rng, lattices, _count(1000, scale))
    s.check("sub-operator-inclusion", _sub_operator, rng, small, _count(60, scale))
    s.check("permanent-upward-transport", _permanence, rng, lattices, _count(100, scale))
    return s.results


# -- elliptic-grid and extremal-driver ------------------------------------------

def sandwich_instances(seed: int, count: int = 60):
    """Yield (k, problem, v, aux) over p in {1.5, 2, 3} and n in {15, 31, 63, 129}."""
    rng = np.random.default_rng(seed)
    for k in range(count):
        p = (1.5, 2.0, 3.0)[k % 3]
        n = (15, 31, 63, 129)[(k // 3) % 4]
        prob = gen.random_grid_problem(rng, p, n, name=f"random-{k}")
        v = gen.random_parameter(prob, rng)
        sub2, sup2 = gen.second_pair(prob, v, rng)
        yield k, prob, v, AuxData.build(prob, v, (prob.sub, sub2), (prob.sup, sup2))


def _linear_oracle(res, tol):
    from scipy.linalg import solve_banded

    prob = preset("linear-load")
    n, h = prob.n, prob.h
    load, _ = prob.f_interval(prob.sub, prob.sub)
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / h**2
    ab[1, :] = 2.0 / h**2
    ab[2, :-1] = -1.0 / h**2
    want = solve_banded((1, 1), ab, -load)
    aux = AuxData.from_pair(prob, want, prob.sub, prob.sup)
    for mode in ("greatest", "smallest"):
        got = solve_auxiliary(prob, want, aux, tol=1e-10, mode=mode).u
        err = float(np.max(np.abs(got - want)))
        res.record(err <= tol, (mode, err))
        res.note = f"max error {err:.2e}"


def projected_gauss_seidel(prob, v, tol=1e-10, max_sweeps=200_000):
    """Obstacle oracle for p = 2 with a single-valued load."""
    n, h = prob.n, prob.h
    load, _ = prob.f_interval(prob.sub, v)
    psi = prob.psi(v)
    u = np.zeros(n)
    for _ in range(max_sweeps):
        change = 0.0
        for i in range(n):
            left = u[i - 1] if i else 0.0
            right = u[i + 1] if i < n - 1 else 0.0
            new = min(psi[i], 0.5 * (left + right - h * h * load[i]))
            change = max(change, abs(new - u[i]))
            u[i] = new
        if change < tol:
            break
    return u


def _obstacle_oracle(res, tol):
    prob = preset("plain-obstacle")
    v = prob.sup.copy()
    want = projected_gauss_seidel(prob, v)
    aux = AuxData.from_pair(prob, v, prob.sub, prob.sup)
    for mode in ("greatest", "smallest"):
        got = solve_auxiliary(prob, v, aux, tol=1e-10, mode=mode).u
        err = float(np.max(np.abs(got - want)))
        res.record(err <= tol, (mode, err))
        res.note = f"max error {err:.2e}"


def _sandwich(res, seed, count, tol, stats):
    worst = 0.0
    for k, prob, v, aux in sandwich_instances(seed, count):
        for mode in ("greatest", "smallest"):
            r = solve_auxiliary(prob, v, aux, tol=1e-10, mode=mode)
            ok = r.sandwich_ok and r.qvip_residual <= tol
            worst = max(worst, r.qvip_residual)
            res.record(ok, {"instance": k, "p": prob.p, "n": prob.n, "mode": mode,
                            "sandwich_ok": r.sandwich_ok, "residual": r.qvip_residual})
            stats.append((prob, r))
    res.note = f"worst residual {worst:.2e}"


def _compensator(res, seed, count, samples):
    rng = np.random.default_rng(seed + 1)
    per = -(-samples // count)
    exact_zero = True
    for k, prob, v, aux in sandwich_instances(seed, count):
        rows = rng.integers(0, prob.n, per)
        lo = np.minimum(prob.sub, aux.ulv1)[rows] - 0.1
        hi = np.maximum(prob.sup, aux.olv1)[rows] + 0.1
        s = lo + (hi - lo) * rng.uniform(0, 1, per)
        low, up = compensator_violations(aux, s, rows)
        bad = np.flatnonzero(low | up)
        res.samples += per
        res.failures += len(bad)
        if len(bad) and res.counterexample is None:
            j = bad[0]
            res.counterexample = {"instance": k, "node": int(rows[j]), "s": float(s[j])}
        for i in rng.integers(0, prob.n, 5):
            for t in (0.0, 0.5, 1.0):
                x = aux.ulv[i] + t * (aux.olv[i] - aux.ulv[i])
                if compensator_h(int(i), float(x), aux) != 0.0:
                    exact_zero = False
                    res.record(False, {"instance": k, "node": int(i), "s": float(x), "h": "nonzero on band"})
    res.note = "h is exactly 0 on the band" if exact_zero else "h nonzero on the band"


def _selection_combination(res, seed, count):
    for k, prob, v, aux in sandwich_instances(seed, count):
        lo, hi = prob.f_interval(aux.ulv, v)
        res.record(bool(np.all((lo <= aux.uleta) & (aux.uleta <= hi))), {"instance": k, "side": "lower"})
        lo, hi = prob.f_interval(aux.olv, v)
        res.record(bool(np.all((lo <= aux.oleta) & (aux.oleta <= hi))), {"instance": k, "side": "upper"})


def _cutoff_bounds(res, seed, count):
    rng = np.random.default_rng(seed + 2)
    for k, prob, v, aux in sandwich_instances(seed, count):
        p = prob.p
        d0 = cutoff_growth_constant(p)
        c1, c2 = coercive_bound_constants(p)
        for _ in range(20):
            u = rng.normal(0.0, 2.0 * float(np.max(np.abs(prob.sup))) + 0.1, prob.n)
            d = cutoff_d(u, aux.ulv, aux.olv, p)
            bound = d0 * (np.abs(aux.ulv) ** (p - 1) + np.abs(u) ** (p - 1) + np.abs(aux.olv) ** (p - 1))
            res.record(bool(np.all(np.abs(d) <= bound * (1 + 1e-12))), {"instance": k, "law": "growth"})
            lhs = prob.h * float(np.dot(d, u))
            rhs = c1 * lp_norm(u, prob) ** p - c2 * (lp_norm(aux.ulv, prob) ** p + lp_norm(aux.olv, prob) ** p)
            res.record(lhs >= rhs - 1e-12 * (1 + abs(rhs)), {"instance": k, "law": "coercive", "lhs": lhs, "rhs": rhs})


def _solution_bound(res, runs):
    for prob, u in runs:
        res.record(grad_norm_p(u, prob) <= solution_norm_bound(prob) * (1 + 1e-9),
                   {"problem": prob.name, "norm": grad_norm_p(u, prob), "bound": solution_norm_bound(prob)})


def _obstacle_permanence(res, seed):
    rng = np.random.default_rng(seed + 3)
    for _ in range(4):
        prob = gen.random_grid_problem(rng, 2.0, 2)
        while not np.all(np.isfinite(prob.psi_base)):
            prob = gen.random_grid_problem(rng, 2.0, 2)
        top = float(np.max(prob.sup))
        levels = [float(x) for x in np.linspace(float(np.min(prob.sub)), top, 5)]
        L = grid_lattice([levels, levels])
        C = {v: frozenset(u for u in L.elements if np.all(np.array(u) <= prob.psi(np.array(v)))) for v in L.elements}
        for v, w in itertools.product(L.elements, repeat=2):
            if L.le(v, w) and C[v] and C[w]:
                res.record(strong_set_order(C[v], C[w], L), (v, w))


def _extremal_oracle(res):
    prob = preset("tiny-quantized")
    levels = prob.meta["levels"]
    step = min(b - a for a, b in zip(levels, levels[1:]))
    bf = brute_force_extremal(prob, levels)
    ex = extremal_solutions(prob)
    res.record(bf.minimum is not None, "no quantized solution")
    if bf.minimum is None:
        return
    res.record(bool(np.all(np.abs(ex.u_smallest - bf.minimum) <= step + ORDER_TOL)),
               {"driver": ex.u_smallest, "oracle": bf.minimum})
    res.record(bool(np.all(np.abs(ex.u_greatest - bf.maximum) <= step + ORDER_TOL)),
               {"driver": ex.u_greatest, "oracle": bf.maximum})
    res.record(ex.monotone_ok and ex.ordered, "trace left the order")


def _directedness(res):
    prob = preset("tiny-quantized")
    levels = prob.meta["levels"]
    v = prob.sup.copy()
    sols = brute_force_extremal(prob, levels, v=v).solutions
    for u1, u2 in itertools.combinations(sols, 2):
        aux = AuxData.build(prob, v, (u1, u2), (prob.sup, prob.sup),
                            sub_etas=(best_selection(u1, v, prob), best_selection(u2, v, prob)))
        r = solve_auxiliary(prob, v, aux, mode="greatest")
        ok = bool(np.all(r.u >= np.maximum(u1, u2) - SAMPLE_TOL)) and r.qvip_residual <= SAMPLE_TOL
        res.record(ok, {"u1": u1, "u2": u2, "u": r.u, "residual": r.qvip_residual})


def _presets(res, tol, max_iter, runs):
    for name in PRESETS:
        prob = preset(name)
        ex = extremal_solutions(prob, fixed_tol=tol, max_iter=max_iter)
        runs += [(prob, ex.u_smallest), (prob, ex.u_greatest)]
        ok = (
            all(ex.converged)
            and ex.both_fixed
            and bool(np.all(prob.sub <= ex.u_smallest + ORDER_TOL))
            and ex.ordered
            and bool(np.all(ex.u_greatest <= prob.sup + ORDER_TOL))
        )
        res.record(ok, {"preset": name, "converged": ex.converged, "residuals": ex.residuals})


def _random_ordered(res, seed, count):
    rng = np.random.default_rng(seed + 4)
    for k in range(count):
        p = (1.5, 2.0, 3.0)[k % 3]
        prob = gen.random_grid_problem(rng, p, 15, name=f"driver-{k}")
        ex = extremal_solutions(prob)
        res.record(ex.ordered and ex.monotone_ok, {"instance": k, "p": p})


def verify_grid(seed: int = 0, scale: float = 1.0, tol: float = SAMPLE_TOL, max_iter: int = 500, only=None) -> list[CheckResult]:
    s = _Suite("verify-grid", only)
    count = max(1, int(round(60 * scale)))
    small = max(1, int(round(12 * scale)))
    runs = []
    s.check("p2-linear-oracle", _linear_oracle, 1e-10)
    s.check("p2-obstacle-oracle", _obstacle_oracle, 1e-6)
    s.check("sandwich", _sandwich, seed, count, tol, [])
    s.check("compensator-inequalities", _compensator, seed, count, _count(100_000, scale))
    s.check("selection-combination", _selection_combination, seed, small)
    s.check("cutoff-growth-and-coercivity", _cutoff_bounds, seed, small)
    s.check("obstacle-permanence", _obstacle_permanence, seed)
    s.check("extremal-oracle", _extremal_oracle)
    s.check("directedness-witness", _directedness)
    s.check("presets-extremal", _presets, tol, max_iter, runs)
    s.check("solution-norm-bound", _solution_bound, runs)
    s.check("drivers-ordered", _random_ordered, seed, small)
    return s.results


SUITES = {
    "verify-order": verify_order,
    "verify-fixpoint": verify_fixpoint,
    "verify-qvip": verify_qvip,
    "verify-grid": verify_grid,
}
