"""Random instances for the property suites.

Finite objects use ``random.Random``; grid problems use numpy generators.
Every constructor builds its instance so that the relevant hypotheses hold
by construction, and the suites re-check them anyway.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from .extremal import verify_subsolution, verify_supersolution
from .fixpoint import Multifunction
from .grid import Flux, GridProblem, IntervalBifunction, Term, apply_E
from .order import INF, ExtendedFunctional, FiniteLattice, effective_domain, indicator
from .qvip import QVIPInstance


# -- functionals -------------------------------------------------------------

def random_functional(L: FiniteLattice, rng: random.Random, values=(0, 1, 2, INF)) -> ExtendedFunctional:
    while True:
        vals = {x: rng.choice(values) for x in L.elements}
        if any(v != INF for v in vals.values()):
            return ExtendedFunctional(vals)


def _random_sublattice(L, rng):
    seed = rng.sample(list(L.elements), rng.randint(1, min(3, len(L))))
    closed = set(seed)
    while True:
        extra = {L.meet(a, b) for a in closed for b in closed} | {L.join(a, b) for a in closed for b in closed}
        if extra <= closed:
            return closed
        closed |= extra


def functional_pool(L: FiniteLattice, rng: random.Random, size: int = 120) -> list:
    """Distinct functionals mixing constants, sublattice indicators and random tables."""
    pool = {}
    pool[ExtendedFunctional({x: 0 for x in L.elements})] = None
    pool[indicator([L.top], L)] = None
    pool[indicator([L.bottom], L)] = None
    tries = 0
    while len(pool) < size and tries < 20 * size:
        tries += 1
        kind = rng.random()
        if kind < 0.3:
            f = indicator(_random_sublattice(L, rng), L)
            if rng.random() < 0.5:
                g = random_functional(L, rng, (0, 1, 2))
                f = f + g
        else:
            f = random_functional(L, rng)
        pool[f] = None
    return list(pool)


def precsim_matrix(pool, L: FiniteLattice) -> np.ndarray:
    """M[i, j] = pool[i] << pool[j], computed in one vectorized pass."""
    T = np.array([[float(v) for v in f.table(L)] for f in pool])
    mt = np.array(L.meet_table)
    jt = np.array(L.join_table)
    lhs = T[:, None, mt] + T[None, :, jt]
    rhs = T[:, None, :, None] + T[None, :, None, :]
    return np.all(lhs <= rhs, axis=(2, 3))


def random_transitivity_triple(pool, M, rng: random.Random):
    """(a, b, c) from the pool with a << b, b << b, b << c."""
    subm = [i for i in range(len(pool)) if M[i, i]]
    b = rng.choice(subm)
    a = rng.choice(np.flatnonzero(M[:, b]).tolist())
    c = rng.choice(np.flatnonzero(M[b, :]).tolist())
    return pool[a], pool[b], pool[c]


# -- linear functionals on grids ---------------------------------------------

def random_linear_pair(rng: random.Random, n: int, denom: int = 4):
    """Rational coefficient vectors; about half the pairs have a - b >= 0."""
    b = [Fraction(rng.randint(-2 * denom, 2 * denom), denom) for _ in range(n)]
    if rng.random() < 0.5:
        d = [Fraction(rng.randint(0, 2 * denom), denom) for _ in range(n)]
    else:
        d = [Fraction(rng.randint(-2 * denom, 2 * denom), denom) for _ in range(n)]
    return [x + y for x, y in zip(b, d)], b


def random_t_monotone_family(L: FiniteLattice, rng: random.Random, n: int):
    """u -> {(g_1(u_1), ..., g_n(u_n))} with each g_i increasing."""
    levels = sorted({u[i] for u in L.elements for i in range(n)})
    g = []
    for _ in range(n):
        steps = [Fraction(rng.randint(0, 3), 2) for _ in levels]
        acc, table = Fraction(rng.randint(-2, 2)), {}
        for lev, st in zip(levels, steps):
            acc += st
            table[lev] = acc
        g.append(table)
    return {u: [tuple(g[i][u[i]] for i in range(n))] for u in L.elements}


# -- multifunctions ----------------------------------------------------------

def random_monotone_map(L: FiniteLattice, rng: random.Random) -> dict:
    """v -> join of r(x) over x <= v, for a random r; always order preserving."""
    r = {x: rng.choice(L.elements) for x in L.elements}
    P = L.poset
    return {v: L.join_all([r[x] for x in L.elements if P.le(x, v)]) for v in L.elements}


def random_increasing_upward(L: FiniteLattice, rng: random.Random) -> Multifunction:
    """Union of graphs of monotone maps plus elements below them, empty on a
    random down-set."""
    P = L.poset
    maps = [random_monotone_map(L, rng) for _ in range(rng.randint(1, 3))]
    empty = set()
    if rng.random() < 0.3:
        empty = set(P.downset(rng.choice(L.elements)))
    values = {}
    for v in L.elements:
        if v in empty:
            values[v] = set()
            continue
        image = {m[v] for m in maps}
        for m in maps:
            below = sorted(P.downset(m[v]), key=P.index.__getitem__)
            image.update(x for x in below if rng.random() < 0.3)
        values[v] = image
    return Multifunction(L, values)


def random_greatest_instance(L: FiniteLattice, rng: random.Random):
    """(S, ulS, ul_u) meeting every hypothesis of the greatest-fixed-point theorem.

    ulS(v) = down(m(v)) n up(r) for a monotone m and r <= m(bottom); S(v) is a
    random subset of ulS(v) containing m(v).
    """
    P = L.poset
    m = random_monotone_map(L, rng)
    r = rng.choice(sorted(P.downset(m[L.bottom]), key=P.index.__getitem__))
    ul, S = {}, {}
    for v in L.elements:
        band = P.downset(m[v]) & P.upset(r)
        ul[v] = band
        S[v] = {m[v]} | {x for x in band if rng.random() < 0.4}
    candidates = [v for v in L.elements if P.le(v, m[v]) and P.le(r, m[v])]
    ul_u = rng.choice(candidates)
    return Multifunction(L, S), Multifunction(L, ul), ul_u


# -- finite QVIP pairs -------------------------------------------------------

def _random_subset(xs, rng, p=0.5, nonempty=False):
    out = {x for x in xs if rng.random() < p}
    if nonempty and not out:
        out = {rng.choice(list(xs))}
    return out


def random_qvip(L: FiniteLattice, rng: random.Random, pool, full_tests=False, choices=None) -> QVIPInstance:
    """``choices(u)`` optionally restricts the functionals drawn at u."""
    A, K, T = {}, {}, {}
    for u in L.elements:
        cand = pool if choices is None else choices(u)
        for v in L.elements:
            A[u, v] = tuple(rng.sample(cand, min(len(cand), rng.randint(1, 3))))
            K[u, v] = _random_subset(L.elements, rng, 0.7) | ({u} if rng.random() < 0.7 else set())
            T[u, v] = set(L.elements) if full_tests else _random_subset(L.elements, rng, 0.6)
    return QVIPInstance(L, A=A, K=K, T=T)


def random_dependence_pair(L: FiniteLattice, rng: random.Random, pool, M):
    """(inst, inst2, v, v2) satisfying the dependence-lemma hypotheses.

    A(u, v) is drawn from functionals with a partner finite at u, and
    A'(u, v2) holds such a partner for each of them; K' grows K, and T' keeps
    only the part of T below u.
    """
    P = L.poset
    index = {f: i for i, f in enumerate(pool)}
    finite_at = {u: np.array([b(u) != INF for b in pool]) for u in L.elements}
    usable = {u: [a for i, a in enumerate(pool) if np.any(M[i] & finite_at[u])] for u in L.elements}
    inst = random_qvip(L, rng, pool, choices=lambda u: usable[u] or pool)
    v = rng.choice(L.elements)
    v2 = rng.choice(sorted(P.upset(v), key=P.index.__getitem__))
    A2, K2, T2 = {}, {}, {}
    for u in L.elements:
        fam = []
        for a in inst.A(u, v):
            ups = [pool[j] for j in np.flatnonzero(M[index[a]])]
            finite = [b for b in ups if b(u) != INF]
            fam.append(rng.choice(finite or ups))
            if rng.random() < 0.3:
                fam.append(rng.choice(pool))
        for w in L.elements:
            A2[u, w] = tuple(fam)
            K2[u, w] = inst.K(u, v) | _random_subset(L.elements, rng, 0.3)
            below = inst.T(u, v) & P.downset(u)
            T2[u, w] = _random_subset(below, rng, 0.7) | ({u} if u in inst.T(u, v) else set())
    return inst, QVIPInstance(L, A=A2, K=K2, T=T2), v, v2


def random_split_qvip(L: FiniteLattice, rng: random.Random, pool, universe):
    """Instance in split form A = base + K_v with K_v drawn from the universe."""
    kv = {v: rng.choice(universe) for v in L.elements}
    base = {}
    for v in L.elements:
        dom = effective_domain(kv[v])
        fits = [e for e in pool if effective_domain(e) & dom]
        for u in L.elements:
            base[u, v] = tuple(rng.sample(fits, min(len(fits), rng.randint(1, 2))))
    return QVIPInstance(L, base=lambda u, v: base[u, v], Kv=kv, universe=universe)


# -- grid problems -----------------------------------------------------------

def _profile(x, p, load):
    q = 1.0 / (p - 1.0)
    return load**q * (0.5 ** (q + 1) - np.abs(0.5 - x) ** (q + 1)) / (q + 1)


def random_grid_problem(rng: np.random.Generator, p: float, n: int, name: str = "random") -> GridProblem:
    """Step bifunction plus affine quasi-obstacle, with verified sub/super."""
    terms = []
    load = float(rng.uniform(0.5, 4.0))
    spread = float(rng.uniform(0.0, 1.0)) if rng.random() < 0.5 else 0.0
    terms.append(Term("const", (-load - spread, -load)))
    for _ in range(int(rng.integers(0, 3))):
        at = float(rng.uniform(0.0, 0.08))
        lo1, lo2 = sorted(rng.uniform(-2.0, 2.0, 2))
        x0 = float(rng.uniform(0.0, 0.5))
        terms.append(Term("step_s", (float(lo1), float(lo1 + rng.uniform(0, 0.5))),
                          (float(lo2), float(lo2 + rng.uniform(0, 0.5))), at, (x0, x0 + 0.5)))
    for _ in range(int(rng.integers(0, 3))):
        at = float(rng.uniform(0.0, 0.08))
        high = float(rng.uniform(0.0, 2.0))
        width = float(rng.uniform(0.0, 0.3))
        terms.append(Term("step_t", (high, high + width), (0.0, width), at))
    f = IntervalBifunction(tuple(terms))
    x = np.arange(1, n + 1) / (n + 1)
    if rng.random() < 0.25:
        base = np.full(n, np.inf)
        slope = np.zeros(n)
    else:
        base = np.full(n, float(rng.uniform(0.01, 0.1))) + float(rng.uniform(0, 0.05)) * np.sin(np.pi * x)
        slope = np.full(n, float(rng.uniform(0.0, 0.5)))
    bound = sum(t.bound() for t in terms) + 1.0
    flux = Flux(p)
    prob = None
    for scale in 2.0 ** np.arange(1, 12):
        sub = -_profile(x, p, scale * bound)
        sup = _profile(x, p, scale * bound)
        prob = GridProblem(n, flux, f, base, slope, sub, sup, None, name)
        if verify_subsolution(prob, sub) and verify_supersolution(prob, sup):
            return prob
    raise RuntimeError("could not build a sub/supersolution pair")  # pragma: no cover


def second_pair(prob: GridProblem, v, rng: np.random.Generator):
    """Another subsolution and supersolution at parameter v, of a different
    shape so that they cross the first pair."""
    x = prob.x
    amp = float(np.max(prob.sup)) * float(rng.uniform(0.6, 1.2))
    skew = float(rng.uniform(0.2, 0.8))
    shape = np.minimum(x / skew, (1 - x) / (1 - skew)) ** 0.5
    for k in range(12):
        sub2 = np.maximum(-amp * shape * 2.0**k, prob.sub)
        sup2 = np.minimum(amp * shape * 2.0**k, prob.sup)
        if _is_sub_at(prob, sub2, v) and _is_super_at(prob, sup2, v):
            return sub2, sup2
    return prob.sub.copy(), prob.sup.copy()


def _is_sub_at(prob, u, v, tol=1e-9):
    psi = prob.psi(v)
    if np.any(u > psi + 1e-12):
        return False
    lo, _ = prob.f_interval(u, v)
    return bool(np.all(prob.h * (apply_E(u, prob) + lo) <= tol))


def _is_super_at(prob, u, v, tol=1e-9):
    _, hi = prob.f_interval(u, v)
    free = u < prob.psi(v)
    return bool(np.all(np.where(free, -prob.h * (apply_E(u, prob) + hi), 0.0) <= tol))


def random_parameter(prob: GridProblem, rng: np.random.Generator) -> np.ndarray:
    theta = rng.uniform(0.0, 1.0, prob.n)
    return prob.sub + theta * (prob.sup - prob.sub)
