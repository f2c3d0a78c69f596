"""Quasi-variational inclusions on finite lattices.

An instance carries three bifunctions on W x V:

* ``A(u, v)``: a finite, ordered family of extended-real functionals on W,
* ``K(u, v)``: the admissible set (u must belong to K(u, v)),
* ``T(u, v)``: the test set.

u solves the problem at parameter v when u is in K(u, v) and some a in
A(u, v) satisfies a(w) >= a(u) for every test element w (so a(u) is finite).
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import CarrierMismatchError, HypothesisViolation, InvalidFunctionalError, UndeclaredUniverseError
from .fixpoint import Multifunction, Verdict, fixed_points
from .order import (
    INF,
    ExtendedFunctional,
    FiniteLattice,
    FinitePoset,
    effective_domain,
    indicator,
    precsim,
    precsim_star,
    star_leq,
)


def _as_callable(table, default):
    if table is None:
        return default
    if callable(table):
        return table
    return lambda u, v: table[u, v]


class QVIPInstance:
    """Finite QVIP data; A, K, T may be given as tables keyed by (u, v) or
    as callables. K and T default to the whole carrier.

    For suboperator construction the instance may instead be given in split
    form: ``base(u, v)`` functionals plus one distinguished functional
    ``Kv[v]`` per parameter, with A(u, v) = base(u, v) + Kv[v] elementwise.
    """

    def __init__(
        self,
        W: FiniteLattice,
        V: FinitePoset | None = None,
        A=None,
        K=None,
        T=None,
        *,
        base=None,
        Kv: Mapping | None = None,
        universe=None,
    ):
        self.W = W
        self.V = W.poset if V is None else getattr(V, "poset", V)
        missing = [u for u in W.elements if u not in self.V.index]
        if missing:
            raise CarrierMismatchError(f"W is not embedded in V: {missing[:3]!r}")
        carrier = frozenset(W.elements)
        self.carrier = carrier
        if A is None and (base is None or Kv is None):
            raise ValueError("give A, or both base and Kv")
        self.base = _as_callable(base, None)
        self.Kv = dict(Kv) if Kv is not None else None
        if A is None:
            b = self.base
            kv = self.Kv
            self._A = lambda u, v: tuple(e + kv[v] for e in b(u, v))
        else:
            self._A = _as_callable(A, None)
        self._K = _as_callable(K, lambda u, v: carrier)
        self._T = _as_callable(T, lambda u, v: carrier)
        self.universe = None if universe is None else tuple(universe)

    def A(self, u, v) -> tuple:
        return tuple(self._A(u, v))

    def K(self, u, v) -> frozenset:
        return frozenset(self._K(u, v))

    def T(self, u, v) -> frozenset:
        return frozenset(self._T(u, v))

    def validate(self) -> None:
        """Check table invariants over every (u, v)."""
        for u in self.W.elements:
            for v in self.V.elements:
                if not self.K(u, v) <= self.carrier:
                    raise CarrierMismatchError(f"K({u!r}, {v!r}) leaves W")
                if not self.T(u, v) <= self.carrier:
                    raise CarrierMismatchError(f"T({u!r}, {v!r}) leaves W")
                for a in self.A(u, v):
                    if set(a.values) != self.carrier:
                        raise CarrierMismatchError(f"functional in A({u!r}, {v!r}) not on W")
                    if not effective_domain(a):
                        raise InvalidFunctionalError("empty effective domain")

    def tabulate(self) -> "QVIPInstance":
        """Freeze lazily computed bifunctions into explicit tables."""
        pairs = list(itertools.product(self.W.elements, self.V.elements))
        return QVIPInstance(
            self.W,
            self.V,
            A={p: self.A(*p) for p in pairs},
            K={p: self.K(*p) for p in pairs},
            T={p: self.T(*p) for p in pairs},
            universe=self.universe,
        )


@dataclass
class SolutionSet:
    parameter: object
    solutions: frozenset
    certificates: dict = field(default_factory=dict)

    def rows(self, order=None):
        us = sorted(self.solutions, key=order.__getitem__) if order else list(self.solutions)
        for u in us:
            idx, a = self.certificates[u]
            yield self.parameter, u, a.name if a.name else idx


def _certificate(a: ExtendedFunctional, u, tests) -> bool:
    au = a(u)
    if au == INF:
        return False
    return all(a(w) >= au for w in tests)


def solve_parameterized(inst: QVIPInstance, v) -> SolutionSet:
    """All solutions at parameter v, each with its first witnessing functional."""
    inst.V.idx(v)
    sols = {}
    for u in inst.W.elements:
        if u not in inst.K(u, v):
            continue
        tests = inst.T(u, v)
        for k, a in enumerate(inst.A(u, v)):
            if _certificate(a, u, tests):
                sols[u] = (k, a)
                break
    return SolutionSet(v, frozenset(sols), sols)


def solution_operator(inst: QVIPInstance) -> Multifunction:
    """v -> S(v), tabulated over the parameter poset."""
    values = {v: solve_parameterized(inst, v).solutions for v in inst.V.elements}
    return Multifunction(inst.V, values, domain=inst.V.elements, codomain=inst.W.elements)


def qvip_solutions(inst: QVIPInstance) -> frozenset:
    """Solutions of the unparameterized problem, i.e. fixed points of S."""
    return fixed_points(solution_operator(inst))


def solutions_csv(sets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["v", "u", "certificate"])
    for s in sets:
        for row in s.rows():
            w.writerow(row)
    return buf.getvalue()


def _finite_partner(inst, inst2, u, v, v2) -> bool:
    """Some certificate a of u at v has a partner a << b in A'(u, v2) with b(u) finite."""
    W = inst.W
    tests = inst.T(u, v)
    partners = [b for b in inst2.A(u, v2) if b(u) != INF]
    return any(
        precsim(a, b, W)
        for a in inst.A(u, v)
        if _certificate(a, u, tests)
        for b in partners
    )


def dependence_hypothesis_violation(inst, inst2, v, v2):
    """(clause, witness) for the first failed hypothesis of the dependence
    lemma at (v, v2), or None.

    Besides the four stated relations this requires the partner b of some
    certificate to be finite at u; without it the conclusion can fail (take
    A = {0}, A' = {indicator of the top} on a 2-chain)."""
    if not inst.V.le(v, v2):
        return "v<=v2", (v, v2)
    W = inst.W
    for u in solve_parameterized(inst, v).solutions:
        if not precsim_star(inst.A(u, v), inst2.A(u, v2), W):
            return "A<<*A'", u
        if not _finite_partner(inst, inst2, u, v, v2):
            return "u-in-D(b)", u
        if not inst.K(u, v) <= inst2.K(u, v2):
            return "K-subset-K'", u
        t2 = inst2.T(u, v2)
        if not t2 <= inst.T(u, v):
            return "T'-subset-T", u
        if not star_leq(t2, {u}, W.poset):
            return "T'<=*u", u
    return None


def check_dependence(inst: QVIPInstance, inst2: QVIPInstance, v, v2) -> Verdict:
    """Under the lemma's hypotheses S(v) must be contained in S'(v2)."""
    bad = dependence_hypothesis_violation(inst, inst2, v, v2)
    if bad is not None:
        raise HypothesisViolation(*bad)
    S = solve_parameterized(inst, v).solutions
    S2 = solve_parameterized(inst2, v2).solutions
    stray = S - S2
    if stray:
        order = inst.W.index
        return Verdict(False, min(stray, key=order.__getitem__), "S(v) not contained in S'(v2)")
    return Verdict(True)


# -- functional universes and sub/super operators ----------------------------

def default_universe(W: FiniteLattice, values=(0, 1, INF), max_size: int = 50000) -> tuple:
    """Indicators of nonempty sublattices plus every functional W -> values
    with a finite value somewhere."""
    n = len(W)
    if len(values) ** n > max_size or 2 ** n > max_size:
        raise ValueError(f"default universe too large for |W| = {n}")
    out = {}
    elems = W.elements
    for bits in range(1, 1 << n):
        C = [elems[i] for i in range(n) if bits >> i & 1]
        if W.is_sublattice(C):
            f = indicator(C, W)
            out[f] = None
    for combo in itertools.product(values, repeat=n):
        if all(c == INF for c in combo):
            continue
        out[ExtendedFunctional(dict(zip(elems, combo)))] = None
    return tuple(out)


def lower_cone(k: ExtendedFunctional, universe, W) -> tuple:
    """Members of the universe below k: {g : g << k}."""
    return tuple(g for g in universe if precsim(g, k, W))


def upper_cone(k: ExtendedFunctional, universe, W) -> tuple:
    return tuple(g for g in universe if precsim(k, g, W))


def _expanded(inst: QVIPInstance, universe, cone, combine: Callable) -> QVIPInstance:
    if inst.Kv is None or inst.base is None:
        raise UndeclaredUniverseError("instance has no distinguished K_v family")
    universe = universe if universe is not None else inst.universe
    if universe is None:
        raise UndeclaredUniverseError("no functional universe declared")
    W = inst.W
    cones = {v: cone(inst.Kv[v], universe, W) for v in inst.V.elements}
    domains = {v: effective_domain(inst.Kv[v]) for v in inst.V.elements}

    def A(u, v):
        fam = list(inst.A(u, v))
        seen = set(fam)
        for e in inst.base(u, v):
            for k in cones[v]:
                if not effective_domain(e) & effective_domain(k):
                    continue  # e + k would be +inf everywhere
                s = e + k
                if s not in seen:
                    seen.add(s)
                    fam.append(s)
        return tuple(fam)

    def T(u, v):
        return frozenset(combine(u, w) for w in domains[v])

    return QVIPInstance(W, inst.V, A=A, K=inst._K, T=T, base=inst.base, Kv=inst.Kv, universe=universe)


def build_sub_operator(inst: QVIPInstance, universe=None) -> QVIPInstance:
    """Expand A by K_v's lower cone and shrink tests to u ^ D(K_v)."""
    return _expanded(inst, universe, lower_cone, inst.W.meet)


def build_super_operator(inst: QVIPInstance, universe=None) -> QVIPInstance:
    """Expand A by K_v's upper cone and shrink tests to u v D(K_v)."""
    return _expanded(inst, universe, upper_cone, inst.W.join)


def is_upper_submodular(As, W) -> bool:
    return precsim_star(As, As, W)


def is_family_increasing_upward(family: Mapping, V, W) -> bool:
    """v <= v' implies family[v] <<* family[v']."""
    V = getattr(V, "poset", V)
    return all(
        precsim_star(family[v], family[v2], W)
        for v in V.elements
        for v2 in V.elements
        if V.le(v, v2)
    )
