"""Subpoints, fixed points and extremal fixed points of finite multifunctions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .errors import CarrierMismatchError, HypothesisViolation
from .order import FiniteLattice, FinitePoset, star_leq


@dataclass(frozen=True)
class Verdict:
    """Outcome of a theorem check; falsy on violation, with a witness."""

    ok: bool
    witness: object = None
    detail: str = ""

    def __bool__(self):
        return self.ok


class Multifunction:
    """S: D -> P(W) for a domain D and codomain W inside one finite poset V.

    ``values`` maps each domain element to an iterable of codomain elements.
    Elements of the domain missing from ``values`` get the empty set.
    """

    __slots__ = ("poset", "domain", "codomain", "values")

    def __init__(self, poset, values: Mapping, domain=None, codomain=None):
        poset = getattr(poset, "poset", poset)
        self.poset: FinitePoset = poset
        self.domain = frozenset(poset.elements if domain is None else domain)
        self.codomain = frozenset(poset.elements if codomain is None else codomain)
        for x in self.domain | self.codomain:
            poset.idx(x)
        vals = {}
        for v, image in values.items():
            if v not in self.domain:
                raise CarrierMismatchError(f"{v!r} is not in the domain")
            image = frozenset(image)
            stray = image - self.codomain
            if stray:
                raise CarrierMismatchError(f"S({v!r}) leaves the codomain: {sorted(map(repr, stray))}")
            vals[v] = image
        self.values = {v: vals.get(v, frozenset()) for v in self.domain}

    def __call__(self, v) -> frozenset:
        try:
            return self.values[v]
        except KeyError:
            raise CarrierMismatchError(f"{v!r} is not in the domain") from None

    def __repr__(self):
        return f"Multifunction({len(self.domain)} -> {len(self.codomain)})"

    def items(self):
        order = self.poset.index
        return sorted(self.values.items(), key=lambda kv: order[kv[0]])

    def dual(self) -> "Multifunction":
        """The same map over the order-dual poset."""
        return Multifunction(self.poset.dual(), self.values, self.domain, self.codomain)

    @classmethod
    def from_function(cls, poset, fn, domain=None, codomain=None):
        poset_ = getattr(poset, "poset", poset)
        dom = poset_.elements if domain is None else domain
        return cls(poset, {v: fn(v) for v in dom}, dom, codomain)

    @classmethod
    def single_valued(cls, poset, fn, domain=None, codomain=None):
        return cls.from_function(poset, lambda v: {fn(v)}, domain, codomain)


def _ordered(P, xs):
    return sorted(xs, key=P.index.__getitem__)


def subpoints(S: Multifunction) -> frozenset:
    """{v in W : v <=* S(v)}; only domain elements that also lie in W count."""
    P = S.poset
    return frozenset(
        v for v in S.domain & S.codomain if any(P.le(v, b) for b in S(v))
    )


def fixed_points(S: Multifunction) -> frozenset:
    return frozenset(v for v in S.domain & S.codomain if v in S(v))


def maximal_elements(X: Iterable, P) -> frozenset:
    P = getattr(P, "poset", P)
    X = list(X)
    P.indices(X)
    return frozenset(x for x in X if not any(y != x and P.le(x, y) for y in X))


def minimal_elements(X: Iterable, P) -> frozenset:
    P = getattr(P, "poset", P)
    return maximal_elements(X, P.dual())


def greatest_element(X: Iterable, P):
    """The element of X above all of X, or None."""
    P = getattr(P, "poset", P)
    X = list(X)
    P.indices(X)
    for x in X:
        if all(P.le(y, x) for y in X):
            return x
    return None


def smallest_element(X: Iterable, P):
    P = getattr(P, "poset", P)
    return greatest_element(X, P.dual())


def is_increasing_upward(S: Multifunction) -> bool:
    """v <= w implies S(v) <=* S(w)."""
    P = S.poset
    dom = list(S.domain)
    return all(
        star_leq(S(v), S(w), P) for v in dom for w in dom if P.le(v, w)
    )


def is_permanent_upward(S: Multifunction) -> bool:
    """v <= w implies S(v) is a subset of S(w)."""
    P = S.poset
    dom = list(S.domain)
    return all(S(v) <= S(w) for v in dom for w in dom if P.le(v, w))


def is_directed_upward(X: Iterable, P) -> bool:
    """Every pair in X has a common upper bound inside X."""
    P = getattr(P, "poset", P)
    X = list(X)
    for i, a in enumerate(X):
        for b in X[i + 1:]:
            if not any(P.le(a, c) and P.le(b, c) for c in X):
                return False
    return True


def is_inductive_chainwise(X: Iterable, P) -> bool:
    """Every chain of X has an upper bound in X (exhaustive, small X only)."""
    P = getattr(P, "poset", P)
    X = list(X)
    import itertools

    for r in range(len(X) + 1):
        for C in itertools.combinations(X, r):
            if not P.is_chain(C):
                continue
            if not any(all(P.le(c, d) for c in C) for d in X):
                return False
    return True


def check_prop_meta(S: Multifunction) -> Verdict:
    """Every maximal subpoint of an increasing-upward S is a maximal fixed point."""
    if not is_increasing_upward(S):
        raise HypothesisViolation("increasing-upward")
    P = S.poset
    max_sub = maximal_elements(subpoints(S), P)
    max_fix = maximal_elements(fixed_points(S), P)
    stray = max_sub - max_fix
    if stray:
        return Verdict(False, _ordered(P, stray)[0], "maximal subpoint that is not a maximal fixed point")
    return Verdict(True)


@dataclass
class FixpointReport:
    subpoints: frozenset
    fixed_points: frozenset
    maximal_fixed_points: frozenset
    greatest_fixed_point: Hashable | None
    certificate: list = field(default_factory=list)
    elements: tuple = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["element", "is_subpoint", "is_fixed_point"])
        for x in self.elements:
            w.writerow([x, int(x in self.subpoints), int(x in self.fixed_points)])
        return buf.getvalue()


def fixpoint_report(S: Multifunction) -> FixpointReport:
    P = S.poset
    fix = fixed_points(S)
    return FixpointReport(
        subpoints=subpoints(S),
        fixed_points=fix,
        maximal_fixed_points=maximal_elements(fix, P),
        greatest_fixed_point=greatest_element(fix, P),
        elements=tuple(x for x in P.elements if x in S.domain),
    )


# -- the greatest-fixed-point theorem on finite carriers ----------------------

def check_greatest_hypotheses(S: Multifunction, ulS: Multifunction, D: FiniteLattice, ul_u) -> None:
    """Raise HypothesisViolation on the first failed hypothesis."""
    P = D.poset
    carrier = frozenset(D.elements)
    for name, M in (("S", S), ("ulS", ulS)):
        if set(M.poset.elements) != carrier or M.domain != carrier:
            raise HypothesisViolation(f"{name}-domain", None, f"{name} must be defined on all of D")
        if any(M.poset.le(x, y) != P.le(x, y) for x in carrier for y in carrier):
            raise HypothesisViolation(f"{name}-order", None, f"{name} uses a different order than D")
    if ul_u not in carrier:
        raise HypothesisViolation("ul_u-in-D", ul_u)
    order = P.elements
    for v in order:
        if not S(v):
            raise HypothesisViolation("S-nonempty", v)
    for v in order:
        for w in order:
            if P.le(v, w) and not ulS(v) <= ulS(w):
                raise HypothesisViolation("ulS-permanent-upward", (v, w))
    for v in order:
        if not is_directed_upward(ulS(v), P):
            raise HypothesisViolation("ulS-directed-upward", v)
    for v in order:
        if not S(v) <= ulS(v):
            raise HypothesisViolation("S-subset-ulS", v)
        if not star_leq(ulS(v), S(v), P):
            raise HypothesisViolation("ulS-below-S", v)
    if not star_leq({ul_u}, ulS(ul_u), P):
        raise HypothesisViolation("ul_u-subpoint", ul_u)


def _maximal_witness(P, candidates):
    """A maximal element among candidates, ties broken by element order."""
    cands = _ordered(P, candidates)
    for c in cands:
        if not any(d != c and P.le(c, d) for d in cands):
            return c
    return None  # pragma: no cover - candidates nonempty and finite


def _ascend(S, P, x, certificate):
    """From a subpoint x of the suboperator, climb through S to a fixed point."""
    while True:
        above = [b for b in S(x) if P.le(x, b)]
        if not above:
            raise HypothesisViolation("ulS-below-S", x, "no element of S(x) dominates x")
        y = _maximal_witness(P, above)
        certificate.append(("step", x, y))
        if y == x:
            return x
        x = y


def greatest_fixed_point_ascent(S, ulS, D: FiniteLattice, ul_u):
    """Constructive ascent; returns (greatest fixed point, certificate).

    Ascend from ul_u to a fixed point x. If some subpoint z of ulS is not
    below x, restart from x v z, which is again a subpoint of ulS (ulS is
    permanent upward with directed values). When no such z remains, every
    fixed point of S lies below x.
    """
    check_greatest_hypotheses(S, ulS, D, ul_u)
    P = D.poset
    sub_ul = _ordered(P, subpoints(ulS))
    certificate = [("start", ul_u, None)]
    x = _ascend(S, P, ul_u, certificate)
    while True:
        escape = next((z for z in sub_ul if not P.le(z, x)), None)
        if escape is None:
            certificate.append(("greatest", x, None))
            return x, certificate
        y = D.join(x, escape)
        certificate.append(("join", escape, y))
        x = _ascend(S, P, y, certificate)


def greatest_fixed_point_theorem(S, ulS, D: FiniteLattice, ul_u):
    return greatest_fixed_point_ascent(S, ulS, D, ul_u)[0]


def smallest_fixed_point_theorem(S, olS, D: FiniteLattice, ol_u):
    """Order dual: smallest fixed point of S below ol_u."""
    return greatest_fixed_point_theorem(S.dual(), olS.dual(), D.dual(), ol_u)


def brute_force_greatest_fixed_point(S):
    return greatest_element(fixed_points(S), S.poset)


def brute_force_smallest_fixed_point(S):
    return smallest_element(fixed_points(S), S.poset)
