"""Finite posets and lattices, extended-real functionals, and the order
relations between sets and functionals used throughout the package.

Elements are opaque hashable ids. Every structure keeps an ``index`` map from
ids to positions so that the exhaustive checks below run on integer tables.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import (
    CarrierMismatchError,
    HypothesisViolation,
    InvalidFunctionalError,
    NotALatticeError,
)

INF = math.inf


class FinitePoset:
    """A finite partial order given by its full ``leq`` table."""

    __slots__ = ("elements", "index", "leq")

    def __init__(self, elements: Sequence[Hashable], leq: Sequence[Sequence[bool]]):
        self.elements = tuple(elements)
        self.index = {x: i for i, x in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise CarrierMismatchError("duplicate element ids")
        n = len(self.elements)
        self.leq = tuple(tuple(bool(leq[i][j]) for j in range(n)) for i in range(n))
        for i in range(n):
            if not self.leq[i][i]:
                raise ValueError(f"leq is not reflexive at {self.elements[i]!r}")
            for j in range(n):
                if i != j and self.leq[i][j] and self.leq[j][i]:
                    raise ValueError(
                        f"leq is not antisymmetric: {self.elements[i]!r}, {self.elements[j]!r}"
                    )
                if self.leq[i][j]:
                    for k in range(n):
                        if self.leq[j][k] and not self.leq[i][k]:
                            raise ValueError("leq is not transitive")

    @classmethod
    def from_relation(cls, elements, pairs):
        """Reflexive-transitive closure of ``pairs`` (e.g. cover pairs)."""
        elements = tuple(elements)
        index = {x: i for i, x in enumerate(elements)}
        n = len(elements)
        rel = [[i == j for j in range(n)] for i in range(n)]
        for a, b in pairs:
            if a not in index or b not in index:
                raise CarrierMismatchError(f"pair ({a!r}, {b!r}) outside carrier")
            rel[index[a]][index[b]] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    row_k = rel[k]
                    row_i = rel[i]
                    for j in range(n):
                        if row_k[j]:
                            row_i[j] = True
        return cls(elements, rel)

    @classmethod
    def from_leq(cls, elements, le):
        elements = tuple(elements)
        return cls(elements, [[le(x, y) for y in elements] for x in elements])

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return x in self.index

    def __repr__(self):
        return f"FinitePoset({len(self)} elements)"

    def idx(self, x) -> int:
        try:
            return self.index[x]
        except (KeyError, TypeError):
            raise CarrierMismatchError(f"{x!r} is not an element of the carrier") from None

    def indices(self, xs: Iterable) -> list[int]:
        return [self.idx(x) for x in xs]

    def le(self, x, y) -> bool:
        return self.leq[self.idx(x)][self.idx(y)]

    def lt(self, x, y) -> bool:
        return x != y and self.le(x, y)

    def comparable(self, x, y) -> bool:
        return self.le(x, y) or self.le(y, x)

    def dual(self) -> "FinitePoset":
        n = len(self)
        return FinitePoset(self.elements, [[self.leq[j][i] for j in range(n)] for i in range(n)])

    def covers(self) -> list[tuple]:
        """Cover pairs (x, y): x < y with nothing strictly between."""
        n = len(self)
        out = []
        for i in range(n):
            for j in range(n):
                if i == j or not self.leq[i][j]:
                    continue
                if not any(k != i and k != j and self.leq[i][k] and self.leq[k][j] for k in range(n)):
                    out.append((self.elements[i], self.elements[j]))
        return out

    def is_chain(self, xs) -> bool:
        xs = list(xs)
        return all(self.comparable(x, y) for x, y in itertools.combinations(xs, 2))

    def upset(self, x) -> frozenset:
        i = self.idx(x)
        return frozenset(self.elements[j] for j in range(len(self)) if self.leq[i][j])

    def downset(self, x) -> frozenset:
        i = self.idx(x)
        return frozenset(self.elements[j] for j in range(len(self)) if self.leq[j][i])

    def interval(self, lo, hi) -> frozenset:
        return self.upset(lo) & self.downset(hi)


class FiniteLattice:
    """A finite lattice with precomputed meet and join tables."""

    __slots__ = ("poset", "meet_table", "join_table", "distributive")

    def __init__(self, poset: FinitePoset):
        self.poset = poset
        n = len(poset)
        leq = poset.leq
        meet = [[0] * n for _ in range(n)]
        join = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                lower = [k for k in range(n) if leq[k][i] and leq[k][j]]
                glb = [k for k in lower if all(leq[m][k] for m in lower)]
                upper = [k for k in range(n) if leq[i][k] and leq[j][k]]
                lub = [k for k in upper if all(leq[k][m] for m in upper)]
                if not glb or not lub:
                    raise NotALatticeError(
                        f"{poset.elements[i]!r} and {poset.elements[j]!r} lack a "
                        + ("meet" if not glb else "join")
                    )
                meet[i][j] = meet[j][i] = glb[0]
                join[i][j] = join[j][i] = lub[0]
        self.meet_table = tuple(tuple(r) for r in meet)
        self.join_table = tuple(tuple(r) for r in join)
        self.distributive = all(
            meet[x][join[y][z]] == join[meet[x][y]][meet[x][z]]
            for x in range(n)
            for y in range(n)
            for z in range(n)
        )

    @classmethod
    def from_covers(cls, elements, covers):
        return cls(FinitePoset.from_relation(elements, covers))

    @classmethod
    def from_leq(cls, elements, le):
        return cls(FinitePoset.from_leq(elements, le))

    @property
    def elements(self):
        return self.poset.elements

    @property
    def index(self):
        return self.poset.index

    def __len__(self):
        return len(self.poset)

    def __contains__(self, x):
        return x in self.poset

    def __repr__(self):
        kind = "distributive " if self.distributive else ""
        return f"FiniteLattice({len(self)} elements, {kind}lattice)"

    def idx(self, x):
        return self.poset.idx(x)

    def le(self, x, y):
        return self.poset.le(x, y)

    def meet(self, x, y):
        return self.elements[self.meet_table[self.idx(x)][self.idx(y)]]

    def join(self, x, y):
        return self.elements[self.join_table[self.idx(x)][self.idx(y)]]

    def meet_all(self, xs):
        xs = list(xs)
        out = self.top
        for x in xs:
            out = self.meet(out, x)
        return out

    def join_all(self, xs):
        out = self.bottom
        for x in xs:
            out = self.join(out, x)
        return out

    @property
    def bottom(self):
        n = len(self)
        for i in range(n):
            if all(self.poset.leq[i][j] for j in range(n)):
                return self.elements[i]
        raise NotALatticeError("no bottom element")  # unreachable for n > 0

    @property
    def top(self):
        n = len(self)
        for i in range(n):
            if all(self.poset.leq[j][i] for j in range(n)):
                return self.elements[i]
        raise NotALatticeError("no top element")

    def dual(self) -> "FiniteLattice":
        return FiniteLattice(self.poset.dual())

    def is_sublattice(self, xs) -> bool:
        xs = set(xs)
        return all(self.meet(x, y) in xs and self.join(x, y) in xs for x in xs for y in xs)


# -- standard lattices -------------------------------------------------------

def chain(n: int) -> FiniteLattice:
    """The chain 0 < 1 < ... < n-1."""
    return FiniteLattice.from_leq(range(n), lambda x, y: x <= y)


def antichain(n: int) -> FinitePoset:
    return FinitePoset.from_relation(range(n), [])


def product(a: FiniteLattice, b: FiniteLattice) -> FiniteLattice:
    elems = [(x, y) for x in a.elements for y in b.elements]
    return FiniteLattice.from_leq(elems, lambda p, q: a.le(p[0], q[0]) and b.le(p[1], q[1]))


def grid_lattice(levels: Sequence[Sequence]) -> FiniteLattice:
    """Product of chains; elements are tuples ordered componentwise.

    ``levels[k]`` lists the admissible values of coordinate k (any totally
    ordered numbers, e.g. Fractions).
    """
    levels = [sorted(set(lv)) for lv in levels]
    elems = list(itertools.product(*levels))
    return FiniteLattice.from_leq(elems, lambda p, q: all(x <= y for x, y in zip(p, q)))


def boolean_lattice(k: int) -> FiniteLattice:
    return grid_lattice([(0, 1)] * k)


def diamond() -> FiniteLattice:
    """M3: bottom, three pairwise incomparable atoms, top."""
    return FiniteLattice.from_covers(
        ["0", "a", "b", "c", "1"],
        [("0", "a"), ("0", "b"), ("0", "c"), ("a", "1"), ("b", "1"), ("c", "1")],
    )


def pentagon() -> FiniteLattice:
    """N5: 0 < a < c < 1 and 0 < b < 1 with b incomparable to a, c."""
    return FiniteLattice.from_covers(
        ["0", "a", "b", "c", "1"],
        [("0", "a"), ("a", "c"), ("c", "1"), ("0", "b"), ("b", "1")],
    )


def square() -> FiniteLattice:
    """The 2x2 Boolean lattice 0 < x, y < 1 with x, y incomparable."""
    return FiniteLattice.from_covers(
        ["0", "x", "y", "1"], [("0", "x"), ("0", "y"), ("x", "1"), ("y", "1")]
    )


# -- set relations -----------------------------------------------------------

def _check_subset(xs, P) -> list[int]:
    return P.indices(xs)


def star_leq(A: Iterable, B: Iterable, P) -> bool:
    """``A <=* B``: every a in A lies below some b in B."""
    P = getattr(P, "poset", P)
    ia = _check_subset(A, P)
    ib = _check_subset(B, P)
    leq = P.leq
    return all(any(leq[a][b] for b in ib) for a in ia)


def strong_set_order(A: Iterable, B: Iterable, L: FiniteLattice) -> bool:
    """``A << B`` in the strong set order: u^w in A and u v w in B."""
    ia = set(_check_subset(A, L.poset))
    ib = set(_check_subset(B, L.poset))
    mt, jt = L.meet_table, L.join_table
    return all(mt[u][w] in ia and jt[u][w] in ib for u in ia for w in ib)


# -- extended-real functionals -----------------------------------------------

def _coerce_value(v):
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity", "oo"):
            return INF
        return Fraction(v)
    if isinstance(v, float):
        if math.isnan(v) or v == -INF:
            raise InvalidFunctionalError(f"value {v!r} not allowed")
        return v
    if isinstance(v, (int, Fraction)):
        return v
    raise InvalidFunctionalError(f"unsupported value {v!r}")


class ExtendedFunctional:
    """A map W -> R u {+inf} with at least one finite value.

    Values may be ints, Fractions or floats; ``math.inf`` encodes +inf.
    """

    __slots__ = ("values", "name")

    def __init__(self, values: Mapping, name: str | None = None):
        vals = {x: _coerce_value(v) for x, v in values.items()}
        if not any(v != INF for v in vals.values()):
            raise InvalidFunctionalError("effective domain is empty")
        self.values = vals
        self.name = name

    def __call__(self, x):
        try:
            return self.values[x]
        except KeyError:
            raise CarrierMismatchError(f"functional undefined at {x!r}") from None

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"ExtendedFunctional{label}({self.values!r})"

    def __eq__(self, other):
        return isinstance(other, ExtendedFunctional) and self.values == other.values

    def __hash__(self):
        return hash(frozenset(self.values.items()))

    def __add__(self, other: "ExtendedFunctional") -> "ExtendedFunctional":
        if set(self.values) != set(other.values):
            raise CarrierMismatchError("functionals live on different carriers")
        vals = {x: self.values[x] + other.values[x] for x in self.values}
        return ExtendedFunctional(vals)

    def shifted(self, c) -> "ExtendedFunctional":
        return ExtendedFunctional({x: v + c for x, v in self.values.items()}, self.name)

    def table(self, L) -> list:
        """Values in the element order of ``L``."""
        try:
            return [self.values[x] for x in L.elements]
        except KeyError as exc:
            raise CarrierMismatchError(f"functional undefined at {exc.args[0]!r}") from None


def indicator(C: Iterable, carrier: Iterable, name: str | None = None) -> ExtendedFunctional:
    """0 on C, +inf elsewhere."""
    C = set(C)
    carrier = list(getattr(carrier, "elements", carrier))
    missing = C - set(carrier)
    if missing:
        raise CarrierMismatchError(f"{sorted(map(repr, missing))} not in carrier")
    return ExtendedFunctional({x: (0 if x in C else INF) for x in carrier}, name)


def constant(c, carrier) -> ExtendedFunctional:
    return ExtendedFunctional({x: c for x in getattr(carrier, "elements", carrier)})


def effective_domain(a: ExtendedFunctional) -> frozenset:
    return frozenset(x for x, v in a.values.items() if v != INF)


def _tables(a, b, L):
    if len(a.values) != len(L) or len(b.values) != len(L):
        raise CarrierMismatchError("functional carrier differs from lattice carrier")
    return a.table(L), b.table(L)


def precsim_violation(a: ExtendedFunctional, b: ExtendedFunctional, L: FiniteLattice):
    """First pair (u, w) with a(u^w) + b(uvw) > a(u) + b(w), or None."""
    ta, tb = _tables(a, b, L)
    mt, jt = L.meet_table, L.join_table
    n = len(L)
    for u in range(n):
        au = ta[u]
        if au == INF:
            continue
        for w in range(n):
            rhs = au + tb[w]
            if rhs == INF:
                continue
            if ta[mt[u][w]] + tb[jt[u][w]] > rhs:
                return L.elements[u], L.elements[w]
    return None


def precsim(a: ExtendedFunctional, b: ExtendedFunctional, L: FiniteLattice) -> bool:
    """``a << b``: a(u^w) + b(uvw) <= a(u) + b(w) for all u, w."""
    return precsim_violation(a, b, L) is None


def precsim_wrt(a, b, u, w, L) -> bool:
    """The same inequality at one fixed pair (u, w)."""
    rhs = a(u) + b(w)
    return rhs == INF or a(L.meet(u, w)) + b(L.join(u, w)) <= rhs


def is_submodular(a: ExtendedFunctional, L: FiniteLattice) -> bool:
    return precsim(a, a, L)


def precsim_star(As, Bs, L) -> bool:
    """``A <<* B``: each a in A has some b in B with a << b."""
    Bs = list(Bs)
    return all(any(precsim(a, b, L) for b in Bs) for a in As)


def lattice_identity_holds(u, v, w, L: FiniteLattice) -> bool:
    """The two lattice identities behind modified transitivity.

    [u v (w ^ (u v v))] ^ [w ^ (u v (w ^ v))] = w ^ (u v v), and its dual
    (swap meet and join).
    """
    m, j = L.meet, L.join
    lhs = m(j(u, m(w, j(u, v))), m(w, j(u, m(w, v))))
    dual_lhs = j(m(u, j(w, m(u, v))), j(w, m(u, j(w, v))))
    return lhs == m(w, j(u, v)) and dual_lhs == j(w, m(u, v))


def lattice_identity_counterexample(L: FiniteLattice):
    for u, v, w in itertools.product(L.elements, repeat=3):
        if not lattice_identity_holds(u, v, w, L):
            return u, v, w
    return None


def check_modified_transitivity(a, b, c, L: FiniteLattice) -> bool:
    """Check a << c given a << b, b << b, b << c on a distributive lattice.

    Raises HypothesisViolation naming the first failed hypothesis. Also
    confirms D(a) << D(b) << D(c) and D(a) << D(c) for the effective domains.
    The return value is ``precsim(a, c)``; under the hypotheses it must be True.
    """
    for clause, (x, y) in (("a<<b", (a, b)), ("b<<b", (b, b)), ("b<<c", (b, c))):
        bad = precsim_violation(x, y, L)
        if bad is not None:
            raise HypothesisViolation(clause, bad)
    if not L.distributive:
        raise HypothesisViolation("distributive", None, "lattice is not distributive")
    da, db, dc = effective_domain(a), effective_domain(b), effective_domain(c)
    if not (strong_set_order(da, db, L) and strong_set_order(db, dc, L)):
        return False
    if not strong_set_order(da, dc, L):
        return False
    return precsim(a, c, L)


# -- linear functionals on R^n ------------------------------------------------

def positive_part(u: Sequence) -> tuple:
    """u+ = u v 0, componentwise."""
    return tuple(x if x > 0 else 0 for x in u)


def pair(a: Sequence, u: Sequence):
    return sum(Fraction(x) * y for x, y in zip(a, u))


def precsim_linear(a: Sequence, b: Sequence, n: int | None = None) -> bool:
    """For linear functionals on R^n (coefficient vectors): a << b iff a - b >= 0."""
    if len(a) != len(b) or (n is not None and len(a) != n):
        raise CarrierMismatchError("dimension mismatch")
    return all(Fraction(x) - Fraction(y) >= 0 for x, y in zip(a, b))


def linear_functional(coeffs: Sequence, L: FiniteLattice, name=None) -> ExtendedFunctional:
    """Restriction of u -> <coeffs, u> to a grid lattice of tuples."""
    coeffs = [Fraction(c) for c in coeffs]
    return ExtendedFunctional({u: pair(coeffs, u) for u in L.elements}, name)


def is_t_monotone(family: Mapping, L: FiniteLattice) -> bool:
    """Every a in A(u), b in A(w) satisfy <a - b, (u - w)+> >= 0.

    ``family`` maps grid elements (tuples) to lists of coefficient vectors.
    """
    for u, w in itertools.product(L.elements, repeat=2):
        diff = positive_part(tuple(Fraction(x) - Fraction(y) for x, y in zip(u, w)))
        for a in family[u]:
            for b in family[w]:
                if pair([Fraction(x) - Fraction(y) for x, y in zip(a, b)], diff) < 0:
                    return False
    return True
