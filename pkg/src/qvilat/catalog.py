"""Enumeration of all small lattices up to isomorphism, plus small posets.

Lattices are generated on the carrier ``0..n-1`` with 0 the bottom and n-1 the
top; the order on the middle elements ranges over all naturally labelled
partial orders, and duplicates are removed by a canonical form.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .errors import NotALatticeError
from .order import FiniteLattice, FinitePoset, antichain, chain, diamond, pentagon

# number of lattices with n elements, n = 1..7 (OEIS A006966)
LATTICE_COUNTS = {1: 1, 2: 1, 3: 1, 4: 2, 5: 5, 6: 15, 7: 53}


def _closure(n, pairs):
    rel = [[i == j for j in range(n)] for i in range(n)]
    for a, b in pairs:
        rel[a][b] = True
    for k in range(n):
        for i in range(n):
            if rel[i][k]:
                for j in range(n):
                    if rel[k][j]:
                        rel[i][j] = True
    return rel


def _canonical(rel, n):
    middle = range(1, n - 1)
    best = None
    for perm in itertools.permutations(middle):
        p = (0,) + perm + (n - 1,)
        key = tuple(rel[p[i]][p[j]] for i in range(n) for j in range(n))
        if best is None or key < best:
            best = key
    return best


@lru_cache(maxsize=None)
def _lattices_of_size(n: int) -> tuple:
    if n == 1:
        return (chain(1),)
    found = {}
    candidates = [(i, j) for i in range(1, n - 1) for j in range(i + 1, n - 1)]
    for bits in range(1 << len(candidates)):
        chosen = {candidates[k] for k in range(len(candidates)) if bits >> k & 1}
        rel = _closure(n, chosen)
        # only transitively closed choices, so each order is seen exactly once
        if {(i, j) for i, j in candidates if rel[i][j]} != chosen:
            continue
        for i in range(n):
            rel[0][i] = True
            rel[i][n - 1] = True
        key = _canonical(rel, n)
        if key in found:
            continue
        try:
            found[key] = FiniteLattice(FinitePoset(range(n), rel))
        except NotALatticeError:
            found[key] = None
    return tuple(L for L in found.values() if L is not None)


def all_lattices(max_size: int = 6, min_size: int = 1) -> list[FiniteLattice]:
    """Every lattice with min_size..max_size elements, one per isomorphism class."""
    out = []
    for n in range(min_size, max_size + 1):
        out.extend(_lattices_of_size(n))
    return out


def distributive_lattices(max_size: int = 6) -> list[FiniteLattice]:
    return [L for L in all_lattices(max_size) if L.distributive]


def named_lattices() -> dict[str, FiniteLattice]:
    from .order import boolean_lattice, grid_lattice, square

    return {
        "chain2": chain(2),
        "chain3": chain(3),
        "chain4": chain(4),
        "square": square(),
        "diamond": diamond(),
        "pentagon": pentagon(),
        "cube": boolean_lattice(3),
        "grid2x3": grid_lattice([(0, 1), (0, 1, 2)]),
    }


def n_poset() -> FinitePoset:
    """The N-shaped poset a < c, b < c, b < d."""
    return FinitePoset.from_relation("abcd", [("a", "c"), ("b", "c"), ("b", "d")])


def small_posets() -> list[FinitePoset]:
    """Lattices up to 5 elements plus a few non-lattice posets."""
    out = [L.poset for L in all_lattices(5)]
    out += [antichain(2), antichain(3), n_poset()]
    out.append(FinitePoset.from_relation("abcde", [("a", "c"), ("b", "c"), ("c", "d"), ("c", "e")]))
    return out
