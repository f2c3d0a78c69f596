"""Smallest and greatest solutions of the grid QVIP by monotone outer iteration.

The greatest driver starts at the supersolution and repeatedly solves the
auxiliary problem with band [sub, v_k] at parameter v_k; each inner solution
lies below v_k, so the iterates descend. The smallest driver is the order
dual. Extremality is certified only at desk scale, by enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .auxiliary import AuxData, FEAS_TOL, best_selection, residual_qvip, solve_auxiliary
from .errors import InfeasibleError, InstanceTooLargeError, MonotonicityError
from .fixpoint import Verdict
from .grid import GridProblem, apply_E

ORDER_TOL = 1e-8


class OuterStep(NamedTuple):
    outer_iter: int
    max_update: float
    residual: float
    u_min: float
    u_max: float
    inner_iterations: int


@dataclass
class DriverRun:
    """Outcome of one driver; unpacks as (u, steps)."""

    u: np.ndarray
    steps: list
    eta: np.ndarray = None
    residual: float = math.nan
    converged: bool = False
    monotone_ok: bool = True

    def __iter__(self):
        yield self.u
        yield self.steps

    @property
    def outer_iterations(self) -> int:
        return len(self.steps)


def _drive(prob: GridProblem, direction: str, tol, max_outer, inner_tol, max_iter, strict):
    greatest = direction == "greatest"
    v = (prob.sup if greatest else prob.sub).copy()
    steps = []
    monotone = True
    converged = False
    for k in range(1, max_outer + 1):
        if greatest:
            aux = AuxData.from_pair(prob, v, prob.sub, v)
        else:
            aux = AuxData.from_pair(prob, v, v, prob.sup)
        res = solve_auxiliary(prob, v, aux, tol=inner_tol, max_iter=max_iter, mode=direction)
        u = res.u
        escape = (u - v).max() if greatest else (v - u).max()
        if escape > ORDER_TOL or not res.sandwich_ok:
            monotone = False
            if strict:
                node = int(np.argmax(u - v if greatest else v - u))
                raise MonotonicityError(
                    f"{direction} driver: outer step {k} left the order at node {node} by {escape:.3e}"
                )
        update = float(np.max(np.abs(u - v))) if u.size else 0.0
        steps.append(OuterStep(k, update, res.qvip_residual, float(u.min()), float(u.max()), res.iterations))
        # clip roundoff so the iterates stay ordered
        v = np.minimum(u, v) if greatest else np.maximum(u, v)
        if update < tol:
            converged = True
            break
    eta = best_selection(v, v, prob)
    try:
        fixed = residual_qvip(v, eta, v, prob)
    except InfeasibleError:
        fixed = math.inf
    return DriverRun(v, steps, eta, fixed, converged, monotone)


def greatest_solution(prob: GridProblem, tol=1e-10, max_outer=200, inner_tol=1e-10, max_iter=500, strict=True):
    """Descending iteration from the supersolution; returns a DriverRun."""
    return _drive(prob, "greatest", tol, max_outer, inner_tol, max_iter, strict)


def smallest_solution(prob: GridProblem, tol=1e-10, max_outer=200, inner_tol=1e-10, max_iter=500, strict=True):
    """Ascending iteration from the subsolution; returns a DriverRun."""
    return _drive(prob, "smallest", tol, max_outer, inner_tol, max_iter, strict)


@dataclass
class ExtremalResult:
    u_smallest: np.ndarray
    u_greatest: np.ndarray
    outer_iterations: tuple
    monotone_ok: bool
    both_fixed: bool
    trace: dict = field(default_factory=dict)
    residuals: tuple = ()
    converged: tuple = ()
    eta_smallest: np.ndarray = None
    eta_greatest: np.ndarray = None

    @property
    def ordered(self) -> bool:
        return bool(np.all(self.u_smallest <= self.u_greatest + ORDER_TOL))


def extremal_solutions(prob: GridProblem, tol=1e-10, max_outer=200, fixed_tol=1e-8, **kw) -> ExtremalResult:
    lo = smallest_solution(prob, tol, max_outer, **kw)
    hi = greatest_solution(prob, tol, max_outer, **kw)
    return ExtremalResult(
        u_smallest=lo.u,
        u_greatest=hi.u,
        outer_iterations=(lo.outer_iterations, hi.outer_iterations),
        monotone_ok=lo.monotone_ok and hi.monotone_ok,
        both_fixed=lo.residual <= fixed_tol and hi.residual <= fixed_tol,
        trace={"smallest": lo.steps, "greatest": hi.steps},
        residuals=(lo.residual, hi.residual),
        converged=(lo.converged, hi.converged),
        eta_smallest=lo.eta,
        eta_greatest=hi.eta,
    )


# -- desk-scale oracle -------------------------------------------------------

class BruteForce(NamedTuple):
    solutions: list
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def has_smallest(self) -> bool:
        return any(np.array_equal(s, self.minimum) for s in self.solutions)

    @property
    def has_greatest(self) -> bool:
        return any(np.array_equal(s, self.maximum) for s in self.solutions)


MAX_BRUTE_NODES = 4
MAX_BRUTE_LEVELS = 6


def brute_force_extremal(prob: GridProblem, levels=None, v=None, tol=1e-9) -> BruteForce:
    """Enumerate quantized vectors in [sub, super] and keep the QVIP solutions.

    With ``v`` given, solutions of the problem at that frozen parameter are
    enumerated instead. The selection tried at each candidate is the one
    minimizing the nodal violations, which is exhaustive over the interval.
    """
    if levels is None:
        levels = prob.meta.get("levels")
        if levels is None:
            raise ValueError("no quantization levels given")
    levels = sorted(float(x) for x in levels)
    if prob.n > MAX_BRUTE_NODES or len(levels) > MAX_BRUTE_LEVELS:
        raise InstanceTooLargeError(
            f"enumeration capped at {MAX_BRUTE_NODES} nodes and {MAX_BRUTE_LEVELS} levels, "
            f"got {prob.n} nodes and {len(levels)} levels"
        )
    sols = []
    for combo in itertools.product(levels, repeat=prob.n):
        u = np.array(combo)
        if np.any(u < prob.sub - 1e-12) or np.any(u > prob.sup + 1e-12):
            continue
        par = u if v is None else np.asarray(v, float)
        if np.any(u > prob.psi(par) + FEAS_TOL):
            continue
        eta = best_selection(u, par, prob)
        if residual_qvip(u, eta, par, prob) <= tol:
            sols.append(u)
    if not sols:
        return BruteForce([], None, None)
    stack = np.vstack(sols)
    return BruteForce(sols, stack.min(axis=0), stack.max(axis=0))


# -- sub/supersolution checks ------------------------------------------------

def verify_subsolution(prob: GridProblem, u, tol=1e-9) -> Verdict:
    """u <= psi(u) and E u + f_lo(u, u) <= 0 at every node.

    This is the discrete form of the relaxed problem whose test set is
    u ^ C(u): every admissible direction lowers some nodes, so the inequality
    must hold with the smallest selection everywhere.
    """
    u = np.asarray(u, dtype=float)
    excess = u - prob.psi(u)
    if np.any(excess > FEAS_TOL):
        i = int(np.argmax(excess))
        return Verdict(False, i, f"above the obstacle by {excess[i]:.3e}")
    lo, _ = prob.f_interval(u, u)
    viol = prob.h * (apply_E(u, prob) + lo)
    if np.any(viol > tol):
        i = int(np.argmax(viol))
        return Verdict(False, i, f"subsolution inequality fails by {viol[i]:.3e}")
    return Verdict(True)


def verify_supersolution(prob: GridProblem, u, tol=1e-9) -> Verdict:
    """E u + f_hi(u, u) >= 0 wherever u lies strictly below the obstacle."""
    u = np.asarray(u, dtype=float)
    _, hi = prob.f_interval(u, u)
    free = u < prob.psi(u) - FEAS_TOL
    viol = np.where(free, -prob.h * (apply_E(u, prob) + hi), 0.0)
    if np.any(viol > tol):
        i = int(np.argmax(viol))
        return Verdict(False, i, f"supersolution inequality fails by {viol[i]:.3e}")
    return Verdict(True)
