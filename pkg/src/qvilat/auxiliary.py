"""Truncation machinery and solver for the auxiliary inclusion

    0 in E(u) + D(u) + G(u) - H(u) + dI_C(v)(u)

on the 1D grid. D is the cut-off penalty outside the band [ulv, olv], G the
band-truncated lower-order term and H the compensator built from two
sub- and two supersolution pairs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegenerateBracketError, InfeasibleError, InvalidAuxDataError
from .grid import GridProblem, apply_E, grad_norm_p

FEAS_TOL = 1e-9
_STEP_LENGTHS = (1.0, 0.5, 0.25)
_SWEEPS = 10
_STALL = 8
_FIRST_ITER = 60
_STAGE_ITER = 40
_MIN_BLEND = 1e-4
_JAC_FLOOR = 1e-6
_POLISH_TOL = 1e-15
_POLISH_ITER = 10
_FALLBACK_FLOORS = (1e-3, 1e-2)
_NOVEL_GROWTH = 10.0
_BLEND_BUDGET = 4


# -- scalar building blocks --------------------------------------------------

def cutoff_d(s, ulv, olv, p):
    """Penalty -(ulv-s)^(p-1) below the band, (s-olv)^(p-1) above, 0 inside."""
    s = np.asarray(s, dtype=float)
    below = np.maximum(ulv - s, 0.0)
    above = np.maximum(s - olv, 0.0)
    out = above ** (p - 1.0) - below ** (p - 1.0)
    return float(out) if out.ndim == 0 else out


def cutoff_d_slope(s, ulv, olv, p):
    s = np.asarray(s, dtype=float)
    gap = np.maximum(np.maximum(ulv - s, s - olv), 0.0)
    with np.errstate(divide="ignore"):
        out = np.where(gap > 0, (p - 1.0) * np.maximum(gap, 1e-150) ** (p - 2.0), 0.0)
    return out


def cutoff_growth_constant(p: float) -> float:
    """d0 with |d(s)| <= d0 (|ulv|^(p-1) + |s|^(p-1) + |olv|^(p-1))."""
    return max(1.0, 2.0 ** (p - 2.0))


def coercivity_constants(p: float) -> tuple:
    """(d1, d2) with -(t-s)^(p-1) s >= d1|s|^p - d2|t|^(p-1)|s| for s <= t."""
    if not (isinstance(p, (int, float)) and 1 < p < math.inf):
        raise ValueError(f"p must lie in (1, inf), got {p!r}")
    if p <= 2:
        return 1.0, 2.0 ** (2.0 - p)
    return 2.0 ** (2.0 - p), 1.0


def coercive_bound_constants(p: float) -> tuple:
    """(c1, c2) with d(s) s >= c1 |s|^p - c2 (|ulv|^p + |olv|^p) pointwise.

    Splits d2 |t|^(p-1) |s| <= eps |s|^p + C_eps d2^p' |t|^p by Young's
    inequality with eps = d1 / 2.
    """
    d1, d2 = coercivity_constants(p)
    q = p / (p - 1.0)
    eps = 0.5 * d1
    c_eps = (p * eps) ** (-q / p) / q
    return d1 - eps, c_eps * d2**q


def piecewise_l(x1, y1, x2, y2, s):
    """Continuous piecewise-linear bracket: y1 up to x1, y2 from x2 on."""
    if not x1 < x2:
        raise DegenerateBracketError(f"bracket needs x1 < x2, got {x1!r} >= {x2!r}")
    s = np.asarray(s, dtype=float)
    t = np.clip((s - x1) / (x2 - x1), 0.0, 1.0)
    out = y1 + (y2 - y1) * t
    return float(out) if out.ndim == 0 else out


def _bracket(x1, y1, x2, y2, s):
    """Vectorized piecewise_l that collapses degenerate brackets to 0.

    Returns (value, slope)."""
    x1, y1, x2, y2 = np.broadcast_arrays(*(np.asarray(a, float) for a in (x1, y1, x2, y2)))
    ok = x1 < x2
    width = np.where(ok, x2 - x1, 1.0)
    t = (s - x1) / width
    inside = ok & (t > 0) & (t < 1)
    val = np.where(ok, y1 + (y2 - y1) * np.clip(t, 0.0, 1.0), 0.0)
    slope = np.where(inside, (y2 - y1) / width, 0.0)
    return val, slope


# -- auxiliary data ----------------------------------------------------------

def _combine(x1, e1, x2, e2, upper: bool):
    """Per-node case combination; ties take the min (lower) or max (upper)."""
    if upper:
        pick1 = x1 < x2
        pick2 = x2 < x1
        tie = np.maximum(e1, e2)
    else:
        pick1 = x1 > x2
        pick2 = x2 > x1
        tie = np.minimum(e1, e2)
    return np.where(pick1, e1, np.where(pick2, e2, tie))


@dataclass(frozen=True, eq=False)
class AuxData:
    ulv1: np.ndarray
    ulv2: np.ndarray
    olv1: np.ndarray
    olv2: np.ndarray
    uleta1: np.ndarray
    uleta2: np.ndarray
    oleta1: np.ndarray
    oleta2: np.ndarray
    ulv: np.ndarray = field(init=False)
    olv: np.ndarray = field(init=False)
    uleta: np.ndarray = field(init=False)
    oleta: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("ulv1", "ulv2", "olv1", "olv2", "uleta1", "uleta2", "oleta1", "oleta2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        shapes = {getattr(self, k).shape for k in ("ulv1", "ulv2", "olv1", "olv2", "uleta1", "uleta2", "oleta1", "oleta2")}
        if len(shapes) != 1:
            raise InvalidAuxDataError(f"vectors of mixed shapes {sorted(shapes)}")
        object.__setattr__(self, "ulv", np.maximum(self.ulv1, self.ulv2))
        object.__setattr__(self, "olv", np.minimum(self.olv1, self.olv2))
        object.__setattr__(self, "uleta", _combine(self.ulv1, self.uleta1, self.ulv2, self.uleta2, False))
        object.__setattr__(self, "oleta", _combine(self.olv1, self.oleta1, self.olv2, self.oleta2, True))

    @classmethod
    def build(cls, prob: GridProblem, v, subs, supers, sub_etas=None, super_etas=None, check=True):
        """Aux data from two subsolutions and two supersolutions at parameter v.

        Default selections are the extreme ones: f_lo at each subsolution and
        f_hi at each supersolution.
        """
        v = np.asarray(v, dtype=float)
        ul1, ul2 = (np.asarray(a, float) for a in subs)
        ol1, ol2 = (np.asarray(a, float) for a in supers)
        if sub_etas is None:
            sub_etas = (prob.f_interval(ul1, v)[0], prob.f_interval(ul2, v)[0])
        if super_etas is None:
            super_etas = (prob.f_interval(ol1, v)[1], prob.f_interval(ol2, v)[1])
        aux = cls(ul1, ul2, ol1, ol2, *sub_etas, *super_etas)
        if check:
            aux.validate(prob, v)
        return aux

    @classmethod
    def from_pair(cls, prob, v, sub, sup, check=True):
        return cls.build(prob, v, (sub, sub), (sup, sup), check=check)

    def validate(self, prob: GridProblem, v, tol: float = 1e-12) -> None:
        if self.ulv1.shape != (prob.n,):
            raise InvalidAuxDataError(f"expected vectors of length {prob.n}")
        if np.any(self.ulv > self.olv + tol):
            i = int(np.argmax(self.ulv - self.olv))
            raise InvalidAuxDataError(f"ulv > olv at node {i}")
        if np.any(prob.sub > self.ulv + tol) or np.any(self.olv > prob.sup + tol):
            raise InvalidAuxDataError("band [ulv, olv] is not inside [sub, super]")
        for x, e, name in ((self.ulv1, self.uleta1, "uleta1"), (self.ulv2, self.uleta2, "uleta2"),
                           (self.olv1, self.oleta1, "oleta1"), (self.olv2, self.oleta2, "oleta2")):
            lo, hi = prob.f_interval(x, v)
            bad = (e < lo - tol * (1 + abs(lo))) | (e > hi + tol * (1 + abs(hi)))
            if np.any(bad):
                raise InvalidAuxDataError(f"{name} is not a selection at node {int(np.argmax(bad))}")


# -- truncated term and compensator ------------------------------------------

def _g_interval(prob, aux, v, s, rows):
    """Vectorized truncate_g: s has shape (m,) or (m, k), rows has shape (m,)."""
    s = np.asarray(s, dtype=float)
    ex = (slice(None),) + (None,) * (s.ndim - 1)
    ulv = aux.ulv[rows][ex]
    olv = aux.olv[rows][ex]
    lo, hi = prob.f_interval(np.clip(s, ulv, olv), v[rows], idx=rows)
    below = s < ulv
    above = s > olv
    ul = np.broadcast_to(aux.uleta[rows][ex], s.shape)
    ol = np.broadcast_to(aux.oleta[rows][ex], s.shape)
    lo = np.where(below, ul, np.where(above, ol, lo))
    hi = np.where(below, ul, np.where(above, ol, hi))
    return lo, hi


def truncate_g(i: int, s: float, aux: AuxData, prob: GridProblem, v) -> tuple:
    v = np.asarray(v, dtype=float)
    lo, hi = _g_interval(prob, aux, v, np.array([float(s)]), np.array([i]))
    return float(lo[0]), float(hi[0])


def _h_values(s, aux, rows):
    """Compensator h and its s-slope for nodes ``rows``."""
    s = np.asarray(s, dtype=float)
    ex = (slice(None),) + (None,) * (s.ndim - 1)
    ulv, olv = aux.ulv[rows][ex], aux.olv[rows][ex]
    val = np.zeros(s.shape)
    slope = np.zeros(s.shape)
    for x_i, e_i in ((aux.ulv1, aux.uleta1), (aux.ulv2, aux.uleta2)):
        th, dth = _bracket(x_i[rows][ex], (aux.uleta - e_i)[rows][ex], ulv, 0.0, s)
        val += np.abs(th)
        slope += np.sign(th) * dth
    for x_i, e_i in ((aux.olv1, aux.oleta1), (aux.olv2, aux.oleta2)):
        th, dth = _bracket(olv, 0.0, x_i[rows][ex], (e_i - aux.oleta)[rows][ex], s)
        val -= np.abs(th)
        slope -= np.sign(th) * dth
    return val, slope


def _active_brackets(aux):
    """(x1, y1, x2, y2, sign) for compensator brackets that are not identically 0."""
    out = []
    for x_i, e_i in ((aux.ulv1, aux.uleta1), (aux.ulv2, aux.uleta2)):
        y1 = aux.uleta - e_i
        if np.any((x_i < aux.ulv) & (y1 != 0)):
            out.append((x_i, y1, aux.ulv, np.zeros_like(y1), 1.0))
    for x_i, e_i in ((aux.olv1, aux.oleta1), (aux.olv2, aux.oleta2)):
        y2 = e_i - aux.oleta
        if np.any((aux.olv < x_i) & (y2 != 0)):
            out.append((aux.olv, np.zeros_like(y2), x_i, y2, -1.0))
    return out


def _h_from_brackets(brackets, s, rows):
    ex = (slice(None),) + (None,) * (np.ndim(s) - 1)
    val = np.zeros(np.shape(s))
    slope = np.zeros(np.shape(s))
    for x1, y1, x2, y2, sign in brackets:
        th, dth = _bracket(x1[rows][ex], y1[rows][ex], x2[rows][ex], y2[rows][ex], s)
        val += sign * np.abs(th)
        slope += sign * np.sign(th) * dth
    return val, slope


def compensator_h(i: int, s: float, aux: AuxData) -> float:
    val, _ = _h_values(np.array([float(s)]), aux, np.array([i]))
    return float(val[0])


def compensator_violations(aux: AuxData, s, rows, tol=0.0):
    """Masks of sample points violating either compensator inequality.

    Returns (lower, upper) boolean arrays for
    uleta - uleta_i - h <= 0 on {s < ulv_i} and
    oleta_i - oleta + h <= 0 on {s > olv_i}.
    """
    s = np.asarray(s, dtype=float)
    rows = np.asarray(rows)
    h, _ = _h_values(s, aux, rows)
    lower = np.zeros(s.shape, bool)
    upper = np.zeros(s.shape, bool)
    for x_i, e_i in ((aux.ulv1, aux.uleta1), (aux.ulv2, aux.uleta2)):
        lower |= (s < x_i[rows]) & (aux.uleta[rows] - e_i[rows] - h > tol)
    for x_i, e_i in ((aux.olv1, aux.oleta1), (aux.olv2, aux.oleta2)):
        upper |= (s > x_i[rows]) & (e_i[rows] - aux.oleta[rows] + h > tol)
    return lower, upper


# -- residuals and selections ------------------------------------------------

def _check_feasible(u, psi):
    excess = u - psi
    if np.any(excess > FEAS_TOL):
        i = int(np.argmax(excess))
        raise InfeasibleError(i, float(excess[i]))


def best_selection(u, v, prob: GridProblem) -> np.ndarray:
    """The selection of f(., u, v) that minimizes the nodal violations."""
    u = np.asarray(u, dtype=float)
    lo, hi = prob.f_interval(u, v)
    return np.clip(-apply_E(u, prob), lo, hi)


def residual_qvip(u, eta, v, prob: GridProblem, sel_tol: float = 1e-9) -> float:
    """Worst normalized violation of the variational inequality at parameter v.

    Test directions are w = u +- delta e_i; the upward one only where u_i is
    strictly below the obstacle. Each violation is weighted by the grid
    spacing, matching the discrete pairing.
    """
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    v = np.asarray(v, dtype=float)
    psi = prob.psi(v)
    _check_feasible(u, psi)
    lo, hi = prob.f_interval(u, v)
    slack = sel_tol * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
    bad = (eta < lo - slack) | (eta > hi + slack)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"eta is not a selection of f at node {i}: {eta[i]!r} not in [{lo[i]!r}, {hi[i]!r}]")
    r = -apply_E(u, prob) - eta
    active = u >= psi - FEAS_TOL
    viol = np.where(active, np.maximum(-r, 0.0), np.abs(r))
    return float(prob.h * viol.max()) if viol.size else 0.0


def active_set(u, v, prob: GridProblem) -> np.ndarray:
    return np.asarray(u, float) >= prob.psi(v) - FEAS_TOL


def check_sandwich(u, aux: AuxData, tol: float = 1e-8) -> bool:
    u = np.asarray(u, dtype=float)
    return bool(np.all(u >= aux.ulv - tol) and np.all(u <= aux.olv + tol))


def solution_norm_bound(prob: GridProblem) -> float:
    """Bound on ||grad u||_p for solutions u in [sub, super].

    Testing with the feasible direction sub gives X^p <= a X^(p-1) + b with
    a = ||grad sub||_p and b = <b4, super - sub>, hence X <= max(2a, (2b)^(1/p)).
    """
    a = grad_norm_p(prob.sub, prob)
    b = prob.h * float(np.sum(prob.b4 * (prob.sup - prob.sub)))
    return max(2.0 * a, (2.0 * b) ** (1.0 / prob.p))


# -- the nodal solver --------------------------------------------------------

@dataclass
class SolverResult:
    u: np.ndarray
    eta: np.ndarray
    iterations: int
    residual: float
    sandwich_ok: bool
    trace: list
    converged: bool = True
    qvip_residual: float = math.nan
    active: np.ndarray = None
    method: str = ""


class _NodalSystem:
    """Scalar inclusions 0 in c_i(s) + g_i(s), c_i = E-part + d - h, per node.

    g_i is piecewise constant in s between the breakpoints (band edges and
    jumps of f), so on each piece the inclusion reduces to c_i(s) = const
    with c_i continuous and strictly increasing. ``mode`` picks the largest
    ("greatest") or smallest ("smallest") root of the set-valued equation.
    """

    def __init__(self, prob: GridProblem, v, aux: AuxData, mode: str):
        if mode not in ("greatest", "smallest"):
            raise ValueError(f"mode must be 'greatest' or 'smallest', got {mode!r}")
        self.prob, self.aux, self.mode = prob, aux, mode
        self.v = np.asarray(v, dtype=float)
        self.n = prob.n
        self.hh = prob.h
        self.psi = prob.psi(self.v)
        rows = np.arange(self.n)
        self.rows = rows
        sb = prob.s_breakpoints()
        inner = np.where((sb > aux.ulv[:, None]) & (sb < aux.olv[:, None]), sb, np.nan)
        bp = np.column_stack([aux.ulv, aux.olv, inner]) if inner.size else np.column_stack([aux.ulv, aux.olv])
        bp = np.sort(bp, axis=1)
        # drop duplicated breakpoints
        dup = np.zeros(bp.shape, bool)
        dup[:, 1:] = bp[:, 1:] == bp[:, :-1]
        bp = np.sort(np.where(dup, np.nan, bp), axis=1)
        bp = np.where(np.isnan(bp), np.inf, bp)
        self.bp = bp
        self.bp_ok = np.isfinite(bp)
        K = bp.shape[1]
        a = np.column_stack([np.full(self.n, -np.inf), bp])
        b = np.column_stack([bp, np.full(self.n, np.inf)])
        self.pa, self.pb = a, b
        self.piece_ok = np.isfinite(a) | np.isfinite(b)
        self.piece_ok &= ~(np.isinf(a) & (a > 0))
        rep = np.where(np.isfinite(a) & np.isfinite(b), 0.5 * (a + b),
                       np.where(np.isfinite(a), a + 1.0, np.where(np.isfinite(b), b - 1.0, 0.0)))
        rep = np.where(self.piece_ok, rep, 0.0)
        plo, phi_ = _g_interval(prob, aux, self.v, rep, rows)
        self.piece_g = plo if mode == "greatest" else phi_
        bpe = np.where(self.bp_ok, bp, 0.0)
        blo, bhi = _g_interval(prob, aux, self.v, bpe, rows)
        self.bp_g = blo if mode == "greatest" else bhi
        fin = np.isfinite(self.psi)
        self.psi_fin = fin
        psie = np.where(fin, self.psi, 0.0)
        qlo, qhi = _g_interval(prob, aux, self.v, psie, rows)
        self.psi_g = qlo if mode == "greatest" else qhi
        self.K = K
        self.brackets = _active_brackets(aux)
        # keeps Newton from overshooting where the gradient vanishes and p != 2
        self.jac_floor = 0.0 if prob.p == 2 else _JAC_FLOOR

    # c(s) and its slope, s shaped (m,) or (m, k)
    def c(self, s, rows, uL, uR):
        ex = (slice(None),) + (None,) * (np.ndim(s) - 1)
        hh = self.hh
        flux = self.prob.flux
        val = (flux.phi((s - uL[ex]) / hh) - flux.phi((uR[ex] - s) / hh)) / hh
        val = val + cutoff_d(s, self.aux.ulv[rows][ex], self.aux.olv[rows][ex], self.prob.p)
        if self.brackets:
            val = val - _h_from_brackets(self.brackets, s, rows)[0]
        return val

    def c_parts(self, s, rows, uL, uR, floor=0.0):
        """(dc/duL, dc/duR, dc/ds); s shaped (m,) or (m, k).

        ``floor`` bounds the slopes away from 0 before differentiating the
        flux, which tames the Jacobian of degenerate fluxes (p < 2)."""
        ex = (slice(None),) + (None,) * (np.ndim(s) - 1)
        hh = self.hh
        flux = self.prob.flux
        xl = (s - uL[ex]) / hh
        xr = (uR[ex] - s) / hh
        if floor:
            xl = np.where(np.abs(xl) < floor, floor, xl)
            xr = np.where(np.abs(xr) < floor, floor, xr)
        gl = flux.dphi(xl) / hh**2
        gr = flux.dphi(xr) / hh**2
        dd = cutoff_d_slope(s, self.aux.ulv[rows][ex], self.aux.olv[rows][ex], self.prob.p)
        D = gl + gr + dd
        if self.brackets:
            D = D - _h_from_brackets(self.brackets, s, rows)[1]
        return gl, gr, D

    def _roots(self, y, rows, uL, uR):
        """Solve c(s) = y elementwise: bracket, then Newton safeguarded by false position."""
        ex = (slice(None),) + (None,) * (y.ndim - 1)
        centre = np.broadcast_to((0.5 * (uL + uR))[ex], y.shape).copy()
        lo = centre - 1.0
        hi = centre + 1.0
        step = np.ones(y.shape)
        for _ in range(2100):
            bad = self.c(lo, rows, uL, uR) > y
            if not bad.any():
                break
            lo = np.where(bad, lo - step, lo)
            step = np.where(bad, step * 2, step)
        step = np.ones(y.shape)
        for _ in range(2100):
            bad = self.c(hi, rows, uL, uR) < y
            if not bad.any():
                break
            hi = np.where(bad, hi + step, hi)
            step = np.where(bad, step * 2, step)
        flo = self.c(lo, rows, uL, uR) - y
        fhi = self.c(hi, rows, uL, uR) - y
        x = 0.5 * (lo + hi)
        side = np.zeros(y.shape, np.int8)
        done = np.zeros(y.shape, bool)
        eps = 4 * np.finfo(float).eps
        for _ in range(200):
            cx = self.c(x, rows, uL, uR) - y
            left = cx < 0
            right = cx > 0
            # Illinois: halve the stale end value when one side keeps moving
            fhi = np.where(left & (side == -1), 0.5 * fhi, fhi)
            flo = np.where(right & (side == 1), 0.5 * flo, flo)
            lo, flo = np.where(left, x, lo), np.where(left, cx, flo)
            hi, fhi = np.where(right, x, hi), np.where(right, cx, fhi)
            side = np.where(left, -1, np.where(right, 1, 0)).astype(np.int8)
            done |= cx == 0
            _, _, slope = self.c_parts(x, rows, uL, uR)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - cx / slope
                xf = lo - flo * (hi - lo) / (fhi - flo)
            # a step below roundoff is only trusted once the bracket closes
            ulp2 = 2 * np.spacing(np.abs(x))
            xn = np.where(np.abs(xn - x) < ulp2, x - np.sign(cx) * ulp2, xn)
            bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn = np.where(bad, xf, xn)
            bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            done |= (hi - lo) <= eps * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300
            x = np.where(done, x, xn)
            if done.all():
                break
        return x

    def nodal(self, rows, uL, uR):
        """Nodal solution s, pinned flag and Jacobian weights for ``rows``.

        A node is pinned when s sits on a breakpoint or the obstacle; there
        s does not move with the neighbours and its weights vanish.
        """
        a, b = self.pa[rows], self.pb[rows]
        ok = self.piece_ok[rows]
        pg = self.piece_g[rows]
        bp, bp_ok, bpg = self.bp[rows], self.bp_ok[rows], self.bp_g[rows]
        psi, fin = self.psi[rows], self.psi_fin[rows]
        r = self._roots(-pg, rows, uL, uR)
        bpe = np.where(bp_ok, bp, 0.0)
        cb = self.c(bpe, rows, uL, uR) + bpg
        cpsi = self.c(np.where(fin, psi, 0.0), rows, uL, uR) + self.psi_g[rows]
        if self.mode == "greatest":
            pc = np.minimum(r, b)
            pc = np.where(ok & (r >= a), pc, -np.inf)
            pc = np.where(pc <= psi[:, None], pc, np.where(ok & (a <= psi[:, None]) & (r >= a), psi[:, None], -np.inf))
            bc = np.where(bp_ok & (cb <= 0) & (bp <= psi[:, None]), bp, -np.inf)
            s = np.maximum(pc.max(axis=1), bc.max(axis=1) if bc.shape[1] else -np.inf)
            contact = fin & (cpsi <= 0)
            s = np.where(contact, psi, s)
        else:
            pc = np.maximum(r, a)
            pc = np.where(ok & (r <= b), pc, np.inf)
            bc = np.where(bp_ok & (cb >= 0), bp, np.inf)
            s = np.minimum(pc.min(axis=1), bc.min(axis=1) if bc.shape[1] else np.inf)
            contact = fin & (s >= psi)
            s = np.where(contact, psi, s)
        on_bp = ((bp == s[:, None]) & bp_ok).any(axis=1)
        pinned = contact | on_bp
        gl, gr, D = self.c_parts(s, rows, uL, uR, self.jac_floor)
        good = np.isfinite(D) & (D > 0) & ~pinned
        Dsafe = np.where(good, D, 1.0)
        wl = np.where(good, gl / Dsafe, 0.0)
        wr = np.where(good, gr / Dsafe, 0.0)
        return s, pinned, wl, wr

    def neighbours(self, u, rows):
        padded = np.concatenate(([0.0], u, [0.0]))
        return padded[rows], padded[rows + 2]

    def apply(self, u):
        uL, uR = self.neighbours(u, self.rows)
        return self.nodal(self.rows, uL, uR)

    def sweep(self, u):
        """One red-black Gauss-Seidel sweep (in place) and its max update."""
        upd = 0.0
        for start in (0, 1):
            rows = self.rows[start::2]
            uL, uR = self.neighbours(u, rows)
            s, *_ = self.nodal(rows, uL, uR)
            upd = max(upd, float(np.max(np.abs(s - u[rows]))) if rows.size else 0.0)
            u[rows] = s
        return upd

    def selection(self, u):
        uL, uR = self.neighbours(u, self.rows)
        c = self.c(u, self.rows, uL, uR)
        lo, hi = _g_interval(self.prob, self.aux, self.v, u, self.rows)
        return np.clip(-c, lo, hi), c


def _newton_step(u, s, wl, wr):
    n = u.size
    R = u - s
    ab = np.zeros((3, n))
    ab[1] = 1.0
    ab[0, 1:] = -wr[:-1]
    ab[2, :-1] = -wl[1:]
    return solve_banded((1, 1), ab, -R)


def solve_auxiliary(
    prob: GridProblem,
    v,
    aux: AuxData,
    tol: float = 1e-10,
    max_iter: int = 500,
    mode: str = "greatest",
    method: str = "auto",
    u0=None,
    check_aux: bool = True,
) -> SolverResult:
    """Solve the auxiliary inclusion at parameter v.

    Each node's scalar inclusion is solved exactly (largest root in
    "greatest" mode, smallest in "smallest" mode). The resulting nodal map is
    driven to a fixed point by Newton steps on u - Pi(u) that stop at kinks of
    Pi, with continuation in the jumps of g when that stalls.
    ``method="gauss-seidel"`` runs sweeps only; "auto" uses sweeps on tiny
    grids, where they are monotone from the band edge and cheap.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (prob.n,):
        raise ValueError(f"v must have length {prob.n}")
    if check_aux:
        aux.validate(prob, v)
    system = _NodalSystem(prob, v, aux, mode)
    if u0 is None:
        u = (aux.olv if mode == "greatest" else aux.ulv).copy()
    else:
        u = np.array(u0, dtype=float)
    if method == "auto":
        method = "gauss-seidel" if prob.n <= 8 else "newton"
    if method not in ("newton", "gauss-seidel"):
        raise ValueError(f"unknown method {method!r}")
    trace = []
    it = 0
    converged = False
    if method == "gauss-seidel":
        while it < max_iter:
            it += 1
            upd = system.sweep(u)
            trace.append(upd)
            if upd < tol:
                converged = True
                break
        # finish with sweeps until the update stalls at roundoff
        for _ in range(20):
            upd = system.sweep(u)
            if upd == 0.0:
                break
    else:
        u, converged, it = _newton_solve(system, u, tol, max_iter, trace)
    eta, _ = system.selection(u)
    result = SolverResult(
        u=u,
        eta=eta,
        iterations=it,
        residual=_aux_residual(system, u, eta),
        sandwich_ok=check_sandwich(u, aux, 1e-8),
        trace=trace,
        converged=converged,
        active=u >= system.psi - FEAS_TOL,
        method=method,
    )
    if result.sandwich_ok:
        try:
            result.qvip_residual = residual_qvip(u, eta, v, prob)
        except (InfeasibleError, ValueError):
            result.qvip_residual = math.inf
    else:
        result.qvip_residual = math.inf
    return result


def _residual(u, s):
    return float(np.max(np.abs(u - s))) if u.size else 0.0


def _stop_at_kinks(system, u, w):
    """Move each node from u towards w but no further than its first kink.

    Kinks are the breakpoints where g jumps and the obstacle; Pi is smooth
    between them, so a Newton step that crosses one is cut back to it.
    """
    g = system.piece_g
    jumps = system.bp_ok & ((g[:, :-1] != g[:, 1:]) | (system.bp_g != g[:, :-1]) | (system.bp_g != g[:, 1:]))
    kinks = np.column_stack([np.where(jumps, system.bp, np.nan),
                             np.where(system.psi_fin, system.psi, np.nan)])
    lo = np.minimum(u, w)[:, None]
    hi = np.maximum(u, w)[:, None]
    inside = np.where((kinks > lo) & (kinks < hi), kinks, np.nan)
    if np.all(np.isnan(inside)):
        return w
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cut = np.where(w > u, np.nanmin(inside, axis=1), np.nanmax(inside, axis=1))
    return np.where(np.isnan(cut), w, cut)


def _signature(system, s):
    """Pinned nodes and the value of g each free node sees, as bytes."""
    on = ((system.bp == s[:, None]) & system.bp_ok).any(axis=1) | (system.psi_fin & (s == system.psi))
    inside = (s[:, None] > system.pa) & (s[:, None] < system.pb)
    g = system.piece_g[system.rows, inside.argmax(axis=1)]
    return np.packbits(on).tobytes() + np.where(on, np.nan, g).tobytes()


def _kink_newton(system, u, tol, max_iter, trace):
    """Newton on u - Pi(u) with kink-stopped trial steps.

    A full step that reaches a pattern of pinned nodes and g-values not seen
    before is taken, as in a primal-dual active set method, unless it
    inflates the residual by more than _NOVEL_GROWTH. Otherwise
    the step length with the smallest residual wins. After _STALL iterations
    without a new best iterate, Gauss-Seidel sweeps restart from the best one.
    """
    s, pinned, wl, wr = system.apply(u)
    res = _residual(u, s)
    best = (res, u.copy(), (s, pinned, wl, wr))
    seen = {_signature(system, s)}
    stall = 0
    it = 0
    while it < max_iter and res >= tol:
        trace.append(res)
        it += 1
        delta = _newton_step(u, s, wl, wr)
        if not np.all(np.isfinite(delta)):
            delta = s - u
        trial = None
        for lam in _STEP_LENGTHS:
            w = _stop_at_kinks(system, u, u + lam * delta)
            out = system.apply(w)
            r = _residual(w, out[0])
            if lam == 1.0:
                sig = _signature(system, out[0])
                if sig not in seen and r <= _NOVEL_GROWTH * res:
                    seen.add(sig)
                    trial = (r, w, out)
                    break
            if trial is None or r < trial[0]:
                trial = (r, w, out)
        res, u, (s, pinned, wl, wr) = trial
        if res < best[0]:
            best = (res, u.copy(), (s, pinned, wl, wr))
            stall = 0
        else:
            stall += 1
            if stall >= _STALL:
                u = best[1].copy()
                for _ in range(_SWEEPS):
                    system.sweep(u)
                s, pinned, wl, wr = system.apply(u)
                res = _residual(u, s)
                stall = 0
    if res < best[0]:
        best = (res, u, (s, pinned, wl, wr))
    trace.append(best[0])
    return best[1], best[0], best[2], it


def _current_g(system, s):
    """Per node, the value of g on the piece (or breakpoint) holding s."""
    inside = (s[:, None] > system.pa) & (s[:, None] < system.pb) & system.piece_ok
    piece = np.argmax(inside, axis=1)
    on_piece = inside.any(axis=1)
    nearest = np.argmin(np.abs(np.where(system.bp_ok, system.bp, np.inf) - s[:, None]), axis=1)
    return np.where(on_piece, system.piece_g[system.rows, piece], system.bp_g[system.rows, nearest])


def _continuation(system, u, tol, max_iter, trace):
    """Continuation in the size of the jumps of g.

    g is blended from a constant per node (its current value, so the nodal
    map has no jumps) to the true piecewise constant g. Each stage is solved
    by kink-stopped Newton from the previous solution; the blending step
    grows on success and halves on failure.
    """
    names = ("piece_g", "bp_g", "psi_g")
    full = {k: getattr(system, k).copy() for k in names}
    s, *_ = system.apply(u)
    g0 = _current_g(system, s)

    def blend(tau):
        for k in names:
            base = g0 if full[k].ndim == 1 else g0[:, None]
            setattr(system, k, base + tau * (full[k] - base))

    total = 0
    try:
        blend(0.0)
        u, res, _, it = _kink_newton(system, u, tol, _STAGE_ITER, [])
        total += it
        if res >= tol:
            return u, False, total
        tau, step = 0.0, 0.25
        while tau < 1.0 and step > _MIN_BLEND and total < _BLEND_BUDGET * max_iter:
            nxt = min(1.0, tau + step)
            blend(nxt)
            w, res, _, it = _kink_newton(system, u.copy(), tol, _STAGE_ITER, [])
            total += it
            if res < tol:
                u, tau = w, nxt
                step *= 1.5
                trace.append(res)
            else:
                step *= 0.5
        return u, tau == 1.0, total
    finally:
        blend(1.0)


def _newton_solve(system, u, tol, max_iter, trace):
    """Kink-stopped Newton, then continuation in the jumps of g, then
    stiffer Jacobian floors, each starting from the best iterate so far."""
    u, res, _, it = _kink_newton(system, u, tol, min(max_iter, _FIRST_ITER), trace)
    if res >= tol:
        w, ok, extra = _continuation(system, u, tol, max_iter, trace)
        it += extra
        if ok:
            u, res = w, _residual(w, system.apply(w)[0])
    if res >= tol and system.prob.p != 2:
        floor = system.jac_floor
        for system.jac_floor in _FALLBACK_FLOORS:
            u, res, _, more = _kink_newton(system, u, tol, _FIRST_ITER, trace)
            it += more
            if res < tol:
                break
        system.jac_floor = floor
    converged = res < tol
    if converged:
        # the floored Jacobian converges only linearly; try the exact one first
        floor = system.jac_floor
        for system.jac_floor in sorted({0.0, floor}):
            u, res, (s, pinned, _, _), _ = _kink_newton(system, u, _POLISH_TOL, _POLISH_ITER, [])
        system.jac_floor = floor
        # put pinned nodes exactly on their breakpoint or the obstacle
        u = np.where(pinned, s, u)
    return u, converged, it


def _aux_residual(system, u, eta):
    uL, uR = system.neighbours(u, system.rows)
    c = system.c(u, system.rows, uL, uR)
    r = -(c + eta)
    active = u >= system.psi - FEAS_TOL
    viol = np.where(active, np.maximum(-r, 0.0), np.abs(r))
    return float(system.hh * viol.max()) if viol.size else 0.0
