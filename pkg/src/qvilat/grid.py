"""1D finite-difference model of the elliptic quasi-variational inclusion.

Domain (0, 1) with zero Dirichlet values; ``n`` interior nodes x_i = i*h,
h = 1/(n+1). Operator (E_h u)_i = (phi((u_i - u_{i-1})/h) - phi((u_{i+1} - u_i)/h))/h.
All pairings are the weighted sums <a, w>_h = h * sum(a_i w_i).

The multivalued lower-order term is f(x, s, t) = [f_lo, f_hi], a Minkowski sum
of terms that are constant, step functions in s (usc: the jump point takes
the hull of both sides), or step functions in t (decreasing in t). The
constraint set for parameter v is C(v) = {w : w_i <= psi_i(v)} with
psi_i(v) = base_i + slope_i * v_i.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError

_XI_FLOOR = 1e-150


# -- flux --------------------------------------------------------------------

@dataclass(frozen=True)
class Flux:
    """phi(xi) = |xi|^(p-2) xi, optionally regularized as (eps^2+xi^2)^((p-2)/2) xi."""

    p: float
    kind: str = "p_laplacian"
    eps: float = 0.0

    def __post_init__(self):
        if not (self.p > 1 and math.isfinite(self.p)):
            raise ConfigError("p", f"exponent must lie in (1, inf), got {self.p!r}")
        if self.kind not in ("p_laplacian", "regularized_p_laplacian"):
            raise ConfigError("flux.kind", f"unknown flux {self.kind!r}")
        if self.kind == "regularized_p_laplacian" and not self.eps > 0:
            raise ConfigError("flux.eps", "regularization needs eps > 0")

    def phi(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.kind == "p_laplacian":
            if self.p == 2.0:
                return xi.copy()
            return np.sign(xi) * np.abs(xi) ** (self.p - 1.0)
        return (self.eps**2 + xi * xi) ** ((self.p - 2.0) / 2.0) * xi

    def dphi(self, xi):
        xi = np.asarray(xi, dtype=float)
        p = self.p
        if self.kind == "p_laplacian":
            if p == 2.0:
                return np.ones_like(xi)
            a = np.maximum(np.abs(xi), _XI_FLOOR)
            return (p - 1.0) * a ** (p - 2.0)
        r = self.eps**2 + xi * xi
        return r ** ((p - 2.0) / 2.0) + (p - 2.0) * xi * xi * r ** ((p - 4.0) / 2.0)


# -- the interval bifunction -------------------------------------------------

@dataclass(frozen=True)
class Term:
    """One summand of f.

    kind "const": the interval ``below`` everywhere.
    kind "step_s": ``below`` for s < at, ``above`` for s > at, hull at s == at.
    kind "step_t": ``below`` for t <= at, ``above`` for t > at.
    ``x_range`` restricts the term to nodes with x in [x0, x1].
    """

    kind: str
    below: tuple
    above: tuple = None
    at: float = 0.0
    x_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("const", "step_s", "step_t"):
            raise ConfigError("f.terms.kind", f"unknown term kind {self.kind!r}")
        for name, iv in (("below", self.below), ("above", self.above)):
            if iv is None:
                continue
            if len(iv) != 2 or not iv[0] <= iv[1]:
                raise ConfigError(f"f.terms.{name}", f"need [lo, hi] with lo <= hi, got {iv!r}")
        if self.kind != "const" and self.above is None:
            raise ConfigError("f.terms.above", f"{self.kind} term needs an 'above' interval")
        if self.kind == "step_t":
            # decreasing in t: the interval for small t dominates
            if self.below[0] < self.above[0] or self.below[1] < self.above[1]:
                raise ConfigError("f.terms", "step_t term must be decreasing in t (below >= above)")

    def bound(self) -> float:
        vals = list(self.below) + (list(self.above) if self.above is not None else [])
        return max(abs(v) for v in vals)

    def evaluate(self, s, t):
        s = np.asarray(s, dtype=float)
        blo, bhi = self.below
        if self.kind == "const":
            return np.full(s.shape, float(blo)), np.full(s.shape, float(bhi))
        alo, ahi = self.above
        if self.kind == "step_t":
            low_t = np.asarray(t, dtype=float) <= self.at
            return np.where(low_t, blo, alo).astype(float), np.where(low_t, bhi, ahi).astype(float)
        lo = np.where(s < self.at, blo, alo).astype(float)
        hi = np.where(s < self.at, bhi, ahi).astype(float)
        at = s == self.at
        if np.any(at):
            lo = np.where(at, min(blo, alo), lo)
            hi = np.where(at, max(bhi, ahi), hi)
        return lo, hi


@dataclass(frozen=True)
class IntervalBifunction:
    terms: tuple = ()

    def masks(self, x):
        return [(x >= t.x_range[0]) & (x <= t.x_range[1]) for t in self.terms]

    def s_breakpoints(self) -> list:
        return [t.at if t.kind == "step_s" else None for t in self.terms]


# -- the problem -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridProblem:
    n: int
    flux: Flux
    f: IntervalBifunction
    psi_base: np.ndarray
    psi_slope: np.ndarray
    sub: np.ndarray
    sup: np.ndarray
    b4: np.ndarray = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ConfigError("n", f"need a positive node count, got {n!r}")
        for name in ("psi_base", "psi_slope", "sub", "sup"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ConfigError(name, f"expected {n} values, got shape {arr.shape}")
            object.__setattr__(self, name, arr)
        if np.any(self.psi_slope < 0) or not np.all(np.isfinite(self.psi_slope)):
            raise ConfigError("psi.slope", "slope must be finite and >= 0 (C(v) increasing in v)")
        if not (np.all(np.isfinite(self.sub)) and np.all(np.isfinite(self.sup))):
            raise ConfigError("sub/super", "vectors must be finite")
        if np.any(self.sub > self.sup):
            raise ConfigError("sub/super", "need sub <= super componentwise")
        bound = self._term_bound()
        if self.b4 is None:
            object.__setattr__(self, "b4", bound)
        else:
            b4 = np.broadcast_to(np.asarray(self.b4, dtype=float), (n,)).copy()
            if np.any(bound > b4 + 1e-12):
                raise ConfigError("b4", "growth bound smaller than the term bound")
            object.__setattr__(self, "b4", b4)
        object.__setattr__(self, "_masks", self.f.masks(self.x))

    @property
    def p(self) -> float:
        return self.flux.p

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * self.h

    def _term_bound(self):
        out = np.zeros(self.n)
        for t, m in zip(self.f.terms, self.f.masks(self.x)):
            out += np.where(m, t.bound(), 0.0)
        return out

    def psi(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        with np.errstate(invalid="ignore"):
            out = self.psi_base + self.psi_slope * v
        return np.where(np.isinf(self.psi_base), np.inf, out)

    def f_interval(self, s, t, idx=None):
        """(lo, hi) arrays of f(x_i, s_i, t_i) for nodes ``idx`` (default all)."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if 0 < t.ndim < s.ndim:
            t = t.reshape(t.shape + (1,) * (s.ndim - t.ndim))
        t = np.broadcast_to(t, s.shape)
        lo = np.zeros(s.shape)
        hi = np.zeros(s.shape)
        for term, mask in zip(self.f.terms, self._masks):
            m = mask if idx is None else mask[idx]
            if s.ndim > m.ndim:
                m = m.reshape(m.shape + (1,) * (s.ndim - m.ndim))
            if not np.any(m):
                continue
            tl, th = term.evaluate(s, t)
            lo += np.where(m, tl, 0.0)
            hi += np.where(m, th, 0.0)
        return lo, hi

    def s_breakpoints(self) -> np.ndarray:
        """(n, k) array of s-jump locations per node, nan where absent."""
        cols = []
        for term, mask in zip(self.f.terms, self._masks):
            if term.kind == "step_s":
                cols.append(np.where(mask, term.at, np.nan))
        if not cols:
            return np.empty((self.n, 0))
        return np.column_stack(cols)

    def t_breakpoints(self) -> list:
        return sorted({t.at for t in self.f.terms if t.kind == "step_t"})

    def with_bounds(self, sub=None, sup=None) -> "GridProblem":
        return GridProblem(
            self.n, self.flux, self.f, self.psi_base, self.psi_slope,
            self.sub if sub is None else sub, self.sup if sup is None else sup,
            None, self.name, dict(self.meta),
        )

    def to_config(self) -> dict:
        def vec(a):
            return [None if math.isinf(x) else float(x) for x in a]

        terms = []
        for t in self.f.terms:
            d = {"kind": t.kind, "below": list(t.below)}
            if t.above is not None:
                d["above"] = list(t.above)
            if t.kind != "const":
                d["at"] = t.at
            if tuple(t.x_range) != (0.0, 1.0):
                d["x_range"] = list(t.x_range)
            terms.append(d)
        cfg = {
            "name": self.name,
            "n": int(self.n),
            "flux": {"kind": self.flux.kind, "p": self.flux.p},
            "f": {"terms": terms},
            "psi": {"base": vec(self.psi_base), "slope": self.psi_slope.tolist()},
            "sub": self.sub.tolist(),
            "super": self.sup.tolist(),
        }
        if self.flux.kind == "regularized_p_laplacian":
            cfg["flux"]["eps"] = self.flux.eps
        return cfg


# -- config loading ----------------------------------------------------------

def _shape(spec, x, field_name, allow_inf=False):
    n = len(x)
    if spec is None:
        if allow_inf:
            return np.full(n, np.inf)
        raise ConfigError(field_name, "missing")
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return np.full(n, float(spec))
    if isinstance(spec, list):
        if len(spec) != n:
            raise ConfigError(field_name, f"expected {n} values, got {len(spec)}")
        vals = []
        for v in spec:
            if v is None and allow_inf:
                vals.append(np.inf)
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                vals.append(float(v))
            else:
                raise ConfigError(field_name, f"bad entry {v!r}")
        return np.array(vals)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        offset = float(spec.get("offset", 0.0))
        if kind == "constant":
            return np.full(n, float(spec.get("value", 0.0))) + offset
        if kind == "parabola":
            return float(spec["amplitude"]) * 4.0 * x * (1.0 - x) + offset
        if kind == "sine":
            return float(spec["amplitude"]) * np.sin(math.pi * x) + offset
        if kind == "p_profile":
            # exact 1D p-Laplacian profile for the constant load ``load``
            pp = float(spec["p"])
            q = 1.0 / (pp - 1.0)
            c = float(spec["load"])
            return c**q * (0.5 ** (q + 1) - np.abs(0.5 - x) ** (q + 1)) / (q + 1) + offset
        if kind == "tent":
            peak = float(spec.get("peak", 0.5))
            return float(spec["amplitude"]) * np.minimum(x / peak, (1.0 - x) / (1.0 - peak)) + offset
        raise ConfigError(f"{field_name}.kind", f"unknown shape {kind!r}")
    raise ConfigError(field_name, f"unsupported value {spec!r}")


def _interval(v, field_name):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v), float(v))
    if isinstance(v, list) and len(v) == 2 and all(isinstance(z, (int, float)) for z in v):
        return (float(v[0]), float(v[1]))
    raise ConfigError(field_name, f"need a number or [lo, hi], got {v!r}")


def problem_from_config(cfg: dict) -> GridProblem:
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    try:
        n = cfg["n"]
    except KeyError:
        raise ConfigError("n", "missing") from None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("n", f"need a positive integer, got {n!r}")
    fl = cfg.get("flux", {})
    if not isinstance(fl, dict):
        raise ConfigError("flux", "must be an object")
    p = fl.get("p", cfg.get("p", 2.0))
    if not isinstance(p, (int, float)) or isinstance(p, bool):
        raise ConfigError("p", f"need a number, got {p!r}")
    flux = Flux(float(p), fl.get("kind", "p_laplacian"), float(fl.get("eps", 0.0)))
    fspec = cfg.get("f", {"terms": []})
    if not isinstance(fspec, dict) or not isinstance(fspec.get("terms", []), list):
        raise ConfigError("f", "need an object with a 'terms' list")
    terms = []
    for k, td in enumerate(fspec.get("terms", [])):
        if not isinstance(td, dict):
            raise ConfigError(f"f.terms[{k}]", "must be an object")
        kind = td.get("kind", "const")
        below = _interval(td.get("below", td.get("value")), f"f.terms[{k}].below")
        above = _interval(td["above"], f"f.terms[{k}].above") if "above" in td else None
        xr = td.get("x_range", [0.0, 1.0])
        terms.append(Term(kind, below, above, float(td.get("at", 0.0)), (float(xr[0]), float(xr[1]))))
    h = 1.0 / (n + 1)
    x = np.arange(1, n + 1) * h
    psi = cfg.get("psi")
    if psi is None:
        base, slope = np.full(n, np.inf), np.zeros(n)
    elif isinstance(psi, dict):
        base = _shape(psi.get("base"), x, "psi.base", allow_inf=True)
        slope = _shape(psi.get("slope", 0.0), x, "psi.slope")
    else:
        raise ConfigError("psi", "must be null or an object with base/slope")
    sub = _shape(cfg.get("sub"), x, "sub")
    sup = _shape(cfg.get("super"), x, "super")
    b4 = cfg.get("b4")
    if b4 is not None:
        b4 = _shape(b4, x, "b4")
    return GridProblem(n, flux, IntervalBifunction(tuple(terms)), base, slope, sub, sup, b4,
                       str(cfg.get("name", "")), dict(cfg.get("meta", {})))


def load_problem(path) -> GridProblem:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    return problem_from_config(cfg)


PRESETS = (
    "linear-load",
    "plain-obstacle",
    "p-laplacian-load-1.5",
    "p-laplacian-load-3",
    "quasi-obstacle",
    "step-bifunction",
    "tiny-quantized",
)


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("qvilat.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def preset(name: str, **overrides) -> GridProblem:
    cfg = preset_config(name)
    cfg.update(overrides)
    return problem_from_config(cfg)


# -- discrete operators ------------------------------------------------------

def apply_E(u, prob: GridProblem) -> np.ndarray:
    """(E_h u)_i with zero boundary values."""
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.n,):
        raise ValueError(f"expected a vector of length {prob.n}")
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite entry in u")
    h = prob.h
    padded = np.concatenate(([0.0], u, [0.0]))
    flux = prob.flux.phi(np.diff(padded) / h)
    return (flux[:-1] - flux[1:]) / h


def pairing(a, w, prob: GridProblem) -> float:
    return prob.h * float(np.dot(a, w))


def grad_norm_p(u, prob: GridProblem) -> float:
    """Discrete W-norm ||grad_h u||_p."""
    padded = np.concatenate(([0.0], np.asarray(u, float), [0.0]))
    g = np.diff(padded) / prob.h
    return float((prob.h * np.sum(np.abs(g) ** prob.p)) ** (1.0 / prob.p))


def lp_norm(u, prob: GridProblem, r=None) -> float:
    r = prob.p if r is None else r
    return float((prob.h * np.sum(np.abs(np.asarray(u, float)) ** r)) ** (1.0 / r))
