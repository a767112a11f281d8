"""Nonlinear systems for the RSB and FRSB structures.

Conventions
-----------
A structure is described by the tail function ``phi(x) = nu((x, 1])`` at the
atoms ``x_0 < ... < x_s`` of a chain.  On a block ``[x_{l-1}, x_l]`` the tail
ratio ``R_l = phi(x_{l-1}) / phi(x_l)`` and the atoms satisfy

* ``phi(x_{l-1}) phi(x_l) = inv_slope(x_{l-1}, x_l)``, and
* ``h(x_{l-1}, x_l, R_l) = 0``.

The solvers polish roots of the printed equations (``h`` evaluated at
``R^{+-1} r2 / F_l``); the tail-ratio form above only produces seeds.

Systems
-------
``rsb``     chain ``(0, q_1, ..., q_{k-1}, 1)``, unknowns the interior points
            and ``log R_k``.
``first``   chain ``(0, x_1, ..., x_s)`` ending on a segment; closes with
            ``xi''(x_s) phi(x_s)^2 = 1``.
``last``    chain ``(x_0, ..., x_{s-1}, 1)`` starting after a segment;
            closes with ``xi''(x_0) phi(x_0)^2 = 1``.
``middle``  chain ``(x_0, ..., x_s)`` between two segments; both closures.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidMeasure, NonMonotoneWeights, NoSolution, ValidationError
from .kernels import (Chain, block_ratio, chain_profile, h_value, inv_slope,
                      inverse_bracket_array, parity_sign, r2)
from .measure import Block, ParisiMeasure, Segment, omega
from .newton import damped_newton

__all__ = [
    "RsbSolution", "FrsbSolution", "BlockRoot", "SolverContext", "solve_rsb",
    "solve_frsb", "critical_points", "composition_f_set", "compositions",
    "MIN_GAP",
]

MIN_GAP = 1e-7             # degeneracy guard between consecutive atoms
RESIDUAL_TARGET = 1e-12
RESIDUAL_ACCEPT = 1e-10
COND_REL_TOL = 1e-9
GCRIT_TOL = 1e-12
CURVATURE_POINTS = 257
SEED_GRID = {1: 400, 2: 200, 3: 100, 4: 40}
MAX_SEEDS = 64


# ------------------------------------------------------------------ helpers

def composition_f_set(composition):
    """Indices ``w_j = s_1 + ... + s_j`` for ``j < t``."""
    out, acc = [], 0
    for s in composition[:-1]:
        acc += s
        out.append(acc)
    return tuple(out)


def compositions(k):
    """All FRSB compositions with sum ``k``.

    Every part is positive except possibly the last, which may be 0 (the
    final segment then runs up to 1).  At least two parts.  Returned in
    lexicographic order.
    """
    out = set()
    for t in range(2, k + 2):
        for cuts in itertools.combinations(range(1, k), t - 1):
            parts = np.diff((0,) + cuts + (k,)).tolist()
            out.add(tuple(parts))
        for cuts in itertools.combinations(range(1, k), t - 2):
            parts = np.diff((0,) + cuts + (k,)).tolist() + [0]
            out.add(tuple(parts))
    return sorted(c for c in out if len(c) >= 2)


def _node_grid(M):
    # quadratic refinement towards 1, where large exponents concentrate structure
    u = np.linspace(0.0, 1.0, M + 1)
    return 1.0 - (1.0 - u) ** 2


class TailTable:
    """Tail products on all pairs of a node grid, used only for seeding.

    ``U[i, j] = log(phi(x_j)^2)`` and ``V[i, j] = log(phi(x_i)^2)`` for a
    block ``[x_i, x_j]`` of the grid.
    """

    def __init__(self, spec, M):
        self.M = M
        x = _node_grid(M)
        self.x = x
        f0, f1, f2 = spec.d_array(x), spec.d_array(x, 1), spec.d_array(x, 2)
        L = x[None, :] - x[:, None]
        upper = L > 0
        D = f1[None, :] - f1[:, None]
        K = f0[None, :] - f0[:, None] - f1[:, None] * L
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = -K[upper] / (D[upper] * L[upper])
            c = L[upper] / D[upper]
            zeta = inverse_bracket_array(beta)
            self.U = np.full(L.shape, np.nan)
            self.V = np.full(L.shape, np.nan)
            self.U[upper] = np.log(c / zeta)
            self.V[upper] = np.log(c * zeta)
            self.logd2 = np.log(f2)


# ------------------------------------------------------------------ systems

@dataclass(frozen=True)
class _System:
    kind: str
    s: int

    @property
    def n_free(self):
        return {"rsb": self.s - 1, "first": self.s, "last": self.s,
                "middle": self.s + 1}[self.kind]

    def chain(self, free):
        free = tuple(float(v) for v in free)
        if self.kind == "rsb":
            return (0.0,) + free + (1.0,)
        if self.kind == "first":
            return (0.0,) + free
        if self.kind == "last":
            return free + (1.0,)
        return free


def _check_nodes(nodes):
    if any(not (0.0 <= v <= 1.0) for v in nodes):
        raise ValueError("node outside [0, 1]")
    if any(b - a <= 0.0 for a, b in zip(nodes, nodes[1:])):
        raise ValueError("nodes not increasing")


def _tail_form(spec, kind, nodes):
    """Seed residuals: mismatch of log(phi^2) computed from adjacent blocks."""
    _check_nodes(nodes)
    c = [inv_slope(spec, a, b) for a, b in zip(nodes, nodes[1:])]
    zt = [block_ratio(spec, a, b) for a, b in zip(nodes, nodes[1:])]
    out = []
    if kind in ("last", "middle"):
        out.append(math.log(c[0] * zt[0]) + math.log(spec.d(nodes[0], 2)))
    for l in range(1, len(nodes) - 1):
        out.append(math.log(c[l - 1] / zt[l - 1]) - math.log(c[l] * zt[l]))
    if kind in ("first", "middle"):
        out.append(math.log(c[-1] / zt[-1]) + math.log(spec.d(nodes[-1], 2)))
    return np.array(out)


def _star(kind, prof, s, log_ratio=None):
    if kind == "rsb":
        return math.exp(log_ratio)
    if kind in ("first", "middle"):
        return prof.F[s]
    f0 = prof.F[0]
    if parity_sign(s) < 0:
        if f0 == 0.0:
            raise ZeroDivisionError("F_0 = 0")
        return 1.0 / f0
    return f0


def _block_arguments(spec, chain, prof, star):
    """z-arguments ``star^{(-1)^{s-l}} r2(x_{l-1}, x_l) / F_l``, l = 1..s."""
    s = len(chain) - 1
    out = []
    for l in range(1, s + 1):
        base = r2(spec, chain[l - 1], chain[l]) / prof.F[l]
        out.append(base * (star if parity_sign(s - l) > 0 else 1.0 / star))
    return out


def _normative(spec, kind, chain, log_ratio=None, scaled=True):
    prof = chain_profile(spec, chain)
    s = len(chain) - 1
    star = _star(kind, prof, s, log_ratio)
    args = _block_arguments(spec, chain, prof, star)
    res = []
    for l in range(1, s + 1):
        a, b = chain[l - 1], chain[l]
        val = h_value(spec, a, b, args[l - 1])
        if scaled:
            val /= (spec.d(b, 1) - spec.d(a, 1)) * (b - a)
        res.append(val)
    if kind == "middle":
        res.append(math.log(prof.F[0]) - parity_sign(s) * math.log(prof.F[s]))
    return np.array(res), prof, star


def _table_residuals(table, system, grids):
    """Tail-form residual components on an index grid (NaN where invalid)."""
    kind = system.kind
    M = table.M
    nodes = list(grids)
    if kind in ("rsb", "first"):
        nodes = [np.zeros_like(grids[0])] + nodes
    if kind in ("rsb", "last"):
        nodes = nodes + [np.full_like(grids[0], M)]
    valid = np.ones(grids[0].shape, dtype=bool)
    for a, b in zip(nodes, nodes[1:]):
        valid &= b > a
    U, V, logd2 = table.U, table.V, table.logd2
    comps = []
    with np.errstate(invalid="ignore"):
        if kind in ("last", "middle"):
            comps.append(V[nodes[0], nodes[1]] + logd2[nodes[0]])
        for l in range(1, len(nodes) - 1):
            comps.append(U[nodes[l - 1], nodes[l]] - V[nodes[l], nodes[l + 1]])
        if kind in ("first", "middle"):
            comps.append(U[nodes[-2], nodes[-1]] + logd2[nodes[-1]])
    return [np.where(valid & np.isfinite(e), e, np.nan) for e in comps]


def _dense_seeds(table, system):
    """Centres of grid cells across which every tail-form residual changes sign."""
    d = system.n_free
    M = table.M
    grids = np.meshgrid(*([np.arange(M + 1)] * d), indexing="ij")
    comps = _table_residuals(table, system, grids)
    corners = list(itertools.product((0, 1), repeat=d))
    candidate = np.ones((M,) * d, dtype=bool)
    merit = np.zeros((M,) * d)
    for e in comps:
        lo = np.full((M,) * d, np.inf)
        hi = np.full((M,) * d, -np.inf)
        for off in corners:
            sl = tuple(slice(o, M + o) for o in off)
            v = e[sl]
            candidate &= np.isfinite(v)
            lo = np.fmin(lo, v)
            hi = np.fmax(hi, v)
        with np.errstate(invalid="ignore"):
            candidate &= (lo <= 0.0) & (hi >= 0.0)
            merit = np.fmax(merit, hi - lo)
    cand = np.argwhere(candidate)
    order = np.argsort(merit[tuple(cand.T)], kind="stable")
    x = table.x
    return [tuple(0.5 * (x[i] + x[i + 1]) for i in row) for row in cand[order][:MAX_SEEDS]]


def _scalar_seeds(spec, table, system):
    """Exact roots of the one-dimensional tail-form equation, by sign scan."""
    x = table.x
    vals = []
    for xi in x:
        try:
            vals.append(float(_tail_form(spec, system.kind, system.chain((xi,)))[0]))
        except (ValueError, ZeroDivisionError, OverflowError):
            vals.append(np.nan)
    vals = np.array(vals)
    out = []
    for i in range(len(x) - 1):
        fa, fb = vals[i], vals[i + 1]
        if np.isfinite(fa) and np.isfinite(fb) and fa * fb <= 0.0:
            if fa == 0.0:
                out.append(x[i])
                continue
            f = lambda t: _tail_form(spec, system.kind, system.chain((t,)))[0]
            try:
                out.append(brentq(f, x[i], x[i + 1], xtol=1e-15, rtol=1e-15))
            except ValueError:
                continue
    return [(v,) for v in out]


# ------------------------------------------------------------------ roots

@dataclass(frozen=True)
class BlockRoot:
    """A solved chain of one system together with its tails.

    Attributes
    ----------
    kind : str
    chain : tuple of float
    tails : tuple of float
        ``phi`` at every node.
    star : float
        The closing value (``R_s`` of the chain).
    residuals : tuple of float
        Unscaled residuals of the printed equations (plus the linking
        residual for middle chains).
    profile : KernelProfile
    """

    kind: str
    chain: tuple
    tails: tuple
    star: float
    residuals: tuple
    profile: object = field(repr=False)

    @property
    def densities(self):
        x, p = self.chain, self.tails
        return tuple((p[l - 1] - p[l]) / (x[l] - x[l - 1]) for l in range(1, len(x)))

    @property
    def ratios(self):
        p = self.tails
        return tuple(p[l - 1] / p[l] for l in range(1, len(p)))


def _tails_for(spec, kind, chain, star):
    c = [inv_slope(spec, a, b) for a, b in zip(chain, chain[1:])]
    s = len(chain) - 1
    phi = [0.0] * (s + 1)
    if kind == "last":
        phi[0] = spec.d(chain[0], 2) ** -0.5
        for l in range(1, s + 1):
            phi[l] = c[l - 1] / phi[l - 1]
        return tuple(phi)
    if kind == "rsb":
        phi[s] = math.sqrt(c[-1] / star)
    else:
        phi[s] = spec.d(chain[s], 2) ** -0.5
    for l in range(s, 0, -1):
        phi[l - 1] = c[l - 1] / phi[l]
    return tuple(phi)


def _solve_system(spec, ctx, system):
    d = system.n_free
    if system.kind == "rsb" and d == 0:
        seeds = [()]
    elif d == 1:
        seeds = _scalar_seeds(spec, ctx.table(SEED_GRID[1]), system)
    else:
        M = SEED_GRID.get(d, max(12, int(4e6 ** (1.0 / d))))
        seeds = _dense_seeds(ctx.table(M), system)
    roots = []
    for seed in seeds:
        root = _polish(spec, system, seed)
        if root is None:
            continue
        if any(max(abs(a - b) for a, b in zip(root.chain, r.chain)) < 1e-9 for r in roots):
            continue
        roots.append(root)
    roots.sort(key=lambda r: r.chain)
    return roots


def _polish(spec, system, seed):
    kind = system.kind

    def tail_fun(u):
        return _tail_form(spec, kind, system.chain(u))

    # the tail form is better scaled far from a root; the printed equations
    # then confirm and finish the root
    pre = damped_newton(tail_fun, np.array(seed, dtype=float), tol=1e-13, max_iter=60)
    free0 = pre.x if pre.residual < 1e-6 else np.array(seed, dtype=float)
    if kind == "rsb":
        chain0 = system.chain(free0)
        try:
            last = block_ratio(spec, chain0[-2], chain0[-1])
        except (ValueError, ArithmeticError):
            return None
        x0 = np.append(free0, math.log(last))

        def fun(u):
            ch = system.chain(u[:-1])
            _check_nodes(ch)
            return _normative(spec, kind, ch, log_ratio=u[-1])[0]
    else:
        x0 = free0

        def fun(u):
            ch = system.chain(u)
            _check_nodes(ch)
            return _normative(spec, kind, ch)[0]

    res = damped_newton(fun, x0, tol=1e-15, max_iter=80)
    u = res.x
    free = u[:-1] if kind == "rsb" else u
    chain = system.chain(free)
    try:
        _check_nodes(chain)
    except ValueError:
        return None
    if min(b - a for a, b in zip(chain, chain[1:])) < MIN_GAP:
        return None
    if kind in ("last", "middle") and chain[0] < MIN_GAP:
        return None
    try:
        raw, prof, star = _normative(spec, kind, chain,
                                     log_ratio=(u[-1] if kind == "rsb" else None),
                                     scaled=False)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    if not np.all(np.isfinite(raw)) or np.max(np.abs(raw)) > RESIDUAL_ACCEPT:
        return None
    tails = _tails_for(spec, kind, chain, star)
    return BlockRoot(kind, chain, tails, star, tuple(float(v) for v in raw), prof)


class SolverContext:
    """Per-mixture cache of seeding tables and solved systems."""

    def __init__(self, spec):
        self.spec = spec
        self._tables = {}
        self._roots = {}

    def table(self, M):
        if M not in self._tables:
            self._tables[M] = TailTable(self.spec, M)
        return self._tables[M]

    def roots(self, kind, s):
        key = (kind, s)
        if key not in self._roots:
            self._roots[key] = _solve_system(self.spec, self, _System(kind, s))
        return self._roots[key]


def _context(spec, ctx):
    if ctx is None:
        return SolverContext(spec)
    if ctx.spec != spec:
        raise ValidationError("solver context belongs to a different mixture")
    return ctx


# ------------------------------------------------------------------ conditions

def _ratio_crossings(spec, a, b, ratio, subgrid=2048, warn=False):
    """Points x in (a, b) with inv_slope(a, x) / inv_slope(x, b) = ratio."""
    xs = np.linspace(a, b, subgrid + 2)[1:-1]
    f1a, f1b = spec.d(a, 1), spec.d(b, 1)
    f1 = spec.d_array(xs, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (np.log((xs - a) / (f1 - f1a)) - np.log((b - xs) / (f1b - f1))
                - math.log(ratio))

    def f(t):
        return (math.log(inv_slope(spec, a, t)) - math.log(inv_slope(spec, t, b))
                - math.log(ratio))

    lo, hi = vals[:-1], vals[1:]
    cells = np.flatnonzero(np.isfinite(lo) & np.isfinite(hi) & (lo * hi <= 0.0)
                           & ((lo == 0.0) | (hi != 0.0)))
    roots = []
    for i in cells:
        if vals[i] == 0.0:
            roots.append(float(xs[i]))
            continue
        try:
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15))
        except ValueError:
            # exact and vectorized forms disagree on the sign right at a root
            roots.append(float(0.5 * (xs[i] + xs[i + 1])))
    if warn and len(roots) > 2:
        warnings.warn(f"{len(roots)} critical points in ({a}, {b}); at most two expected",
                      RuntimeWarning, stacklevel=2)
    return roots


def critical_points(spec, q, l, level, parity=None, subgrid=2048):
    """Critical points of ``g`` inside the block ``(q_{l-1}, q_l)`` of an RSB chain.

    A point ``x`` is critical when
    ``inv_slope(q_{l-1}, x) / inv_slope(x, q_l)`` equals the block ratio
    ``R_l = level^{parity} r2(q_{l-1}, q_l) / F_l``, where ``level`` is the
    last-block ratio ``1 + z_k`` and ``parity = (-1)^{k-l}`` by default.

    Returns
    -------
    list of float
    """
    q = tuple(float(v) for v in q)
    k = len(q) - 1
    if not (1 <= l <= k):
        raise ValidationError(f"block index {l} outside 1..{k}")
    if not level > 0:
        raise ValidationError("level must be positive")
    if parity is None:
        parity = parity_sign(k - l)
    prof = chain_profile(spec, q)
    ratio = level ** parity * r2(spec, q[l - 1], q[l]) / prof.F[l]
    return _ratio_crossings(spec, q[l - 1], q[l], ratio, subgrid, warn=True)


def _critical_values(spec, chain, ratios, subgrid=2048):
    """``[(x*, g(x*)), ...]`` per block, with ``g(x*)`` from the h kernel."""
    out = []
    for l in range(1, len(chain)):
        a, b = chain[l - 1], chain[l]
        vals = []
        for x in _ratio_crossings(spec, a, b, ratios[l - 1], subgrid):
            z = inv_slope(spec, a, x) / inv_slope(spec, a, b)
            vals.append((x, h_value(spec, x, b, z)))
        out.append(tuple(vals))
    return tuple(out)


def _cond2(prof, star):
    lower = prof.Y <= star * (1.0 + COND_REL_TOL)
    upper = star * prof.Z <= 1.0 + COND_REL_TOL
    return lower and upper


def _segment_curvature_ok(spec, a, b):
    """Whether ``xi''^{-1/2}`` is concave on [a, b] (sampled, vectorized)."""
    xs = np.linspace(a, b, CURVATURE_POINTS)
    d2, d3, d4 = spec.d_array(xs, 2), spec.d_array(xs, 3), spec.d_array(xs, 4)
    num = 3.0 * d3 * d3 - 2.0 * d2 * d4
    scale = np.maximum(3.0 * d3 * d3, 2.0 * d2 * d4)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, num / scale, 0.0)
        vals = 0.25 * d2 ** -2.5 * num
    return bool(np.all(rel <= 1e-12)), float(np.nanmax(vals))


# ------------------------------------------------------------------ RSB

@dataclass(frozen=True)
class RsbSolution:
    """Solved k-RSB structure.

    Attributes
    ----------
    k : int
    q : tuple of float
        ``0 = q_0 < ... < q_k = 1``.
    zk : float
        ``R_k - 1``.
    z : tuple of float
        ``z_l = m_l (q_l - q_{l-1}) / delta``.
    delta : float
    m : tuple of float
    tails : tuple of float
        ``phi(q_l)``.
    residuals : tuple of float
    cond2_ok, cond3_ok : bool
    cond3_checked : bool
        False when the search ran with ``k = n`` (condition 3 then holds
        automatically); the values in ``critical`` are still reported.
    critical : tuple
        Per block, pairs ``(x*, g(x*))``.
    measure : ParisiMeasure or None
    reasons : tuple of str
        Why the candidate is unacceptable (empty when acceptable).
    """

    k: int
    q: tuple
    zk: float
    z: tuple
    delta: float
    m: tuple
    tails: tuple
    residuals: tuple
    cond2_ok: bool
    cond3_ok: bool
    cond3_checked: bool
    critical: tuple
    measure: object
    reasons: tuple
    profile: object = field(repr=False, default=None)

    @property
    def acceptable(self):
        return not self.reasons

    def eq8_residual(self, spec):
        qk1 = self.q[-2]
        return self.delta ** 2 * (1 + self.zk) * (spec.d(1.0, 1) - spec.d(qk1, 1)) - (1 - qk1)


def _rsb_from_root(spec, root, check_cond3):
    q = root.chain
    k = len(q) - 1
    phi = root.tails
    delta = phi[-1]
    m = root.densities
    z = tuple((phi[l - 1] - phi[l]) / delta for l in range(1, k + 1))
    reasons = []
    cond2 = _cond2(root.profile, root.star)
    if not cond2:
        reasons.append("condition (2) fails: Y <= 1+z_k <= 1/Z violated")
    crit = _critical_values(spec, q, root.ratios)
    cond3 = all(g >= -GCRIT_TOL for blk in crit for _, g in blk)
    if check_cond3 and not cond3:
        reasons.append("condition (3) fails: g < 0 at a critical point")
    measure = None
    if any(v <= 0.0 for v in m) or any(b <= a for a, b in zip(m, m[1:])):
        reasons.append("densities not strictly increasing")
    else:
        try:
            measure = ParisiMeasure(
                spec, tuple(Block(q[l - 1], q[l], m[l - 1]) for l in range(1, k + 1)),
                (), delta)
        except InvalidMeasure as exc:
            reasons.append(f"invalid measure: {exc}")
    return RsbSolution(k=k, q=q, zk=root.star - 1.0, z=z, delta=delta, m=m, tails=phi,
                       residuals=root.residuals, cond2_ok=cond2, cond3_ok=cond3,
                       cond3_checked=check_cond3, critical=crit, measure=measure,
                       reasons=tuple(reasons), profile=root.profile)


def rsb_candidates(spec, k, ctx=None):
    """Every root of the k-RSB system with its condition flags."""
    if not (1 <= k <= spec.n):
        raise ValidationError(f"k = {k} outside 1..{spec.n}")
    ctx = _context(spec, ctx)
    if k == 1:
        R = block_ratio(spec, 0.0, 1.0)
        chain = (0.0, 1.0)
        raw, prof, star = _normative(spec, "rsb", chain, math.log(R), scaled=False)
        roots = [BlockRoot("rsb", chain, _tails_for(spec, "rsb", chain, star), star,
                           tuple(raw), prof)]
    else:
        roots = ctx.roots("rsb", k)
    return [_rsb_from_root(spec, r, check_cond3=k < spec.n) for r in roots]


def solve_rsb(spec, k, ctx=None):
    """Solve the k-RSB system and return the acceptable solution.

    Raises
    ------
    NoSolution
        No root, or every root fails a condition (reasons attached).
    NonMonotoneWeights
        The only roots found have non-increasing densities.
    """
    cands = rsb_candidates(spec, k, ctx)
    good = [c for c in cands if c.acceptable]
    if good:
        return good[0]
    if not cands:
        raise NoSolution(f"{k}-RSB system has no root at grid resolution",
                         reason="no root")
    reasons = "; ".join(f"q={tuple(round(v, 8) for v in c.q)}: {', '.join(c.reasons)}"
                        for c in cands)
    if all(any("densities" in r for r in c.reasons) for c in cands):
        raise NonMonotoneWeights(f"{k}-RSB roots have non-monotone densities: {reasons}",
                                  reason=reasons)
    raise NoSolution(f"{k}-RSB roots rejected: {reasons}", reason=reasons)


# ------------------------------------------------------------------ FRSB

@dataclass(frozen=True)
class FrsbSolution:
    """Solved FRSB structure for one composition.

    Attributes
    ----------
    composition : tuple of int
    block_chains : tuple of tuple
    F_values : tuple of (float, float, float)
        Per chain: ``F`` at its first and last node and the closing value.
    measure : ParisiMeasure or None
    residuals : tuple of tuple
    linking_residuals : tuple of float
        ``F_first - F_last^{(-1)^{s_j}}`` for the middle chains.
    cond2_ok, cond3_ok, cond4_ok : bool
    reasons : tuple of str
    """

    composition: tuple
    block_chains: tuple
    F_values: tuple
    measure: object
    residuals: tuple
    linking_residuals: tuple
    cond2_ok: bool
    cond3_ok: bool
    cond4_ok: bool
    critical: tuple
    reasons: tuple
    roots: tuple = field(repr=False, default=())

    @property
    def acceptable(self):
        return not self.reasons

    @property
    def f_set(self):
        return composition_f_set(self.composition)


def _validate_composition(spec, composition):
    comp = tuple(int(s) for s in composition)
    if len(comp) < 2:
        raise ValidationError("an FRSB composition needs at least two parts")
    if any(s < 1 for s in comp[:-1]) or comp[-1] < 0:
        raise ValidationError(f"invalid composition {comp}")
    if sum(comp) > spec.n or sum(comp) < 1:
        raise ValidationError(f"composition {comp} sums outside 1..{spec.n}")
    return comp


def _frsb_assemble(spec, comp, roots, check_extra):
    t = len(comp)
    reasons = []
    chains = [r.chain for r in roots]
    if comp[-1] == 0:
        chains.append((1.0,))
    for j in range(t - 1):
        if not chains[j][-1] + MIN_GAP <= chains[j + 1][0]:
            reasons.append(f"chains {j + 1} and {j + 2} overlap or touch")
    cond2 = all(_cond2(r.profile, r.star) for r in roots)
    if not cond2:
        reasons.append("condition (2) fails on a chain")
    crit = tuple(_critical_values(spec, r.chain, r.ratios) for r in roots)
    cond3 = all(g >= -GCRIT_TOL for c in crit for blk in c for _, g in blk)
    if check_extra and not cond3:
        reasons.append("condition (3) fails: g < 0 at a critical point")
    cond4 = True
    if not reasons:
        for j in range(t - 1):
            ok, _ = _segment_curvature_ok(spec, chains[j][-1], chains[j + 1][0])
            cond4 &= ok
        if check_extra and not cond4:
            reasons.append("condition (4) fails: positive curvature on a segment")
    F_values = []
    linking = []
    for r in roots:
        F_values.append((r.profile.F[0], r.profile.F[-1], r.star))
        if r.kind == "middle":
            s = len(r.chain) - 1
            linking.append(r.profile.F[0] - r.profile.F[-1] ** parity_sign(s))
    measure = None
    if not reasons:
        blocks, segs = [], []
        for r in roots:
            x, m = r.chain, r.densities
            blocks.extend(Block(x[l - 1], x[l], m[l - 1]) for l in range(1, len(x)))
        for j in range(t - 1):
            segs.append(Segment(chains[j][-1], chains[j + 1][0]))
        delta = roots[-1].tails[-1] if comp[-1] > 0 else spec.d(1.0, 2) ** -0.5
        if any(b.m <= 0.0 for b in blocks):
            reasons.append("densities not positive")
        else:
            try:
                measure = ParisiMeasure(spec, tuple(blocks), tuple(segs), delta)
            except InvalidMeasure as exc:
                reasons.append(f"densities not monotone: {exc}")
    return FrsbSolution(composition=comp, block_chains=tuple(chains), F_values=tuple(F_values),
                        measure=measure, residuals=tuple(r.residuals for r in roots),
                        linking_residuals=tuple(linking), cond2_ok=cond2, cond3_ok=cond3,
                        cond4_ok=cond4, critical=crit, reasons=tuple(reasons),
                        roots=tuple(roots))


def frsb_candidates(spec, composition, ctx=None):
    """Every combination of chain roots for ``composition`` with flags."""
    comp = _validate_composition(spec, composition)
    ctx = _context(spec, ctx)
    t = len(comp)
    per_block = []
    for j, s in enumerate(comp):
        if j == 0:
            per_block.append(ctx.roots("first", s))
        elif j == t - 1:
            if s > 0:
                per_block.append(ctx.roots("last", s))
        else:
            per_block.append(ctx.roots("middle", s))
    check_extra = sum(comp) < spec.n
    out = []
    for combo in itertools.product(*per_block):
        out.append(_frsb_assemble(spec, comp, list(combo), check_extra))
    return out


def solve_frsb(spec, composition, ctx=None):
    """Solve the chain systems of ``composition`` and assemble the measure.

    Raises
    ------
    NoSolution
        Some chain system has no root, or every combination fails.
    """
    cands = frsb_candidates(spec, composition, ctx)
    good = [c for c in cands if c.acceptable]
    if good:
        return good[0]
    if not cands:
        raise NoSolution(f"composition {tuple(composition)}: a chain system has no root",
                         reason="chain system unsolvable")
    distinct = list(dict.fromkeys(", ".join(c.reasons) for c in cands))
    reasons = "; ".join(distinct)
    if len(cands) > 1:
        reasons = f"{len(cands)} combinations: {reasons}"
    raise NoSolution(f"composition {tuple(composition)} rejected: {reasons}", reason=reasons)
