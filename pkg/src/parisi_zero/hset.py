"""Membership in the chain sets H^s, their extremal points, and chain ordering.

A chain ``(x_0, ..., x_s)`` is a member of ``H^s`` when, for every block
``l = 1..s``, both kernel inequalities hold::

    (-1)^{s-l} h(x_{l-1}, x_l, Z^{-(-1)^{s-l}} r2(x_{l-1}, x_l) / F_l) >= 0
    (-1)^{s-l} h(x_{l-1}, x_l, Y^{(-1)^{s-l}}  r2(x_{l-1}, x_l) / F_l) <= 0

Margins are reported sign-adjusted so that nonnegative means satisfied.

Extremal points are searched among the roots of the block systems of
:mod:`parisi_zero.solver` (the chains on which the ``Y`` inequalities are
active), each re-checked here for membership.  When no root qualifies, a grid
scan over increasing chains either certifies emptiness at its resolution or
supplies a member that is refined along the objective coordinate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChainNotStrict, NotFound, ValidationError
from .kernels import Chain, chain_profile, h_value, parity_sign, r2
from .solver import SolverContext, _context, _node_grid, _segment_curvature_ok

__all__ = [
    "KappaReport", "condition_kappa", "kappa_margins", "extremal_point",
    "ExtremalPoint", "find_extremal", "tilde_chain", "TildeVerdict",
    "MEMBERSHIP_TOL",
]

MEMBERSHIP_TOL = 1e-10
GRID_BUDGET = 6000
REFINE_STEPS = 60

_ROLE_KIND = {"first": "first", "last": "last", "none": "middle", "both": "rsb"}


@dataclass(frozen=True)
class KappaReport:
    """Outcome of the membership test for one chain.

    Attributes
    ----------
    chain : tuple of float
    satisfied : bool
    margins : tuple of (float, float)
        Per block ``l = 1..s``: the ``Z`` margin and the ``Y`` margin.
    profile : KernelProfile or None
        ``None`` when the chain is not strictly increasing.
    reason : str or None
    """

    chain: tuple
    satisfied: bool
    margins: tuple
    profile: object
    reason: str = None

    @property
    def min_margin(self):
        return min((min(p) for p in self.margins), default=-math.inf)

    def to_dict(self):
        out = {"chain": list(self.chain), "satisfied": self.satisfied,
               "margins": [{"l": l, "Z": mz, "Y": my}
                           for l, (mz, my) in enumerate(self.margins, start=1)]}
        if self.profile is not None:
            out["Z"] = self.profile.Z
            out["Y"] = self.profile.Y
            out["Z_source"] = "".join(map(str, self.profile.Z_source))
            out["Y_source"] = "".join(map(str, self.profile.Y_source))
        if self.reason:
            out["reason"] = self.reason
        return out


def _power(value, sign):
    if sign > 0:
        return value
    return math.inf if value == 0.0 else 1.0 / value


def kappa_margins(spec, chain, profile=None):
    """Sign-adjusted ``(Z, Y)`` margins of a strictly increasing chain."""
    x = tuple(chain)
    prof = profile if profile is not None else chain_profile(spec, x)
    s = len(x) - 1
    out = []
    for l in range(1, s + 1):
        sgn = parity_sign(s - l)
        base = prof.F[l]
        ratio = r2(spec, x[l - 1], x[l]) / base
        z_arg = _power(prof.Z, -sgn) * ratio
        y_arg = _power(prof.Y, sgn) * ratio
        mz = sgn * h_value(spec, x[l - 1], x[l], z_arg)
        my = -sgn * h_value(spec, x[l - 1], x[l], y_arg)
        out.append((mz, my))
    return tuple(out), prof


def condition_kappa(spec, chain, tol=MEMBERSHIP_TOL):
    """Evaluate the membership inequalities of ``chain`` in ``H^s``.

    A chain that is not strictly increasing is reported as unsatisfied with
    reason ``"ChainNotStrict"``; no exception is raised for it.

    Returns
    -------
    KappaReport
    """
    try:
        ch = chain if isinstance(chain, Chain) else Chain(tuple(float(v) for v in chain))
    except ChainNotStrict as exc:
        return KappaReport(tuple(chain), False, (), None, f"ChainNotStrict: {exc}")
    x = ch.values
    if ch.s < 1:
        raise ValidationError("a chain needs at least two points")
    if not ch.is_strict():
        return KappaReport(x, False, (), None, "ChainNotStrict: coincident points")
    margins, prof = kappa_margins(spec, x)
    ok = all(m >= -tol for pair in margins for m in pair)
    reason = None
    if not ok:
        l, which = min(((l, w) for l in range(len(margins)) for w in (0, 1)),
                       key=lambda t: margins[t[0]][t[1]])
        reason = f"{'ZY'[which]} margin of block {l + 1} is {margins[l][which]:.3e}"
    return KappaReport(x, ok, margins, prof, reason)


# ------------------------------------------------------------------ extremal points

@dataclass(frozen=True)
class ExtremalPoint:
    """An extremal chain with the method that produced it."""

    chain: Chain
    method: str
    report: KappaReport
    candidates: int


def _free_to_chain(role, free):
    free = tuple(free)
    if role == "first":
        return (0.0,) + free
    if role == "last":
        return free + (1.0,)
    if role == "both":
        return (0.0,) + free + (1.0,)
    return free


def _objective_key(objective):
    if objective == "max_last":
        return lambda ch: ch[-1]
    if objective == "min_first":
        return lambda ch: -ch[0]
    raise ValidationError(f"unknown objective {objective!r}")


def _grid_members(spec, s, role, budget, tol):
    n_free = {"first": s, "last": s, "none": s + 1, "both": s - 1}[role]
    if n_free == 0:
        ch = _free_to_chain(role, ())
        rep = condition_kappa(spec, ch, tol)
        return ([ch] if rep.satisfied else []), 0.0
    M = 8
    while math.comb(M + 1, n_free) <= budget:
        M += 1
    pts = _node_grid(M)[1:-1]
    members = []
    for free in itertools.combinations(pts, n_free):
        ch = _free_to_chain(role, free)
        if condition_kappa(spec, ch, tol).satisfied:
            members.append(ch)
    resolution = float(np.max(np.diff(_node_grid(M))))
    return members, resolution


def _refine(spec, chain, objective, tol):
    """Push the objective coordinate of a member chain to the set boundary."""
    ch = list(chain)
    idx = len(ch) - 1 if objective == "max_last" else 0
    inside = ch[idx]
    other = ch[idx - 1] if objective == "max_last" else ch[1]
    outside = 1.0 if objective == "max_last" else 0.0
    trial = list(ch)
    trial[idx] = outside
    if outside != other and condition_kappa(spec, trial, tol).satisfied:
        return tuple(trial)
    for _ in range(REFINE_STEPS):
        mid = 0.5 * (inside + outside)
        trial[idx] = mid
        if condition_kappa(spec, trial, tol).satisfied:
            inside = mid
        else:
            outside = mid
    trial[idx] = inside
    return tuple(trial)


def find_extremal(spec, s, fixed="first", objective="max_last", ctx=None,
                  tol=MEMBERSHIP_TOL, grid_budget=GRID_BUDGET):
    """Extremal chain of ``H^s`` under an endpoint pin, with provenance.

    Parameters
    ----------
    fixed : {"first", "last", "none", "both"}
        ``first`` pins ``x_0 = 0``, ``last`` pins ``x_s = 1``, ``both`` pins
        both (then any member is returned).
    objective : {"max_last", "min_first"}

    Returns
    -------
    ExtremalPoint

    Raises
    ------
    NotFound
        The pinned set is empty at grid resolution.
    """
    if s < 1:
        raise ValidationError("s must be at least 1")
    if fixed not in _ROLE_KIND:
        raise ValidationError(f"unknown pin {fixed!r}")
    key = _objective_key(objective)
    if fixed == "both" and s == 1:
        roots = [(0.0, 1.0)]
    else:
        ctx = _context(spec, ctx)
        roots = [r.chain for r in ctx.roots(_ROLE_KIND[fixed], s)]
    members = []
    for ch in roots:
        rep = condition_kappa(spec, ch, tol)
        if rep.satisfied:
            members.append(rep)
    if members:
        best = max(members, key=lambda r: key(r.chain))
        return ExtremalPoint(Chain(best.chain), "root", best, len(roots))
    grid, resolution = _grid_members(spec, s, fixed, grid_budget, tol)
    if not grid:
        raise NotFound(f"H^{s} with pin {fixed!r} is empty at grid resolution {resolution:.2e}",
                       reason="empty", details={"resolution": resolution, "roots": len(roots)})
    best = max(grid, key=key)
    if fixed != "both":
        best = _refine(spec, best, objective, tol)
    return ExtremalPoint(Chain(tuple(best)), "grid", condition_kappa(spec, best, tol),
                         len(roots))


def extremal_point(spec, s, fixed="first", objective="max_last", ctx=None,
                   tol=MEMBERSHIP_TOL):
    """Extremal chain of ``H^s`` under an endpoint pin.

    See :func:`find_extremal`; this returns only the chain.
    """
    return find_extremal(spec, s, fixed, objective, ctx, tol).chain


# ------------------------------------------------------------------ chain relation

def _concave_gap(spec, a, b):
    return b > a and _segment_curvature_ok(spec, a, b)[0]


def _middle_members(spec, s, ctx, tol):
    """Doubly active member chains of an unpinned set, grid scan as fallback."""
    roots = [r.chain for r in _context(spec, ctx).roots("middle", s)]
    members = [ch for ch in roots if condition_kappa(spec, ch, tol).satisfied]
    if not members:
        members, _ = _grid_members(spec, s, "none", GRID_BUDGET, tol)
    return sorted(members, key=lambda ch: (ch[-1], ch[0]))


@dataclass(frozen=True)
class TildeVerdict:
    """Whether a sequence of H-sets chains, with the extremal witnesses.

    Attributes
    ----------
    holds : bool
    composition : tuple of int
    witnesses : tuple
        Per set, ``(min_first_chain, max_last_chain)``.  Every set is
        represented by one extremal chain, so both entries coincide.
        ``None`` for sets that were not reached.
    reason : str or None
    """

    composition: tuple
    holds: bool
    witnesses: tuple
    reason: str = None

    def to_dict(self):
        wit = []
        for w in self.witnesses:
            wit.append(None if w is None else [list(c.values) for c in w])
        return {"composition": list(self.composition), "holds": self.holds,
                "witnesses": wit, "reason": self.reason}


def tilde_chain(spec, composition, ctx=None, tol=MEMBERSHIP_TOL):
    """Test ``H^{s_1} ~< H^{s_2} ~< ... ~< H^{s_t}``.

    The first set has its first coordinate pinned to 0 and the last set its
    last coordinate pinned to 1.  A single part ``(s,)`` pins both ends.  A
    trailing part 0 stands for the one-point set ``{1}``.  Sets in between
    are represented by their doubly active chains, searched by backtracking
    in order of their last coordinate.  Every
    gap between consecutive sets must be a concave stretch of
    ``xi''^{-1/2}``, the property a segment of the Parisi measure has.

    Returns
    -------
    TildeVerdict
        ``NotFound`` from any extremal search is reported as ``holds=False``.
    """
    comp = tuple(int(v) for v in composition)
    if not comp or any(v < 1 for v in comp[:-1]) or comp[-1] < 0 or (len(comp) == 1 and comp[0] < 1):
        raise ValidationError(f"invalid composition {comp}")
    if sum(comp) > spec.n:
        raise ValidationError(f"composition {comp} exceeds n = {spec.n}")
    ctx = _context(spec, ctx) if ctx is not None else SolverContext(spec)
    t = len(comp)
    if t == 1:
        try:
            ep = find_extremal(spec, comp[0], "both", "max_last", ctx, tol)
        except NotFound as exc:
            return TildeVerdict(comp, False, (None,), str(exc))
        return TildeVerdict(comp, True, ((ep.chain, ep.chain),))
    options = []
    for j, s in enumerate(comp):
        try:
            if j == t - 1 and s == 0:
                options.append([(1.0,)])
            elif j == 0:
                options.append([find_extremal(spec, s, "first", "max_last", ctx, tol).chain.values])
            elif j == t - 1:
                options.append([find_extremal(spec, s, "last", "min_first", ctx, tol).chain.values])
            else:
                options.append(_middle_members(spec, s, ctx, tol))
        except NotFound as exc:
            return TildeVerdict(comp, False, (None,) * t, f"set {j + 1}: {exc}")
        if not options[-1]:
            return TildeVerdict(comp, False, (None,) * t, f"set {j + 1} is empty")

    failure = []

    def extend(path):
        j = len(path)
        if j == t:
            return path
        for ch in options[j]:
            if path:
                prev = path[-1][-1]
                if not prev <= ch[0]:
                    failure.append(f"max last of set {j} ({prev:.10g}) exceeds "
                                   f"min first of set {j + 1} ({ch[0]:.10g})")
                    continue
                if not _concave_gap(spec, prev, ch[0]):
                    failure.append(f"gap ({prev:.10g}, {ch[0]:.10g}) after set {j} "
                                   "is not a concave stretch of xi''^(-1/2)")
                    continue
            found = extend(path + [ch])
            if found is not None:
                return found
        return None

    path = extend([])
    if path is None:
        return TildeVerdict(comp, False, (None,) * t, failure[0] if failure else "no ordering")
    witnesses = tuple((Chain(ch), Chain(ch)) for ch in path)
    return TildeVerdict(comp, True, witnesses)
