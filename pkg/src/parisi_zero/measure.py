"""Piecewise measures ``gamma(x) dx + delta * (point mass at 1)``.

The density ``gamma`` is a sequence of pieces tiling [0, 1): constant blocks
``(a, b, m)`` and smooth segments ``(a, b)`` on which
``gamma = omega = xi''' / (2 xi''^{3/2})``.  Most quantities are expressed
through the tail function ``phi(x) = delta + int_x^1 gamma``:

* on a block, ``phi`` is affine with slope ``-m``;
* on a segment, ``phi(x) = phi(b) + xi''(x)^{-1/2} - xi''(b)^{-1/2}``.

Optimality is tested through ``gbar(u) = xi'(u) - int_0^u phi^{-2}`` and
``g(u) = int_u^1 gbar``.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, InvalidMeasure
from .mixture import MixtureSpec, make_mixture
from .quadrature import gauss_legendre, gl_cumulative

__all__ = [
    "Block", "Segment", "ParisiMeasure", "VerificationReport", "rs_measure",
    "nu_tail", "cs_energy", "g_functions", "verify_parisi", "omega",
    "measure_to_dict", "measure_from_dict", "energy_lower_bound",
]

MONOTONE_TOL = 1e-9      # relative slack when comparing neighbouring densities
EXACT_SEGMENT_TOL = 1e-14
SUPPORT_JUMP = 1e-12


@dataclass(frozen=True)
class Block:
    a: float
    b: float
    m: float


@dataclass(frozen=True)
class Segment:
    a: float
    b: float


def omega(spec, x):
    """Segment density ``xi'''(x) / (2 xi''(x)^{3/2})`` (vectorized)."""
    d2 = spec.d_array(x, 2)
    return 0.5 * spec.d_array(x, 3) * d2 ** -1.5


def _inv_sqrt_d2(spec, x):
    return spec.d(x, 2) ** -0.5


@dataclass(frozen=True)
class ParisiMeasure:
    """A measure of the admissible class.

    Parameters
    ----------
    spec : MixtureSpec
        Segment densities depend on the mixture.
    blocks : tuple of Block
    segments : tuple of Segment
    delta : float
        Mass at 1.
    """

    spec: MixtureSpec
    blocks: tuple
    segments: tuple
    delta: float
    pieces: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, Block) else Block(*map(float, b))
                       for b in self.blocks)
        segs = tuple(s if isinstance(s, Segment) else Segment(*map(float, s))
                     for s in self.segments)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "delta", float(self.delta))
        pieces = sorted(blocks + segs, key=lambda p: p.a)
        object.__setattr__(self, "pieces", tuple(pieces))
        self._validate()

    # ------------------------------------------------------------ checks
    def _validate(self):
        if not (self.delta > 0.0) or not math.isfinite(self.delta):
            raise InvalidMeasure(f"delta = {self.delta} must be positive")
        if not self.pieces:
            raise InvalidMeasure("measure has no pieces")
        if self.pieces[0].a != 0.0:
            raise InvalidMeasure("first piece must start at 0")
        if self.pieces[-1].b != 1.0:
            raise InvalidMeasure("last piece must end at 1")
        for p, q in zip(self.pieces, self.pieces[1:]):
            if p.b != q.a:
                raise InvalidMeasure(f"pieces [{p.a}, {p.b}) and [{q.a}, {q.b}) do not abut")
        for p in self.pieces:
            if not (p.b > p.a):
                raise InvalidMeasure(f"empty piece [{p.a}, {p.b})")
            if isinstance(p, Block) and not (p.m >= 0.0 and math.isfinite(p.m)):
                raise InvalidMeasure(f"block density {p.m} must be nonnegative")
            if isinstance(p, Segment) and p.a <= 0.0:
                raise InvalidMeasure("a segment cannot start at 0 (xi''(0) = 0)")
        prev = 0.0
        for p in self.pieces:
            lo, hi = self._density_ends(p)
            if lo < prev - MONOTONE_TOL * max(1.0, prev):
                raise InvalidMeasure(
                    f"density decreases at {p.a}: {prev:.12g} -> {lo:.12g}")
            if isinstance(p, Segment):
                xs = np.linspace(p.a, p.b, 65)
                w = omega(self.spec, xs)
                if np.any(np.diff(w) < -MONOTONE_TOL * np.abs(w[1:])):
                    raise InvalidMeasure(f"segment density decreases inside [{p.a}, {p.b})")
            prev = hi

    def _density_ends(self, p):
        if isinstance(p, Block):
            return p.m, p.m
        w = omega(self.spec, np.array([p.a, p.b]))
        return float(w[0]), float(w[1])

    def junction_jumps(self):
        """Density jumps at interior piece boundaries (diagnostic only)."""
        out = []
        for p, q in zip(self.pieces, self.pieces[1:]):
            out.append((p.b, self._density_ends(q)[0] - self._density_ends(p)[1]))
        return out

    # ------------------------------------------------------------ knots
    @cached_property
    def knots(self):
        """Piece boundaries ``0 = x_0 < ... < x_P = 1``."""
        return np.array([p.a for p in self.pieces] + [1.0])

    @cached_property
    def knot_tails(self):
        """``phi`` at every knot, accumulated from the right."""
        tails = [self.delta]
        for p in reversed(self.pieces):
            tails.append(tails[-1] + self._piece_mass(p))
        return np.array(tails[::-1])

    def _piece_mass(self, p):
        if isinstance(p, Block):
            return p.m * (p.b - p.a)
        return _inv_sqrt_d2(self.spec, p.a) - _inv_sqrt_d2(self.spec, p.b)

    def piece_index(self, x):
        """Index of the piece containing ``x`` (the last piece for x = 1)."""
        i = bisect_right(self.knots, x) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def segment_offset(self, i):
        """``phi(b) - xi''(b)^{-1/2}`` for segment ``i``; zero when exact."""
        p = self.pieces[i]
        phib = self.knot_tails[i + 1]
        c = phib - _inv_sqrt_d2(self.spec, p.b)
        return 0.0 if abs(c) <= EXACT_SEGMENT_TOL * phib else c

    def tail_array(self, x):
        """Vectorized ``phi``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.pieces) - 1)
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if not np.any(sel):
                continue
            phib = self.knot_tails[i + 1]
            if isinstance(p, Block):
                out[sel] = phib + p.m * (p.b - x[sel])
            else:
                c = self.segment_offset(i)
                out[sel] = c + self.spec.d_array(x[sel], 2) ** -0.5
        return out

    # ------------------------------------------------------------ support
    def support_points(self):
        """Knots where the density jumps up, plus 1 (the terminal atom)."""
        pts = []
        prev = 0.0
        for p in self.pieces:
            lo, hi = self._density_ends(p)
            if lo - prev > SUPPORT_JUMP or isinstance(p, Segment):
                pts.append(p.a)
            prev = hi
        pts.append(1.0)
        return pts

    def isolated_support_points(self):
        """Support points not lying inside or on the boundary of a segment."""
        segs = [(s.a, s.b) for s in self.segments]
        return [x for x in self.support_points()
                if not any(a <= x <= b for a, b in segs)]


def rs_measure(spec):
    """Replica-symmetric candidate: no density, ``delta = xi'(1)^{-1/2}``."""
    return ParisiMeasure(spec, (Block(0.0, 1.0, 0.0),), (), spec.d(1.0, 1) ** -0.5)


def nu_tail(measure, x):
    """Tail mass ``nu((x, 1])`` of the measure."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x = {x} outside [0, 1]")
    return float(measure.tail_array(np.array([float(x)]))[0])


# ------------------------------------------------------------------ energy

def cs_energy(spec, measure):
    """Crisanti-Sommers value ``(int xi' dnu + int_0^1 dx / phi(x)) / 2``."""
    _check_spec(spec, measure)
    total = measure.delta * spec.d(1.0, 1)
    for i, p in enumerate(measure.pieces):
        phia, phib = measure.knot_tails[i], measure.knot_tails[i + 1]
        length = p.b - p.a
        if isinstance(p, Block):
            total += p.m * (spec.d(p.b) - spec.d(p.a))
            ratio = p.m * length / phib
            if ratio > 1e-6:
                total += math.log1p(ratio) / p.m
            else:
                # log1p(r) / m to third order; also exact for m = 0 and safe for subnormal m
                total += length / phib * (1.0 - ratio / 2.0 + ratio * ratio / 3.0)
        else:
            c = measure.segment_offset(i)
            total += gauss_legendre(lambda t: omega(spec, t) * spec.d_array(t, 1), p.a, p.b)
            total += gauss_legendre(lambda t: 1.0 / (c + spec.d_array(t, 2) ** -0.5), p.a, p.b)
    return 0.5 * total


def energy_lower_bound(spec):
    """``int_0^1 sqrt(xi''(t)) dt``, a lower bound for every admissible energy."""
    return gauss_legendre(lambda t: np.sqrt(spec.d_array(t, 2)), 0.0, 1.0, n=128)


def _check_spec(spec, measure):
    if spec != measure.spec:
        raise InvalidMeasure("measure was built for a different mixture")


# ------------------------------------------------------------------ g, gbar

def _series_kernel(y, nterms=30):
    # sum_{k>=0} (-y)^k / (k + 1) and sum_{k>=0} (-y)^k / (k + 2)
    s0 = np.zeros_like(y)
    s1 = np.zeros_like(y)
    term = np.ones_like(y)
    for k in range(nterms):
        s0 += term / (k + 1)
        s1 += term / (k + 2)
        term = term * (-y)
    return s0, s1


def _block_tail_moments(B, m, T):
    """``int_0^T dtau/(B + m tau)`` and ``int_0^T tau dtau/(B + m tau)``."""
    T = np.asarray(T, dtype=float)
    if m == 0.0:
        return T / B, 0.5 * T * T / B
    eps = m / B
    y = eps * T
    small = y < 0.05
    s0, s1 = _series_kernel(np.where(small, y, 0.0))
    j0_series = T * s0 / B
    j1_series = T * T * s1 / B
    ysafe = np.where(small, 1.0, y)
    l1p = np.log1p(ysafe)
    j0_direct = l1p / m
    j1_direct = (T - l1p / eps) / m
    return np.where(small, j0_series, j0_direct), np.where(small, j1_series, j1_direct)


class _GProfile:
    """Knot values of ``gbar`` and ``g`` plus per-piece evaluators."""

    def __init__(self, spec, measure):
        self.spec, self.measure = spec, measure
        pcs = measure.pieces
        tails = measure.knot_tails
        gbar = [0.0]            # xi'(0) = 0
        for i, p in enumerate(pcs):
            gbar.append(gbar[-1] + spec.d(p.b, 1) - spec.d(p.a, 1) - self._inv_sq_integral(i))
        self.gbar = np.array(gbar)
        g = [0.0]
        for i in reversed(range(len(pcs))):
            g.append(g[-1] + float(self._gbar_integral(i, np.array([pcs[i].a]))[0]))
        self.g = np.array(g[::-1])
        self.tails = tails

    def _inv_sq_integral(self, i):
        p = self.measure.pieces[i]
        tails = self.measure.knot_tails
        if isinstance(p, Block):
            return (p.b - p.a) / (tails[i] * tails[i + 1])
        c = self.measure.segment_offset(i)
        if c == 0.0:
            return self.spec.d(p.b, 1) - self.spec.d(p.a, 1)
        return gauss_legendre(lambda t: (c + self.spec.d_array(t, 2) ** -0.5) ** -2, p.a, p.b)

    def _gbar_integral(self, i, u):
        """``int_u^b gbar`` for ``u`` inside piece ``i`` (vectorized)."""
        spec = self.spec
        p = self.measure.pieces[i]
        tails = self.measure.knot_tails
        ga = self.gbar[i]
        d1a = spec.d(p.a, 1)
        lin = (ga - d1a) * (p.b - u) + spec.d(p.b) - spec.d_array(u)
        if isinstance(p, Block):
            A, B = tails[i], tails[i + 1]
            T = p.b - u
            j0, j1 = _block_tail_moments(B, p.m, T)
            return lin - ((p.b - p.a) * j0 - j1) / A
        c = self.measure.segment_offset(i)
        if c == 0.0:
            return ga * (p.b - u)
        f = lambda t: (c + spec.d_array(t, 2) ** -0.5) ** -2
        inner = gl_cumulative(f, p.a, u)
        fb = lambda t: (p.b - t) * f(t)
        outer = -gl_cumulative(fb, p.b, u)
        return lin - ((p.b - u) * inner + outer)

    def _gbar_at(self, i, u):
        spec = self.spec
        p = self.measure.pieces[i]
        tails = self.measure.knot_tails
        base = self.gbar[i] + spec.d_array(u, 1) - spec.d(p.a, 1)
        if isinstance(p, Block):
            phi = tails[i + 1] + p.m * (p.b - u)
            return base - (u - p.a) / (tails[i] * phi)
        c = self.measure.segment_offset(i)
        if c == 0.0:
            return np.full_like(u, self.gbar[i])
        f = lambda t: (c + spec.d_array(t, 2) ** -0.5) ** -2
        return base - gl_cumulative(f, p.a, u)

    def evaluate(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        gb = np.empty_like(u)
        g = np.empty_like(u)
        idx = np.clip(np.searchsorted(self.measure.knots, u, side="right") - 1,
                      0, len(self.measure.pieces) - 1)
        for i in np.unique(idx):
            sel = idx == i
            gb[sel] = self._gbar_at(i, u[sel])
            g[sel] = self.g[i + 1] + self._gbar_integral(i, u[sel])
        return gb, g


def g_functions(spec, measure, u):
    """Return ``(gbar(u), g(u))``; ``u`` may be a scalar or an array."""
    _check_spec(spec, measure)
    arr = np.asarray(u, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"u outside [0, 1]")
    gb, g = _GProfile(spec, measure).evaluate(arr)
    if arr.ndim == 0:
        return float(gb[0]), float(g[0])
    return gb.reshape(arr.shape), g.reshape(arr.shape)


# ------------------------------------------------------------------ verification

@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the optimality test.

    Attributes
    ----------
    cond_i_residual : float
        ``xi'(1) - int_0^1 phi^{-2}``.
    min_g : float
        Minimum of ``g`` over the check grid.
    g_at_support : float
        Largest ``|g|`` over the support of the density measure.
    passed : bool
    grid_size : int
    argmin_g : float
        Where ``min_g`` was attained.
    """

    cond_i_residual: float
    min_g: float
    g_at_support: float
    passed: bool
    grid_size: int
    argmin_g: float = float("nan")
    tolerances: tuple = (1e-8, 1e-8, 1e-8)

    def to_dict(self):
        return {
            "cond_i_residual": self.cond_i_residual,
            "min_g": self.min_g,
            "argmin_g": self.argmin_g,
            "g_at_support": self.g_at_support,
            "passed": self.passed,
            "grid_size": self.grid_size,
            "tolerances": {"tol_i": self.tolerances[0], "tol_g": self.tolerances[1],
                           "tol_s": self.tolerances[2]},
        }


def _check_grid(measure, grid_size):
    pts = [np.linspace(0.0, 1.0, grid_size)]
    offsets = 10.0 ** -np.arange(3, 10)
    for x in measure.knots:
        pts.append(np.clip(np.concatenate([x - offsets, x + offsets]), 0.0, 1.0))
    for p in measure.pieces:
        pts.append(np.linspace(p.a, p.b, 65))
    return np.unique(np.concatenate(pts))


def _support_grid(measure):
    pts = list(measure.support_points())
    for s in measure.segments:
        pts.extend(np.linspace(s.a, s.b, 17))
    return np.unique(np.array(pts))


def verify_parisi(spec, measure, grid_size=4096, tol_i=1e-8, tol_g=1e-8, tol_s=1e-8):
    """Check the three optimality conditions.

    1. ``xi'(1) = int_0^1 phi^{-2}`` (residual reported);
    2. ``g >= 0`` on a uniform grid refined around every knot;
    3. ``g = 0`` on the support of the density measure: knots where the
       density jumps up, and a 17-point subgrid of every segment.

    Returns
    -------
    VerificationReport
    """
    if grid_size < 256:
        raise ValueError("grid_size must be at least 256")
    _check_spec(spec, measure)
    prof = _GProfile(spec, measure)
    cond_i = float(prof.gbar[-1])
    grid = _check_grid(measure, grid_size)
    _, g = prof.evaluate(grid)
    k = int(np.argmin(g))
    _, gs = prof.evaluate(_support_grid(measure))
    g_sup = float(np.max(np.abs(gs)))
    passed = abs(cond_i) <= tol_i and g[k] >= -tol_g and g_sup <= tol_s
    return VerificationReport(cond_i_residual=cond_i, min_g=float(g[k]),
                              g_at_support=g_sup, passed=bool(passed),
                              grid_size=grid_size, argmin_g=float(grid[k]),
                              tolerances=(tol_i, tol_g, tol_s))


# ------------------------------------------------------------------ JSON

def measure_to_dict(measure):
    spec = measure.spec
    return {
        "exponents": list(spec.exponents),
        "weights": list(spec.weights),
        "delta": measure.delta,
        "blocks": [{"a": b.a, "b": b.b, "m": b.m} for b in measure.blocks],
        "segments": [{"a": s.a, "b": s.b} for s in measure.segments],
    }


def measure_from_dict(data, diagnostic=None):
    """Inverse of :func:`measure_to_dict`.

    Weights are renormalized when their sum is off by less than 1e-10, which
    absorbs rounding in printed output.
    """
    try:
        exps = [int(p) for p in data["exponents"]]
        wts = [float(w) for w in data["weights"]]
        total = math.fsum(wts)
        if abs(total - 1.0) < 1e-10:
            wts = [w / total for w in wts]
            wts[-1] = 1.0 - math.fsum(wts[:-1])
        if diagnostic is None:
            diagnostic = min(exps) == 2
        spec = make_mixture(exps, wts, diagnostic=diagnostic)
        blocks = tuple(Block(float(b["a"]), float(b["b"]), float(b["m"]))
                       for b in data.get("blocks", []))
        segs = tuple(Segment(float(s["a"]), float(s["b"]))
                     for s in data.get("segments", []))
        return ParisiMeasure(spec, blocks, segs, float(data["delta"]))
    except (KeyError, TypeError) as exc:
        raise InvalidMeasure(f"malformed measure record: {exc}") from None
