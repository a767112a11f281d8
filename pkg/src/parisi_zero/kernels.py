"""Scalar kernel functions and chain functionals.

Notation used throughout the package:

* ``bracket(z) = 1/(z-1) - z log z / (z-1)^2``, increasing from -1 (z -> 0)
  to 0 (z -> inf), equal to -1/2 at z = 1.
* ``h(x, y, z) = xi(y) - xi(x) - xi'(x)(y-x) + (xi'(y)-xi'(x))(y-x) bracket(z)``.
* ``inv_slope(a, b) = (b-a) / (xi'(b)-xi'(a))``, the reciprocal secant slope
  of xi'.  Both ratio kernels reduce to it:
  ``r2(x, y) = xi''(y) inv_slope(x, y)`` and
  ``r1(x, y, z) = inv_slope(x, z) / inv_slope(y, z)``.

A chain is a tuple ``(x_0, ..., x_s)``; the chain functionals ``F``, ``A``,
``Z`` and ``Y`` are computed by :func:`chain_profile`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (ArgumentOrder, ChainNotStrict, DegenerateArguments,
                     DomainError, NonpositiveZ, ValidationError)

__all__ = [
    "LIMIT_TAGS", "bracket", "bracket_array", "inverse_bracket",
    "inverse_bracket_array", "h", "h_value", "inv_slope", "r1", "r2",
    "block_ratio", "Chain", "KernelProfile", "chain_profile", "hF", "hbar",
    "HBAR_NAMES", "parity_sign",
]

LIMIT_TAGS = {"zero": 0.0, "one": 1.0, "infinity": math.inf}
SERIES_RADIUS = 1e-4
CLOSE_POINTS = 1e-6
_T_MAX = 40.0          # |log z| beyond which bracket() is -1 or 0 to double precision


def parity_sign(n):
    """``(-1)**n`` for an integer ``n``."""
    return -1 if n % 2 else 1


# ---------------------------------------------------------------- bracket

def bracket(z):
    """Scalar ``1/(z-1) - z log z/(z-1)^2`` with its limits at 0, 1 and inf."""
    if z == 0.0:
        return -1.0
    if math.isinf(z):
        return 0.0
    e = z - 1.0
    if abs(e) < SERIES_RADIUS:
        # -1/2 + e/6 - e^2/12 + e^3/20 - e^4/30; the general term of order j
        # is (-1)^(j+1) / ((j+1)(j+2))
        return -0.5 + e * (1 / 6 + e * (-1 / 12 + e * (1 / 20 + e * (-1 / 30))))
    # grouped so that neither factor overflows for huge finite z
    return 1.0 / e - (z / e) * (math.log(z) / e)


def bracket_array(z):
    """Vectorized :func:`bracket` for positive finite arrays."""
    z = np.asarray(z, dtype=float)
    e = z - 1.0
    near = np.abs(e) < SERIES_RADIUS
    safe_e = np.where(near, 1.0, e)
    direct = 1.0 / safe_e - (z / safe_e) * (np.log(np.where(z > 0, z, 1.0)) / safe_e)
    en = np.where(near, e, 0.0)
    series = -0.5 + en * (1 / 6 + en * (-1 / 12 + en * (1 / 20 + en * (-1 / 30))))
    out = np.where(near, series, direct)
    return np.where(z == 0.0, -1.0, out)


def inverse_bracket(beta):
    """Solve ``bracket(z) = beta`` for ``z`` given ``beta`` in (-1, 0)."""
    lo = bracket(math.exp(-_T_MAX))
    hi = bracket(math.exp(_T_MAX))
    if beta <= lo:
        return 0.0
    if beta >= hi:
        return math.inf
    t = brentq(lambda s: bracket(math.exp(s)) - beta, -_T_MAX, _T_MAX,
               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(t)


def inverse_bracket_array(beta, iters=70):
    """Vectorized :func:`inverse_bracket` (bisection in log z)."""
    beta = np.asarray(beta, dtype=float)
    lo = np.full(beta.shape, -_T_MAX)
    hi = np.full(beta.shape, _T_MAX)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = bracket_array(np.exp(mid)) < beta
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(0.5 * (lo + hi))


# ---------------------------------------------------------------- h kernel

def _coerce_z(z):
    if isinstance(z, str):
        try:
            return LIMIT_TAGS[z]
        except KeyError:
            raise ValidationError(f"unknown limit tag {z!r}") from None
    z = float(z)
    if math.isnan(z) or z <= 0.0:
        raise NonpositiveZ(f"z = {z} must be positive or a limit tag")
    return z


def _check_unit(*xs):
    for x in xs:
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"argument {x!r} outside [0, 1]")


def h_value(spec, x, y, z):
    """Unchecked ``h``; ``z`` may be 0.0 or inf, meaning the one-sided limits."""
    dx = y - x
    d1x = spec.d(x, 1)
    base = spec.d(y) - spec.d(x) - d1x * dx
    return base + (spec.d(y, 1) - d1x) * dx * bracket(z)


def h(spec, x, y, z):
    """Kernel ``h(x, y, z)``.

    Parameters
    ----------
    spec : MixtureSpec
    x, y : float
        Points of [0, 1], either order.
    z : float or {'zero', 'one', 'infinity'}
        Positive number or a limit tag.

    Returns
    -------
    float
    """
    _check_unit(x, y)
    return h_value(spec, float(x), float(y), _coerce_z(z))


# ---------------------------------------------------------------- ratios

def inv_slope(spec, a, b):
    """``(b - a) / (xi'(b) - xi'(a))``, symmetric, ``1/xi''(a)`` when a == b."""
    if a == b:
        d2 = spec.d(a, 2)
        return math.inf if d2 == 0.0 else 1.0 / d2
    d = b - a
    if abs(d) < CLOSE_POINTS:
        mid = 0.5 * (a + b)
        sec = spec.d(mid, 2) + spec.d(mid, 4) * d * d / 24.0
        return math.inf if sec == 0.0 else 1.0 / sec
    return d / (spec.d(b, 1) - spec.d(a, 1))


def r2(spec, x, y):
    """``xi''(y)(y - x) / (xi'(y) - xi'(x))``, equal to 1 on the diagonal."""
    _check_unit(x, y)
    d2 = spec.d(y, 2)
    if x == y:
        if d2 == 0.0:
            raise DegenerateArguments("r2(x, x) with xi''(x) = 0 is undefined")
        return 1.0
    if d2 == 0.0:
        return 0.0
    return d2 * inv_slope(spec, x, y)


def r1(spec, x, y, z):
    """``(xi'(z) - xi'(y))(z - x) / ((z - y)(xi'(z) - xi'(x)))``.

    Reduces to ``r2(x, y)`` when ``z -> y``.
    """
    _check_unit(x, y, z)
    if x == y == z:
        raise DegenerateArguments("r1 with three coincident arguments")
    num = inv_slope(spec, x, z)
    den = inv_slope(spec, y, z)
    if math.isinf(den):
        if math.isinf(num):
            raise DegenerateArguments("r1 undefined: both secants vanish")
        return 0.0
    if math.isinf(num):
        return math.inf
    return num / den


def block_ratio(spec, a, b):
    """The unique ``z > 0`` with ``h(a, b, z) = 0`` for ``a < b``.

    Since ``h`` is affine in ``bracket(z)``, the root is the bracket inverse
    of ``-(xi(b) - xi(a) - xi'(a)(b-a)) / ((xi'(b) - xi'(a))(b-a))``.
    """
    d = b - a
    d1a = spec.d(a, 1)
    base = spec.d(b) - spec.d(a) - d1a * d
    scale = (spec.d(b, 1) - d1a) * d
    return inverse_bracket(-base / scale)


# ---------------------------------------------------------------- chains

@dataclass(frozen=True)
class Chain:
    """An ordered tuple ``(x_0, ..., x_s)`` in [0, 1]."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 1:
            raise ValidationError("a chain needs at least one point")
        _check_unit(*vals)
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ChainNotStrict(f"chain {vals} is not nondecreasing")

    @property
    def s(self):
        return len(self.values) - 1

    def is_strict(self):
        v = self.values
        return all(b > a for a, b in zip(v, v[1:]))

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def as_chain(chain):
    return chain if isinstance(chain, Chain) else Chain(tuple(chain))


@dataclass(frozen=True)
class KernelProfile:
    """Chain functionals of one chain.

    Attributes
    ----------
    F : tuple of float
        ``F[l]`` for ``l = 0..s``.
    A : dict
        ``A[l]`` for ``l = 1..s-1``.
    Z, Y : float
        The two maxima defined from ``F`` and ``A`` by parity of ``s - l``.
    Z_source, Y_source : tuple
        ``('F', l)`` or ``('A', l)``: which entry attains the maximum.
    rvec : tuple of float
        Neighbour ratios ``rvec[l] = r1(x_{l-1}, x_{l+1}, x_l)`` for
        ``l = 1..s-1`` (index 0 and s hold ``nan``).
    """

    s: int
    F: tuple
    A: dict
    Z: float
    Y: float
    Z_source: tuple
    Y_source: tuple
    rvec: tuple = field(repr=False)


def _maxima(s, F, A):
    z_cands = [(F[l], ("F", l)) for l in range(s + 1) if (s - l) % 2 == 1]
    z_cands += [(A[l], ("A", l)) for l in A if (s - l) % 2 == 0]
    y_cands = [(F[l], ("F", l)) for l in range(s + 1) if (s - l) % 2 == 0]
    y_cands += [(A[l], ("A", l)) for l in A if (s - l) % 2 == 1]
    Z, zs = max(z_cands, key=lambda t: t[0])
    Y, ys = max(y_cands, key=lambda t: t[0])
    return Z, zs, Y, ys


def chain_profile(spec, chain):
    """Evaluate ``F_l`` (0 <= l <= s), ``A_l`` (1 <= l <= s-1), ``Z`` and ``Y``.

    For ``s - l`` even::

        F_l = r2(x_{l-1}, x_l) * prod_{i=1}^{(s-l)/2} rvec[s+1-2i] / rvec[s-2i]
        A_l = r1(x_l, x_{l-1}, x_{l+1}) * prod_{i=1}^{(s-l)/2} rvec[s-2i] / rvec[s+1-2i]

    and for ``s - l`` odd::

        F_l = r2(x_{l+1}, x_l) * prod_{i=1}^{(s-l-1)/2} rvec[s-2i] / rvec[s+1-2i]
        A_l = r1(x_l, x_{l+1}, x_{l-1}) * prod_{i=1}^{(s-l-1)/2} rvec[s+1-2i] / rvec[s-2i]

    At ``l = 0`` with ``s`` even the point ``x_{-1}`` does not exist; the
    first factor of the product cancels it and ``F_0`` becomes
    ``xi''(x_0) inv_slope(x_0, x_1) rvec[1] * (remaining product)``.
    """
    chain = as_chain(chain)
    x = chain.values
    s = chain.s
    if s < 1:
        raise ValidationError("chain_profile needs s >= 1")
    if not chain.is_strict():
        raise ChainNotStrict(f"chain {x} has coincident points")

    rvec = [math.nan] * (s + 1)
    for l in range(1, s):
        rvec[l] = r1(spec, x[l - 1], x[l + 1], x[l])

    def up(l):        # prod rvec[s+1-2i] / rvec[s-2i], i = 1..count
        out = 1.0
        for i in range(1, (s - l) // 2 + 1):
            out *= rvec[s + 1 - 2 * i] / rvec[s - 2 * i]
        return out

    def down(count):  # prod rvec[s-2i] / rvec[s+1-2i], i = 1..count
        out = 1.0
        for i in range(1, count + 1):
            out *= rvec[s - 2 * i] / rvec[s + 1 - 2 * i]
        return out

    F = []
    for l in range(s + 1):
        if (s - l) % 2 == 0:
            if l == 0:
                d2 = spec.d(x[0], 2)
                if d2 == 0.0:
                    F.append(0.0)
                    continue
                rest = 1.0
                for i in range(1, s // 2):
                    rest *= rvec[s + 1 - 2 * i] / rvec[s - 2 * i]
                F.append(d2 * inv_slope(spec, x[0], x[1]) * rvec[1] * rest)
            else:
                F.append(r2(spec, x[l - 1], x[l]) * up(l))
        else:
            F.append(r2(spec, x[l + 1], x[l]) * down((s - l - 1) // 2))
    A = {}
    for l in range(1, s):
        if (s - l) % 2 == 0:
            A[l] = r1(spec, x[l], x[l - 1], x[l + 1]) * down((s - l) // 2)
        else:
            A[l] = r1(spec, x[l], x[l + 1], x[l - 1]) * up(l + 1)
    Z, zs, Y, ys = _maxima(s, F, A)
    return KernelProfile(s=s, F=tuple(F), A=A, Z=Z, Y=Y, Z_source=zs,
                         Y_source=ys, rvec=tuple(rvec))


# ---------------------------------------------------------------- named h's

def _z_or_tag(z):
    if z == 0.0:
        return "zero"
    if math.isinf(z):
        return "infinity"
    return z


def hF(spec, x, y):
    """``h(x, y, r2(x, y))``; the z -> 0 limit is used when ``r2`` vanishes."""
    return h(spec, x, y, _z_or_tag(r2(spec, x, y)))


HBAR_NAMES = ("h1L", "h1U", "h2L", "h2U", "h3L", "h3U")


def hbar(spec, which, x1=None, x2=None):
    """Boundary functions on the chain ``(0, x1, x2, 1)``.

    With ``rvec_1 = r1(0, x2, x1)`` and ``rvec_2 = r1(x1, 1, x2)``:

    ========  ==============================================
    h1L(x1)   ``h(0, x1, r2(0, x1))``
    h1U       ``h(0, x1, rvec_1 / r2(x1, x2))``
    h2L       ``h(x1, x2, 1 / r2(x2, x1))``
    h2U       ``h(x1, x2, r2(x1, x2))``
    h3L       ``h(x2, 1, r2(x2, x1) * rvec_2)``
    h3U(x2)   ``h(x2, 1, 1 / r2(1, x2))``
    ========  ==============================================

    ``h1L`` uses only ``x1`` and ``h3U`` only ``x2``; for convenience a
    single positional argument is accepted for both.
    """
    if which not in HBAR_NAMES:
        raise ValidationError(f"unknown boundary function {which!r}")
    if which == "h1L":
        return h(spec, 0.0, x1, _z_or_tag(r2(spec, 0.0, x1)))
    if which == "h3U":
        xx = x2 if x2 is not None else x1
        return h(spec, xx, 1.0, _z_or_tag(1.0 / r2(spec, 1.0, xx)))
    if x1 is None or x2 is None:
        raise ValidationError(f"{which} needs both x1 and x2")
    if not (0.0 < x1 < x2 < 1.0):
        raise ArgumentOrder(f"{which} needs 0 < x1 < x2 < 1, got ({x1}, {x2})")
    if which == "h1U":
        z = r1(spec, 0.0, x2, x1) / r2(spec, x1, x2)
        return h(spec, 0.0, x1, _z_or_tag(z))
    if which == "h2L":
        return h(spec, x1, x2, 1.0 / r2(spec, x2, x1))
    if which == "h2U":
        return h(spec, x1, x2, r2(spec, x1, x2))
    # h3L
    z = r2(spec, x2, x1) * r1(spec, x1, 1.0, x2)
    return h(spec, x2, 1.0, _z_or_tag(z))
