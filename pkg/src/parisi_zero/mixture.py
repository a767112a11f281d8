"""The mixture polynomial xi(x) = sum_j lambda_j x^{p_j} and its derivatives.

Everything downstream (kernels, solvers, the oracle) only ever touches the
mixture through :func:`xi_deriv` or the :class:`MixtureSpec` evaluation
methods defined here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import (DomainError, ExponentTooSmall, NonIncreasingExponents,
                     SingularCurvature, ValidationError, WeightOutOfRange,
                     WeightSumMismatch)

__all__ = [
    "MixtureSpec", "make_mixture", "xi_deriv", "phi_star_curvature",
    "curvature_numerator_terms", "descartes_bound", "curvature_roots",
]

WEIGHT_SUM_TOL = 1e-12
MAX_ORDER = 4


def _falling(p, k):
    out = 1
    for i in range(k):
        out *= p - i
    return out


@dataclass(frozen=True)
class MixtureSpec:
    """Validated mixture ``xi(x) = sum_j weights[j] * x**exponents[j]``.

    Parameters
    ----------
    exponents : tuple of int
        Strictly increasing exponents, each at least 3 (at least 2 when
        ``diagnostic`` is set, which exists only for the solvable pure
        2-spin sanity case).
    weights : tuple of float
        Nonnegative weights summing to one.
    diagnostic : bool
        Allow exponent 2.
    """

    exponents: tuple
    weights: tuple
    diagnostic: bool = field(default=False, compare=True)

    def __post_init__(self):
        exps = tuple(int(p) for p in self.exponents)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "weights", wts)
        if len(exps) == 0:
            raise ValidationError("a mixture needs at least one component")
        if len(exps) != len(wts):
            raise ValidationError(
                f"{len(exps)} exponents but {len(wts)} weights")
        lowest = 2 if self.diagnostic else 3
        for p in exps:
            if p < lowest:
                raise ExponentTooSmall(
                    f"exponent {p} < {lowest}"
                    + ("" if self.diagnostic else
                       " (exponent 2 needs diagnostic mode)"))
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise NonIncreasingExponents(f"exponents {exps} not strictly increasing")
        for w in wts:
            if not (0.0 <= w <= 1.0) or math.isnan(w):
                raise WeightOutOfRange(f"weight {w} outside [0, 1]")
        total = math.fsum(wts)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise WeightSumMismatch(f"weights sum to {total!r}, not 1")

    @property
    def n(self):
        return len(self.exponents)

    @cached_property
    def _tables(self):
        # coefficient and power of each monomial for derivative orders 0..4,
        # ascending exponent order; vanishing monomials are dropped
        tabs = []
        for k in range(MAX_ORDER + 1):
            rows = []
            for p, w in zip(self.exponents, self.weights):
                c = w * _falling(p, k)
                if c != 0.0:
                    rows.append((c, p - k))
            tabs.append(tuple(rows))
        return tuple(tabs)

    def d(self, x, order=0):
        """Unchecked derivative evaluation (scalar float fast path).

        All monomials are nonnegative on [0, 1], so summing them in ascending
        exponent order is already accurate to a few ulps; ``math.fsum`` makes
        the scalar result correctly rounded regardless.
        """
        return math.fsum(c * x ** e for c, e in self._tables[order])

    def d_array(self, x, order=0):
        """Vectorized derivative evaluation for numpy arrays."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, e in self._tables[order]:
            out = out + c * x ** e
        return out

    def label(self):
        return " + ".join(f"{w:g} x^{p}" for p, w in zip(self.exponents, self.weights))


def make_mixture(exponents, weights, derive_last=False, diagnostic=False):
    """Validate inputs and build a :class:`MixtureSpec`.

    Parameters
    ----------
    exponents : sequence of int
    weights : sequence of float
        ``n`` weights, or ``n - 1`` weights when ``derive_last`` is true, in
        which case the final weight is one minus their sum.
    derive_last : bool
    diagnostic : bool
        Allow exponent 2.

    Examples
    --------
    >>> make_mixture((4, 28, 84), (0.88, 0.1118), derive_last=True).weights[-1]
    0.00819999999999998
    """
    exponents = [int(p) for p in exponents]
    weights = [float(w) for w in weights]
    if derive_last:
        if len(weights) != len(exponents) - 1:
            raise ValidationError(
                f"derive_last needs {len(exponents) - 1} weights, got {len(weights)}")
        last = 1.0 - math.fsum(weights)
        if last < 0.0:
            if last > -WEIGHT_SUM_TOL:
                last = 0.0
            else:
                raise WeightOutOfRange(
                    f"derived last weight {last:.6g} is negative "
                    "(given weights sum above 1)")
        weights.append(last)
    return MixtureSpec(tuple(exponents), tuple(weights), diagnostic=diagnostic)


def _check_domain(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"argument {x!r} outside [0, 1]")


def xi_deriv(spec, x, order=0):
    """Derivative of xi of the given order (0..4) at ``x`` in [0, 1].

    Accepts a scalar or an array; returns the same shape.
    """
    if order not in range(MAX_ORDER + 1):
        raise ValidationError(f"derivative order {order} not in 0..{MAX_ORDER}")
    _check_domain(x)
    if np.ndim(x) == 0:
        return spec.d(float(x), order)
    return spec.d_array(x, order)


def phi_star_curvature(spec, x):
    """Second derivative of ``xi''(x)**-0.5``.

    Equal to ``(3 xi'''^2 - 2 xi'' xi'''') / (4 xi''^{5/2})``.

    Raises
    ------
    SingularCurvature
        If ``xi''(x) == 0`` (only possible at x = 0).
    """
    _check_domain(x)
    x = float(x)
    d2 = spec.d(x, 2)
    if d2 <= 0.0:
        raise SingularCurvature(f"xi''({x}) = 0; curvature undefined")
    d3 = spec.d(x, 3)
    d4 = spec.d(x, 4)
    return 0.25 * d2 ** -2.5 * (3.0 * d3 * d3 - 2.0 * d2 * d4)


def curvature_numerator_terms(spec):
    """Monomial expansion of ``3 xi'''^2 - 2 xi'' xi''''``.

    Returns
    -------
    list of (power, coefficient)
        Sorted by ascending power, equal powers merged, zero coefficients
        dropped.
    """
    ps, ws = spec.exponents, spec.weights
    terms = {}
    for i, (p, a) in enumerate(zip(ps, ws)):
        # diagonal: p^3 (p-1)^2 (p-2) lambda^2 x^{2p-6}
        c = p ** 3 * (p - 1) ** 2 * (p - 2) * a * a
        terms[2 * p - 6] = terms.get(2 * p - 6, 0.0) + c
        for q, b in zip(ps[i + 1:], ws[i + 1:]):
            c = -2.0 * p * (p - 1) * q * (q - 1) * (p * p + q * q + p + q - 3 * p * q) * a * b
            terms[p + q - 6] = terms.get(p + q - 6, 0.0) + c
    return [(e, c) for e, c in sorted(terms.items()) if c != 0.0]


def descartes_bound(spec):
    """Sign changes in the coefficient sequence of the curvature numerator.

    By Descartes' rule this bounds the number of positive roots.
    """
    signs = [math.copysign(1.0, c) for _, c in curvature_numerator_terms(spec)]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _reduced_numerator(terms, x):
    # numerator divided by its lowest power; same sign on (0, 1], no underflow
    e0 = terms[0][0]
    return sum(c * x ** (e - e0) for e, c in terms)


def curvature_roots(spec, grid=100_000):
    """Locate the sign changes of the curvature of ``xi''^{-1/2}`` on (0, 1).

    Sign changes are detected on a uniform grid and refined by bisection.

    Returns
    -------
    list of float
        Root locations in increasing order.
    """
    terms = curvature_numerator_terms(spec)
    if not terms:
        return []
    x = np.linspace(1.0 / grid, 1.0, grid)
    e0 = terms[0][0]
    vals = np.zeros_like(x)
    for e, c in terms:
        vals += c * x ** (e - e0)
    sgn = np.sign(vals)
    nz = np.nonzero(sgn)[0]
    roots = []
    for i, j in zip(nz, nz[1:]):
        if sgn[i] != sgn[j]:
            roots.append(brentq(lambda t: _reduced_numerator(terms, t),
                                x[i], x[j], xtol=1e-15))
    return roots
