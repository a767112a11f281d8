"""Damped Newton iteration with a central-difference Jacobian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NewtonResult", "damped_newton"]


@dataclass
class NewtonResult:
    x: np.ndarray
    fun: np.ndarray
    converged: bool
    iterations: int

    @property
    def residual(self):
        return float(np.max(np.abs(self.fun))) if self.fun.size else 0.0


def _merit(f):
    if f is None or not np.all(np.isfinite(f)):
        return np.inf
    return float(np.max(np.abs(f))) if f.size else 0.0


def _safe_eval(fun, x):
    try:
        f = fun(x)
    except (ValueError, ZeroDivisionError, OverflowError, ArithmeticError):
        return None
    f = np.asarray(f, dtype=float)
    return f if np.all(np.isfinite(f)) else None


def numeric_jacobian(fun, x, f0, step=1e-7):
    """Central differences, falling back to one-sided steps at the domain edge."""
    n = x.size
    J = np.empty((f0.size, n))
    for i in range(n):
        hi = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        fp, fm = _safe_eval(fun, xp), _safe_eval(fun, xm)
        if fp is not None and fm is not None:
            J[:, i] = (fp - fm) / (2 * hi)
        elif fp is not None:
            J[:, i] = (fp - f0) / hi
        elif fm is not None:
            J[:, i] = (f0 - fm) / hi
        else:
            J[:, i] = np.nan
    return J


def damped_newton(fun, x0, tol=1e-12, max_iter=60, max_halvings=40, step=1e-7):
    """Solve ``fun(x) = 0`` from ``x0``.

    Each Newton step is halved (up to ``max_halvings`` times) until the
    max-norm of the residual decreases; ``fun`` may raise ``ValueError`` or
    return non-finite values outside its domain, which the line search
    treats as a rejected step.

    Parameters
    ----------
    fun : callable
        Maps an array of shape (n,) to an array of shape (n,).
    x0 : array_like
    tol : float
        Stop once the max-norm residual is below ``tol``.

    Returns
    -------
    NewtonResult
    """
    x = np.array(x0, dtype=float)
    f = _safe_eval(fun, x)
    if f is None:
        return NewtonResult(x, np.full(x.shape, np.nan), False, 0)
    it = 0
    for it in range(1, max_iter + 1):
        cur = _merit(f)
        if cur <= tol:
            return NewtonResult(x, f, True, it - 1)
        J = numeric_jacobian(fun, x, f, step)
        if not np.all(np.isfinite(J)):
            break
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        t = 1.0
        accepted = False
        for _ in range(max_halvings):
            xn = x + t * dx
            fn = _safe_eval(fun, xn)
            if fn is not None and _merit(fn) < cur:
                x, f = xn, fn
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return NewtonResult(x, f, _merit(f) <= tol, it)
