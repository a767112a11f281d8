"""Direct minimization of the Crisanti-Sommers functional on a grid.

With ``phi(t) = nu((t, 1])`` the functional reads
``Q = 1/2 int_0^1 (xi''(t) phi(t) + 1 / phi(t)) dt`` and admissible tails are
exactly the positive, nonincreasing, concave functions on [0, 1].  On a grid
this is a second-order cone program, solved here with CLARABEL through cvxpy.
The result is independent of every formula used by the structural solver and
serves as a cross-check of energies and of the phase.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .errors import NotConverged, Unclassifiable, ValidationError

__all__ = ["OracleSolution", "minimize_cs", "extract_phase", "oracle_grid",
           "write_phi_csv", "PHI_FLOOR"]

PHI_FLOOR = 1e-8


def oracle_grid(N, refine_from=0.8, refine_share=0.75):
    """``N + 1`` nodes on [0, 1], a share of them packed into [refine_from, 1]."""
    if N < 4:
        raise ValidationError("grid needs at least 4 intervals")
    n_fine = int(round(refine_share * N))
    n_coarse = N - n_fine
    coarse = np.linspace(0.0, refine_from, n_coarse + 1)
    fine = np.linspace(refine_from, 1.0, n_fine + 1)
    return np.concatenate([coarse, fine[1:]])


def _trapezoid_weights(x):
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _energy(x, w, d2, phi):
    return 0.5 * float(np.dot(w, d2 * phi + 1.0 / phi))


def _clean(x, phi):
    """Project onto the cone exactly: nonpositive, nonincreasing slopes."""
    h = np.diff(x)
    slopes = np.minimum(np.diff(phi) / h, 0.0)
    slopes = np.minimum.accumulate(slopes)
    out = np.empty_like(phi)
    out[-1] = max(phi[-1], PHI_FLOOR)
    out[:-1] = out[-1] - np.cumsum((slopes * h)[::-1])[::-1]
    return out


def _kkt_residual(x, w, d2, phi):
    """Natural residual of the optimality system in cone coordinates.

    ``phi_i = delta + sum_{m >= i} h_m gamma_m`` with
    ``gamma_m = sum_{j <= m} rho_j`` and ``rho >= 0``; optimality asks for
    a vanishing ``delta`` derivative and ``min(rho_j, d/d rho_j) = 0``.
    """
    h = np.diff(x)
    g = 0.5 * w * (d2 - 1.0 / phi ** 2)
    d_delta = g.sum()
    d_gamma = h * np.cumsum(g)[:-1]
    d_rho = np.cumsum(d_gamma[::-1])[::-1]
    gamma = -np.diff(phi) / h
    rho = np.diff(np.concatenate([[0.0], gamma]))
    return float(max(abs(d_delta), np.max(np.abs(np.minimum(rho, d_rho)))))


@dataclass(frozen=True)
class OracleSolution:
    """Discretized minimizer of the functional.

    Attributes
    ----------
    grid : ndarray
        ``N + 1`` nodes on [0, 1], including both ends.
    phi : ndarray
        Tail ``nu((x, 1])`` at the nodes.
    energy : float
    delta : float
        ``phi`` at 1.
    iterations : int
    kkt_residual : float
    converged : bool
    """

    grid: np.ndarray
    phi: np.ndarray
    energy: float
    delta: float
    iterations: int
    kkt_residual: float
    converged: bool

    def to_dict(self):
        return {"N": int(self.grid.size - 1), "energy": self.energy, "delta": self.delta,
                "iterations": self.iterations, "kkt_residual": self.kkt_residual,
                "converged": self.converged}


def minimize_cs(spec, N=2000, max_iter=200, tol=1e-6, grid=None):
    """Minimize the trapezoid-discretized functional over admissible tails.

    Parameters
    ----------
    spec : MixtureSpec
    N : int
        Number of grid intervals (at least 256 unless ``grid`` is given).
    max_iter : int
        Interior-point iteration cap.
    tol : float
        Bound on the KKT residual for ``converged``.
    grid : array_like, optional
        Custom increasing nodes from 0 to 1.

    Returns
    -------
    OracleSolution

    Raises
    ------
    NotConverged
        The conic solver returned no usable point.
    """
    if grid is None:
        if N < 256:
            raise ValidationError("N must be at least 256")
        x = oracle_grid(N)
    else:
        x = np.asarray(grid, dtype=float)
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise ValidationError("grid must increase from 0 to 1")
    w = _trapezoid_weights(x)
    d2 = spec.d_array(x, 2)
    h = np.diff(x)
    phi = cp.Variable(x.size)
    slopes = cp.multiply(cp.diff(phi), 1.0 / h)
    cons = [phi >= PHI_FLOOR, slopes <= 0, cp.diff(slopes) <= 0]
    # scaled by the interval count so per-node curvature is O(1) for the interior-point tolerances
    scale = float(x.size - 1)
    obj = scale * (0.5 * (w * d2) @ phi + 0.5 * cp.sum(cp.multiply(w, cp.inv_pos(phi))))
    prob = cp.Problem(cp.Minimize(obj), cons)
    try:
        with warnings.catch_warnings():
            # an "inaccurate" status is judged by the KKT residual below instead
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=cp.CLARABEL, max_iter=max_iter, tol_gap_abs=1e-11,
                       tol_gap_rel=1e-11, tol_feas=1e-11)
    except cp.error.SolverError as exc:
        raise NotConverged(f"conic solver failed: {exc}", reason="solver error") from exc
    if phi.value is None:
        raise NotConverged(f"conic solver status {prob.status}", reason=prob.status)
    val = _clean(x, np.asarray(phi.value, dtype=float))
    kkt = _kkt_residual(x, w, d2, val)
    iters = int(getattr(prob.solver_stats, "num_iters", 0) or 0)
    return OracleSolution(grid=x, phi=val, energy=_energy(x, w, d2, val), delta=float(val[-1]),
                          iterations=iters, kkt_residual=kkt,
                          converged=prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and kkt <= tol)


def write_phi_csv(sol, path):
    """Write ``x,phi`` rows of an oracle solution."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "phi"])
        for a, b in zip(sol.grid, sol.phi):
            wr.writerow([f"{a:.12g}", f"{b:.12g}"])


def _runs(mask):
    """Maximal runs ``(first, last)`` of True entries."""
    out, start = [], None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def extract_phase(spec, sol, tol_seg=1e-5, tol_lin=2e-4, min_segment_nodes=20, tol_flat=1e-3,
                  bend_share=0.5):
    """Heuristic phase read off an oracle tail; for cross-checking only.

    A tail whose total drop is below ``tol_flat`` relative is RS.  A run of
    at least ``min_segment_nodes`` nodes on which ``phi`` matches
    ``xi''^{-1/2}`` within ``tol_seg`` (relative), the profile is concave and
    the slope of ``phi`` drops by at least ``bend_share`` of the profile's
    slope drop is a segment.  Outside
    segments, a slope drop larger than ``tol_lin`` times the slope scale
    marks a block boundary; adjacent marked nodes form one boundary, placed
    at their drop-weighted centre.  Affine stretches between these events
    are blocks.  The thresholds are empirical, and segments narrower than
    ``min_segment_nodes`` grid steps are not resolved.

    Returns
    -------
    dict
        ``kind``, ``k``, ``composition``, ``f_set``, ``breakpoints`` (block
        boundaries inside (0, 1)) and ``segments``.

    Raises
    ------
    Unclassifiable
        A block stretch spans fewer than 3 grid points.
    """
    x, phi = sol.grid, sol.phi
    h = np.diff(x)
    s = np.diff(phi) / h
    scale = max(float(np.max(np.abs(s))), float(phi[0]))
    if phi[0] - phi[-1] <= tol_flat * phi[0]:
        return {"kind": "RS", "k": 0, "composition": [], "f_set": [],
                "breakpoints": [], "segments": []}
    drop = np.zeros(x.size)
    drop[1:-1] = s[:-1] - s[1:]
    tdrop = np.zeros(x.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        target = spec.d_array(x, 2) ** -0.5
        ts = np.diff(target) / h
        tdrop[1:-1] = ts[:-1] - ts[1:]
    # a segment node matches the profile in value and bends with it; inside a
    # block the tail is affine, so its slope drop is far below the profile's
    match = ((np.abs(phi - target) <= tol_seg * target) & (tdrop > 0.0)
             & (drop >= bend_share * tdrop))
    seg_runs = [r for r in _runs(match) if r[1] - r[0] + 1 >= min_segment_nodes]
    drop = np.maximum(drop, 0.0)
    kink_mask = drop > tol_lin * scale
    for a, b in seg_runs:
        # a kink touching a segment is the junction itself; the value test
        # lags behind the true start of a segment by a few nodes
        kink_mask[max(a - 8, 0):min(b + 4, x.size)] = False
    events = []
    for a, b in _runs(kink_mask):
        wts = drop[a:b + 1]
        events.append(("kink", float(np.dot(wts, x[a:b + 1]) / wts.sum()), a, b))
    for a, b in seg_runs:
        events.append(("segment", (float(x[a]), float(x[b])), a, b))
    events.sort(key=lambda e: e[2])
    comp, count, last_idx = [], 0, 0
    breakpoints, segments = [], []
    for kind, where, a, b in events:
        if a - last_idx < 3:
            raise Unclassifiable(f"stretch ending at x={x[a]:.6g} spans fewer than 3 "
                                 "grid points", reason="resolution")
        count += 1
        if kind == "kink":
            breakpoints.append(where)
        else:
            comp.append(count)
            count = 0
            segments.append(where)
        last_idx = b
    if x.size - 1 - last_idx >= 3:
        count += 1
    if not segments:
        return {"kind": "RSB", "k": count, "composition": [count], "f_set": [],
                "breakpoints": breakpoints, "segments": []}
    comp.append(count)
    f_set, acc = [], 0
    for v in comp[:-1]:
        acc += v
        f_set.append(acc)
    return {"kind": "FRSB", "k": sum(comp), "composition": comp, "f_set": f_set,
            "breakpoints": breakpoints, "segments": segments}
