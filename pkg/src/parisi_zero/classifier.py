"""Phase classification of the zero-temperature Parisi measure.

Two routes are run side by side:

* the constructive route builds each candidate measure (RS, k-RSB, FRSB
  compositions) with :mod:`parisi_zero.solver` and accepts the ones that
  pass :func:`parisi_zero.measure.verify_parisi`;
* the criterion route decides each candidate from the chain sets alone
  (:func:`parisi_zero.hset.tilde_chain` plus the exclusion patterns).

The constructive measure is returned; ``criterion_agrees`` records whether
both routes picked the same phase.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (AmbiguousPhase, NoPhaseFound, NotFound, ParisiError,
                     SearchFailure, ValidationError)
from .hset import tilde_chain
from .kernels import h_value, inv_slope, r1, r2
from .measure import cs_energy, rs_measure, verify_parisi
from .mixture import make_mixture
from .newton import damped_newton
from .solver import (SolverContext, composition_f_set, compositions, solve_frsb,
                     solve_rsb)

__all__ = [
    "PhaseLabel", "ClassifyOptions", "ClassificationResult", "CandidateRecord",
    "candidate_labels", "classify", "phase_scan", "scan_axis_values",
    "two_component_boundaries", "exclusion_patterns",
]


@dataclass(frozen=True)
class PhaseLabel:
    """Phase of a Parisi measure.

    Attributes
    ----------
    kind : {"RS", "RSB", "FRSB"}
    k : int
        Number of blocks (0 for RS).
    composition : tuple of int
        ``(k,)`` for RSB, the block counts between segments for FRSB.
    f_set : tuple of int
        Block indices followed by a segment (FRSB only).
    """

    kind: str
    k: int
    composition: tuple = ()
    f_set: tuple = ()

    @classmethod
    def rs(cls):
        return cls("RS", 0)

    @classmethod
    def rsb(cls, k):
        return cls("RSB", int(k), (int(k),))

    @classmethod
    def frsb(cls, composition):
        comp = tuple(int(v) for v in composition)
        return cls("FRSB", sum(comp), comp, composition_f_set(comp))

    def __str__(self):
        if self.kind == "RS":
            return "RS"
        if self.kind == "RSB":
            return f"{self.k}-RSB"
        return f"{self.k}-FRSB {self.composition}"

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "composition": list(self.composition),
                "f_set": list(self.f_set)}


@dataclass(frozen=True)
class ClassifyOptions:
    """Knobs of :func:`classify`.

    Attributes
    ----------
    oracle : bool
        Run the convex oracle and report the energy gap.
    oracle_grid : int
    oracle_gap_tol : float
        Relative energy gap above which ``oracle_ok`` is false.
    verify_grid : int
    criterion : bool
        Also run the chain-set criterion route.
    exhaustive : bool
        Keep testing candidates after the first verified one, so that a
        second verified candidate is detected.
    tie_tol : float
        Two verified candidates whose energies agree to this relative
        tolerance are treated as a phase boundary rather than an error.
    """

    oracle: bool = True
    oracle_grid: int = 2000
    oracle_gap_tol: float = 1e-4
    verify_grid: int = 4096
    criterion: bool = True
    exhaustive: bool = True
    tie_tol: float = 1e-9


@dataclass
class CandidateRecord:
    """What each route concluded about one candidate phase."""

    label: PhaseLabel
    verified: bool = False
    criterion: bool = None
    energy: float = None
    reason: str = None
    measure: object = field(default=None, repr=False)
    verification: object = field(default=None, repr=False)

    def to_dict(self):
        return {"phase": str(self.label), "verified": self.verified,
                "criterion": self.criterion, "energy": self.energy, "reason": self.reason}


@dataclass(frozen=True)
class ClassificationResult:
    """Classification outcome.

    Attributes
    ----------
    label : PhaseLabel
    measure : ParisiMeasure
    energy : float
    verification : VerificationReport
    criterion_agrees : bool or None
        ``None`` when the criterion route was not run.
    criterion_label : PhaseLabel or None
    oracle_gap : float or None
        ``|energy - oracle energy|``.
    oracle_energy : float or None
    oracle_ok : bool or None
        Relative gap within ``oracle_gap_tol``.
    near_boundary : bool
        Another candidate also verified with the same energy.
    candidates : tuple of CandidateRecord
    """

    label: PhaseLabel
    measure: object
    energy: float
    verification: object
    criterion_agrees: bool = None
    criterion_label: PhaseLabel = None
    oracle_gap: float = None
    oracle_energy: float = None
    oracle_ok: bool = None
    near_boundary: bool = False
    candidates: tuple = ()


def candidate_labels(n):
    """Search order: RS, k-RSB for k = 1..n, then FRSB by k and composition."""
    out = [PhaseLabel.rs()]
    out += [PhaseLabel.rsb(k) for k in range(1, n + 1)]
    for k in range(1, n + 1):
        out += [PhaseLabel.frsb(c) for c in compositions(k)]
    return out


def exclusion_patterns(composition):
    """Compositions that must not chain for ``composition`` to be the phase.

    For every position ``j`` the part ``s_j`` is promoted to ``s_j + 1``,
    and a one-part set is inserted before set ``j``.
    """
    comp = tuple(composition)
    out = []
    for j in range(len(comp)):
        out.append(comp[:j] + (comp[j] + 1,) + comp[j + 1:])
        out.append(comp[:j] + (1,) + comp[j:])
    seen = []
    for c in out:
        if c not in seen:
            seen.append(c)
    return seen


def _construct(spec, label, ctx):
    if label.kind == "RS":
        return rs_measure(spec)
    if label.kind == "RSB":
        return solve_rsb(spec, label.k, ctx).measure
    return solve_frsb(spec, label.composition, ctx).measure


def _criterion(spec, label, ctx):
    """Chain-set verdict on one candidate, with a reason when it fails."""
    n = spec.n
    comp = label.composition
    verdict = tilde_chain(spec, comp, ctx)
    if not verdict.holds:
        return False, verdict.reason
    if label.k == n:
        return True, None
    patterns = [(label.k + 1,)] if label.kind == "RSB" else exclusion_patterns(comp)
    for pat in patterns:
        if sum(pat) > n:
            continue
        if tilde_chain(spec, pat, ctx).holds:
            return False, f"exclusion pattern {pat} also chains"
    return True, None


def classify(spec, options=None, ctx=None):
    """Determine the phase of the Parisi measure of ``spec``.

    Returns
    -------
    ClassificationResult

    Raises
    ------
    NoPhaseFound
        No candidate verified; ``details`` holds every candidate record.
    AmbiguousPhase
        Two candidates verified with different energies.
    """
    opts = options or ClassifyOptions()
    ctx = ctx if ctx is not None else SolverContext(spec)
    records = []
    verified = []
    for label in candidate_labels(spec.n):
        rec = CandidateRecord(label)
        records.append(rec)
        if verified and not opts.exhaustive and not opts.criterion:
            break
        if not verified or opts.exhaustive:
            try:
                meas = _construct(spec, label, ctx)
                rep = verify_parisi(spec, meas, grid_size=opts.verify_grid)
                rec.measure, rec.verification = meas, rep
                rec.verified = rep.passed
                if rep.passed:
                    rec.energy = cs_energy(spec, meas)
                    verified.append(rec)
                else:
                    rec.reason = (f"verification failed: cond_i={rep.cond_i_residual:.3e}, "
                                  f"min_g={rep.min_g:.3e}, g_support={rep.g_at_support:.3e}")
            except SearchFailure as exc:
                rec.reason = str(exc)
        if opts.criterion:
            if label.kind == "RS":
                rec.criterion = rec.verified
            else:
                try:
                    rec.criterion, why = _criterion(spec, label, ctx)
                except (SearchFailure, ValidationError) as exc:
                    rec.criterion, why = False, str(exc)
                if why and not rec.reason:
                    rec.reason = why
        if verified and not opts.exhaustive and (not opts.criterion or any(r.criterion for r in records)):
            break
    if not verified:
        raise NoPhaseFound(f"no candidate phase verified for {spec.label()}",
                           reason="no verified candidate",
                           details={"candidates": [r.to_dict() for r in records]})
    best = verified[0]
    near = False
    for other in verified[1:]:
        if abs(other.energy - best.energy) <= opts.tie_tol * abs(best.energy):
            near = True
        else:
            raise AmbiguousPhase(
                f"{best.label} and {other.label} both verify with energies "
                f"{best.energy:.12g} and {other.energy:.12g}",
                candidates=[str(best.label), str(other.label)])
    crit_label = None
    agrees = None
    if opts.criterion:
        crit = [r.label for r in records if r.criterion]
        crit_label = crit[0] if crit else None
        agrees = crit_label == best.label or (near and crit_label in [r.label for r in verified])
    gap = oracle_energy = oracle_ok = None
    if opts.oracle:
        from .oracle import minimize_cs
        sol = minimize_cs(spec, opts.oracle_grid)
        oracle_energy = sol.energy
        gap = abs(best.energy - sol.energy)
        oracle_ok = gap <= opts.oracle_gap_tol * abs(best.energy)
    return ClassificationResult(label=best.label, measure=best.measure, energy=best.energy,
                                verification=best.verification, criterion_agrees=agrees,
                                criterion_label=crit_label, oracle_gap=gap,
                                oracle_energy=oracle_energy, oracle_ok=oracle_ok,
                                near_boundary=near, candidates=tuple(records))


# ------------------------------------------------------------------ scans

def scan_axis_values(axis):
    """Values of one scan axis: a number, or an inclusive ``(lo, hi, step)``."""
    if isinstance(axis, (int, float)):
        return [float(axis)]
    lo, hi, step = (float(v) for v in axis)
    if step <= 0 or hi < lo:
        raise ValidationError(f"invalid range {axis}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _scan_row(job):
    exponents, weights, opts = job
    row = {"weights": list(weights), "phase_kind": "", "k": "", "composition": "",
           "f_set": "", "energy": "", "oracle_gap": "", "flags": ""}
    try:
        spec = make_mixture(exponents, weights, derive_last=len(exponents) > 1)
        res = classify(spec, opts)
    except ParisiError as exc:
        row["flags"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return row
    flags = []
    if res.near_boundary:
        flags.append("near_boundary")
    if res.criterion_agrees is False:
        flags.append("criterion_disagrees")
    if res.oracle_ok is False:
        flags.append("oracle_gap_large")
    row.update(phase_kind=res.label.kind, k=res.label.k,
               composition=list(res.label.composition), f_set=list(res.label.f_set),
               energy=res.energy, oracle_gap=res.oracle_gap if res.oracle_gap is not None else "",
               flags=";".join(flags))
    return row


def phase_scan(exponents, axes=(), options=None, workers=1):
    """Classify every point of a weight grid.

    Parameters
    ----------
    exponents : sequence of int
    axes : sequence
        One entry per weight except the last (which is derived): a number
        or an inclusive range ``(lo, hi, step)``.  At most two ranges.
    options : ClassifyOptions
    workers : int
        Process count; rows are returned in grid order regardless.

    Returns
    -------
    list of dict
        Keys ``weights``, ``phase_kind``, ``k``, ``composition``, ``f_set``,
        ``energy``, ``oracle_gap``, ``flags``.  Failures are recorded in
        ``flags``.
    """
    exponents = tuple(int(p) for p in exponents)
    axes = list(axes)
    if len(exponents) == 1:
        if axes:
            raise ValidationError("a one-component mixture has no free weight")
        grid = [((1.0,))]
    else:
        if len(axes) != len(exponents) - 1:
            raise ValidationError(f"need {len(exponents) - 1} weight axes, got {len(axes)}")
        if sum(not isinstance(a, (int, float)) for a in axes) > 2:
            raise ValidationError("at most two range axes")
        grid = list(itertools.product(*(scan_axis_values(a) for a in axes)))
    opts = options or ClassifyOptions()
    jobs = [(exponents, tuple(w), opts) for w in grid]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_row, jobs))
    return [_scan_row(j) for j in jobs]


# ------------------------------------------------------------------ two components

def _two_component(p, s, lam):
    return make_mixture((p, s), (lam, 1.0 - lam))


def _system_12(spec, x):
    return (h_value(spec, 0.0, x, r1(spec, 0.0, x, 1.0)),
            h_value(spec, x, 1.0, r1(spec, x, 1.0, 0.0)))


def _system_22f(spec, x):
    return (h_value(spec, 0.0, x, r2(spec, 0.0, x)),
            h_value(spec, x, 1.0, 1.0 / r2(spec, 1.0, x)))


def _scaled(spec, x, vals):
    # divide by the natural size of h on each block
    a = (spec.d(x, 1) - spec.d(0.0, 1)) * x
    b = (spec.d(1.0, 1) - spec.d(x, 1)) * (1.0 - x)
    return np.array([vals[0] / a, vals[1] / b])


def _joint_roots(p, s, system, nx=80, nl=80):
    xs = np.linspace(0.01, 0.99, nx)
    ls = np.linspace(0.005, 0.995, nl)
    vals = np.full((nx, nl, 2), np.nan)
    for i, x in enumerate(xs):
        for j, lam in enumerate(ls):
            try:
                sp = _two_component(p, s, lam)
                vals[i, j] = _scaled(sp, x, system(sp, x))
            except (ParisiError, ValueError, ZeroDivisionError, OverflowError):
                pass
    roots = []
    for i in range(nx - 1):
        for j in range(nl - 1):
            cell = vals[i:i + 2, j:j + 2].reshape(4, 2)
            if not np.all(np.isfinite(cell)):
                continue
            if not all(cell[:, c].min() <= 0.0 <= cell[:, c].max() for c in (0, 1)):
                continue

            def fun(u):
                x, lam = u
                if not (0.0 < x < 1.0 and 0.0 < lam < 1.0):
                    raise ValueError("outside the unit square")
                sp = _two_component(p, s, lam)
                return _scaled(sp, x, system(sp, x))

            res = damped_newton(fun, [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ls[j] + ls[j + 1])],
                                tol=1e-14)
            if res.residual <= 1e-11:
                x, lam = (float(v) for v in res.x)
                if not any(abs(x - a) < 1e-8 and abs(lam - b) < 1e-8 for a, b in roots):
                    roots.append((x, lam))
    return sorted(roots, key=lambda r: r[1])


def _label_at(p, s, lam, opts):
    try:
        return classify(_two_component(p, s, lam), opts).label
    except ParisiError:
        return None


def _bisect_label(p, s, lo, hi, left_label, opts, tol=1e-7):
    """Boundary in (lo, hi) where the label stops being ``left_label``."""
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if _label_at(p, s, mid, opts) == left_label:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def two_component_boundaries(p, s, options=None, scan_points=40):
    """Phase boundaries of ``xi = lam x^p + (1 - lam) x^s``.

    ``lambda_1to2`` and ``lambda_2to2F`` solve their 2x2 kernel systems
    jointly in ``(x, lam)``.  ``lambda_2to1F`` and ``lambda_2to1`` are
    located by bisection on the classification outcome: moving away from
    the 2-RSB interval, the phase changes from 2-FRSB (1, 1) to 1-FRSB
    (1, 0), and then from 1-FRSB to another phase.

    Returns
    -------
    dict
        ``{"p", "s", "lambda_1to2": {"x", "lambda"}, "lambda_2to2F":
        {"x", "lambda"}, "lambda_2to1F": float, "lambda_2to1": float,
        "notes": [...]}`` with ``None`` for boundaries not found.
    """
    if not (3 <= p < s):
        raise ValidationError("need 3 <= p < s")
    opts = options or ClassifyOptions(oracle=False, criterion=False, exhaustive=False)
    out = {"p": p, "s": s, "lambda_1to2": None, "lambda_2to2F": None,
           "lambda_2to1F": None, "lambda_2to1": None, "notes": []}
    r12 = _joint_roots(p, s, _system_12)
    r22 = _joint_roots(p, s, _system_22f)
    if len(r12) > 1:
        out["notes"].append(f"{len(r12)} roots of the 1->2 system; the first by lambda is used")
    if len(r22) > 1:
        out["notes"].append(f"{len(r22)} roots of the 2->2F system; the first by lambda is used")
    if r12:
        out["lambda_1to2"] = {"x": r12[0][0], "lambda": r12[0][1]}
    if r22:
        out["lambda_2to2F"] = {"x": r22[0][0], "lambda": r22[0][1]}
    if not (r12 and r22):
        out["notes"].append("a kernel system has no root in the unit square")
        return out
    l12, l22 = r12[0][1], r22[0][1]
    direction = 1.0 if l22 > l12 else -1.0
    end = 1.0 - 1e-3 if direction > 0 else 1e-3
    grid = np.linspace(l22, end, scan_points + 1)[1:]
    frsb11, frsb10 = PhaseLabel.frsb((1, 1)), PhaseLabel.frsb((1, 0))
    labels = [_label_at(p, s, lam, opts) for lam in grid]
    prev = l22
    stage = frsb11
    for lam, lab in zip(grid, labels):
        if stage == frsb11 and lab != frsb11:
            if lab == frsb10:
                out["lambda_2to1F"] = _bisect_label(p, s, prev, lam, frsb11, opts)
                stage = frsb10
            else:
                out["notes"].append(f"phase after 2-FRSB (1, 1) is {lab}, not 1-FRSB (1, 0)")
                break
        elif stage == frsb10 and lab != frsb10:
            out["lambda_2to1"] = _bisect_label(p, s, prev, lam, frsb10, opts)
            out["notes"].append(f"phase after 1-FRSB (1, 0) is {lab}")
            break
        prev = lam
    return out
