import functools
import math

import pytest

from conftest import EX2, EX3, EX4, EX5, family, pure
from parisi_zero import classifier as clf
from parisi_zero.classifier import (ClassifyOptions, PhaseLabel, candidate_labels, classify,
                                    exclusion_patterns, phase_scan, two_component_boundaries)
from parisi_zero.errors import AmbiguousPhase, NoPhaseFound, ValidationError
from parisi_zero.measure import energy_lower_bound
from parisi_zero.mixture import make_mixture

FAST = ClassifyOptions(oracle=False)


@functools.lru_cache(maxsize=None)
def classified(spec):
    return classify(spec, FAST)


def test_label_invariants():
    assert str(PhaseLabel.rs()) == "RS"
    r = PhaseLabel.rsb(3)
    assert r.composition == (3,) and r.f_set == () and str(r) == "3-RSB"
    f = PhaseLabel.frsb((1, 1, 1))
    assert f.k == 3 and f.f_set == (1, 2)
    assert f.to_dict() == {"kind": "FRSB", "k": 3, "composition": [1, 1, 1], "f_set": [1, 2]}


def test_candidate_order():
    labels = candidate_labels(2)
    assert [str(l) for l in labels] == ["RS", "1-RSB", "2-RSB", "1-FRSB (1, 0)",
                                        "2-FRSB (1, 1)", "2-FRSB (1, 1, 0)", "2-FRSB (2, 0)"]


def test_exclusion_patterns():
    assert exclusion_patterns((1, 2)) == [(2, 2), (1, 1, 2), (1, 3)]
    assert exclusion_patterns((1, 0)) == [(2, 0), (1, 1, 0), (1, 1)]


@pytest.mark.parametrize("free,label", [
    (EX2, PhaseLabel.rsb(3)),
    (EX3, PhaseLabel.frsb((1, 2))),
    (EX4, PhaseLabel.frsb((2, 1))),
    (EX5, PhaseLabel.frsb((1, 1, 1))),
])
def test_corpus_phases(free, label):
    res = classified(family(free))
    assert res.label == label
    assert res.verification.passed
    assert res.criterion_agrees and res.criterion_label == label
    assert not res.near_boundary


def test_pure_three_spin():
    res = classified(pure(3))
    assert res.label == PhaseLabel.rsb(1) and res.criterion_agrees
    rs = res.candidates[0]
    assert rs.label.kind == "RS" and not rs.verified


def test_two_spin_is_replica_symmetric():
    res = classified(pure(2))
    assert res.label.kind == "RS"
    assert res.energy == pytest.approx(math.sqrt(2), abs=1e-14)


@pytest.mark.parametrize("getter", [lambda: pure(3), lambda: family(EX2), lambda: family(EX5)])
def test_energy_sandwich(getter):
    spec = getter()
    e = classified(spec).energy
    assert energy_lower_bound(spec) - 1e-9 <= e <= math.sqrt(spec.d(1, 1)) + 1e-12


def test_theorem_bound_on_support():
    for spec in (pure(3), family(EX2), family(EX3), family(EX5)):
        res = classified(spec)
        assert res.label.k <= spec.n
        assert len(res.measure.isolated_support_points()) <= spec.n + 1


def test_oracle_gap_reported():
    res = classify(pure(3))
    assert res.oracle_ok and res.oracle_gap <= 1e-4 * res.energy


def test_energy_continuity_between_examples():
    opts = ClassifyOptions(oracle=False, criterion=False, exhaustive=False)
    step = 1e-4
    lams = [0.1113 + i * step for i in range(6)]
    energies = [classify(make_mixture((4, 28, 84), (0.88, l), derive_last=True), opts).energy
                for l in lams]
    assert all(abs(b - a) < 10 * step for a, b in zip(energies, energies[1:]))


def test_no_phase_found_carries_diagnostics(monkeypatch):
    class Failing:
        passed = False
        cond_i_residual = 1.0
        min_g = -1.0
        g_at_support = 1.0

    monkeypatch.setattr(clf, "verify_parisi", lambda *a, **k: Failing())
    with pytest.raises(NoPhaseFound) as info:
        classify(pure(3), FAST)
    assert len(info.value.details["candidates"]) == len(candidate_labels(1))


def test_two_verified_candidates_are_ambiguous(monkeypatch):
    class Passing:
        passed = True

    monkeypatch.setattr(clf, "verify_parisi", lambda *a, **k: Passing())
    with pytest.raises(AmbiguousPhase):
        classify(pure(3), FAST)


def test_equal_energy_candidates_flag_boundary(monkeypatch):
    class Passing:
        passed = True

    monkeypatch.setattr(clf, "verify_parisi", lambda *a, **k: Passing())
    monkeypatch.setattr(clf, "cs_energy", lambda *a, **k: 1.5)
    res = classify(pure(3), FAST)
    assert res.near_boundary and res.label.kind == "RS"


def test_scan_rows_match_examples():
    rows = phase_scan((4, 28, 84), (0.88, (0.1108, 0.1118, 0.0005)), FAST)
    assert [r["weights"][1] for r in rows] == [0.1108, 0.1113, 0.1118]
    assert [(r["phase_kind"], r["composition"]) for r in rows] == [
        ("FRSB", [1, 1, 1]), ("FRSB", [2, 1]), ("RSB", [3])]


def test_scan_trivial_grid_is_classify():
    row, = phase_scan((3,), (), FAST)
    assert row["phase_kind"] == "RSB" and row["k"] == 1
    assert row["energy"] == classified(pure(3)).energy


def test_scan_records_row_errors():
    rows = phase_scan((4, 28), ((0.5, 1.5, 0.5),), FAST)
    assert rows[0]["flags"] == "" and rows[-1]["flags"].startswith("WeightOutOfRange")


def test_scan_parallel_order_matches_serial():
    opts = ClassifyOptions(oracle=False, criterion=False)
    axes = ((0.4, 0.8, 0.2),)
    assert phase_scan((3, 16), axes, opts, workers=2) == phase_scan((3, 16), axes, opts)


def test_scan_validation():
    with pytest.raises(ValidationError):
        phase_scan((4, 28, 84), (0.1,), FAST)
    with pytest.raises(ValidationError):
        phase_scan((3,), (0.5,), FAST)
    with pytest.raises(ValidationError):
        phase_scan((4, 28, 84, 90), ((0.1, 0.2, 0.1),) * 3, FAST)


def test_boundaries_validation():
    with pytest.raises(ValidationError):
        two_component_boundaries(16, 3)
