import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import EX2, EX3, EX5, context, family, pure
from parisi_zero.errors import DomainError, InvalidMeasure
from parisi_zero.measure import (Block, ParisiMeasure, Segment, cs_energy, energy_lower_bound,
                                 g_functions, measure_from_dict, measure_to_dict, nu_tail,
                                 rs_measure, verify_parisi)
from parisi_zero.solver import solve_frsb, solve_rsb


def rsb_measure(spec, k):
    return solve_rsb(spec, k, context(spec)).measure


def frsb_measure(spec, comp):
    return solve_frsb(spec, comp, context(spec)).measure


def test_rs_tail_is_constant():
    m = rs_measure(pure(3))
    for x in (0.0, 0.3, 1.0):
        assert nu_tail(m, x) == m.delta == pytest.approx(3 ** -0.5)


def test_one_block_tail_is_affine():
    m = ParisiMeasure(pure(3), [Block(0.0, 1.0, 0.7)], [], 0.3)
    for x in np.linspace(0, 1, 11):
        assert nu_tail(m, x) == pytest.approx(0.7 * (1 - x) + 0.3, rel=1e-15)
    with pytest.raises(DomainError):
        nu_tail(m, 1.2)


def test_segment_tail_equals_curvature_profile():
    spec = family(EX3)
    m = frsb_measure(spec, (1, 2))
    seg = m.segments[0]
    for x in np.linspace(seg.a, seg.b, 41):
        assert nu_tail(m, x) == pytest.approx(spec.d(x, 2) ** -0.5, abs=1e-10)


@pytest.mark.parametrize("getter", [
    lambda: rsb_measure(pure(3), 1), lambda: rsb_measure(family(EX2), 3),
    lambda: frsb_measure(family(EX5), (1, 1, 1)),
])
def test_tail_continuous_and_nonincreasing(getter):
    m = getter()
    x = np.linspace(0, 1, 20001)
    phi = m.tail_array(x)
    assert np.all(np.diff(phi) <= 1e-15)
    assert phi[-1] == m.delta
    for k in m.knots[1:-1]:
        assert m.tail_array([k - 1e-13])[0] == pytest.approx(m.tail_array([k])[0], abs=1e-11)


def test_rs_energy_closed_form():
    p2 = pure(2)
    assert cs_energy(p2, rs_measure(p2)) == pytest.approx(math.sqrt(2), abs=1e-14)
    for spec in (pure(3), family(EX2)):
        assert cs_energy(spec, rs_measure(spec)) == pytest.approx(math.sqrt(spec.d(1, 1)), rel=1e-14)


def _energy_by_quadrature(spec, m):
    # 1/2 (int xi' dnu + int dx / phi) with the density integrated numerically
    pts = list(m.knots)
    dens = lambda t: (m.tail_array([t])[0] - m.tail_array([min(t + 1e-7, 1.0)])[0]) / 1e-7
    a = sum(quad(lambda t: spec.d(t, 1) * dens(t), u, v, limit=200)[0] for u, v in zip(pts, pts[1:]))
    b = sum(quad(lambda t: 1.0 / m.tail_array([t])[0], u, v, limit=200)[0] for u, v in zip(pts, pts[1:]))
    return 0.5 * (a + m.delta * spec.d(1.0, 1) + b)


def test_energy_closed_form_against_quadrature():
    for spec, m in ((pure(3), rsb_measure(pure(3), 1)), (family(EX3), frsb_measure(family(EX3), (1, 2)))):
        assert cs_energy(spec, m) == pytest.approx(_energy_by_quadrature(spec, m), rel=1e-6)


def test_energy_bounds():
    for spec, m in ((pure(3), rsb_measure(pure(3), 1)), (family(EX2), rsb_measure(family(EX2), 3))):
        e = cs_energy(spec, m)
        assert energy_lower_bound(spec) - 1e-9 <= e <= math.sqrt(spec.d(1, 1)) + 1e-12


@settings(max_examples=30, deadline=None)
@given(m=st.floats(0.0, 5.0), delta=st.floats(0.05, 3.0), cut=st.floats(0.1, 0.9),
       m2=st.floats(0.0, 5.0))
def test_energy_lower_bound_property(m, delta, cut, m2):
    spec = family(EX5)
    lo, hi = sorted((m, m2))
    meas = ParisiMeasure(spec, [Block(0.0, cut, lo), Block(cut, 1.0, hi)], [], delta)
    assert cs_energy(spec, meas) >= energy_lower_bound(spec) - 1e-9


def test_g_endpoint_and_two_spin():
    m = rsb_measure(pure(3), 1)
    assert g_functions(pure(3), m, 1.0)[1] == 0.0
    p2 = pure(2)
    gs = g_functions(p2, rs_measure(p2), np.linspace(0, 1, 11))[1]
    assert np.max(np.abs(gs)) < 1e-14


def test_g_rs_pure_three():
    assert g_functions(pure(3), rs_measure(pure(3)), 0.0)[1] == pytest.approx(-0.5, abs=1e-14)


def _g_by_double_quadrature(spec, m, u):
    pts = [float(k) for k in m.knots]
    inner = lambda t: quad(lambda r: m.tail_array([r])[0] ** -2, 0.0, t,
                           points=[p for p in pts if 0 < p < t] or None, limit=200)[0]
    return quad(lambda t: spec.d(t, 1) - inner(t), u, 1.0,
                points=[p for p in pts if u < p < 1] or None, limit=200)[0]


def test_g_matches_double_quadrature():
    rng = np.random.default_rng(7)
    for spec, m, count in ((pure(3), rsb_measure(pure(3), 1), 25),
                           (family(EX3), frsb_measure(family(EX3), (1, 2)), 25)):
        us = np.sort(rng.uniform(0.0, 1.0, count))
        if spec.n == 3:
            us = np.concatenate([us[:10], rng.uniform(0.9, 1.0, count - 10)])
        g = g_functions(spec, m, us)[1]
        for u, gv in zip(us, g):
            assert gv == pytest.approx(_g_by_double_quadrature(spec, m, u), abs=1e-8)


def test_verification_examples():
    assert not verify_parisi(pure(3), rs_measure(pure(3))).passed
    rep = verify_parisi(pure(3), rs_measure(pure(3)))
    assert rep.min_g == pytest.approx(-0.5, abs=1e-9) and rep.argmin_g == 0.0
    assert verify_parisi(pure(3), rsb_measure(pure(3), 1)).passed
    assert verify_parisi(family(EX2), rsb_measure(family(EX2), 3)).passed


def test_perturbed_delta_fails_first_condition():
    m = rsb_measure(family(EX2), 3)
    bad = ParisiMeasure(m.spec, m.blocks, m.segments, m.delta * 1.01)
    rep = verify_parisi(m.spec, bad)
    assert not rep.passed and abs(rep.cond_i_residual) > 1e-8


def test_invalid_measures():
    spec = pure(3)
    with pytest.raises(InvalidMeasure):
        ParisiMeasure(spec, [Block(0.0, 0.5, 1.0)], [], 0.3)
    with pytest.raises(InvalidMeasure):
        ParisiMeasure(spec, [Block(0.0, 0.5, 2.0), Block(0.5, 1.0, 1.0)], [], 0.3)
    with pytest.raises(InvalidMeasure):
        ParisiMeasure(spec, [Block(0.0, 1.0, 1.0)], [], 0.0)
    with pytest.raises(InvalidMeasure):
        cs_energy(family(EX2), rs_measure(spec))


def test_json_round_trip():
    m = frsb_measure(family(EX5), (1, 1, 1))
    data = json.loads(json.dumps(measure_to_dict(m)))
    assert set(data) == {"exponents", "weights", "delta", "blocks", "segments"}
    back = measure_from_dict(data)
    assert back.blocks == m.blocks and back.segments == m.segments and back.delta == m.delta
    assert verify_parisi(back.spec, back).passed
