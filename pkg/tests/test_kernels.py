import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import EX2, EX3, EX4, EX5, family, pure
from parisi_zero.errors import (ArgumentOrder, ChainNotStrict, DegenerateArguments,
                                NonpositiveZ)
from parisi_zero.kernels import (Chain, bracket, bracket_array, chain_profile, h, hbar, hF,
                                 inverse_bracket, r1, r2)

mp.mp.dps = 40


def h_oracle(spec, x, y, z):
    """High-precision transcription of the kernel, independent of the package."""
    x, y, z = mp.mpf(x), mp.mpf(y), mp.mpf(z)
    xi = lambda t: mp.fsum(w * t ** p for p, w in zip(spec.exponents, spec.weights))
    d1 = lambda t: mp.fsum(w * p * t ** (p - 1) for p, w in zip(spec.exponents, spec.weights))
    br = 1 / (z - 1) - z * mp.log(z) / (z - 1) ** 2
    return float(xi(y) - xi(x) - d1(x) * (y - x) + (d1(y) - d1(x)) * (y - x) * br)


points = st.floats(0.0, 1.0)
positive_z = st.floats(1e-6, 1e6).filter(lambda z: abs(z - 1) > 1e-6)


@settings(max_examples=60, deadline=None)
@given(x=points, y=points, z=positive_z)
def test_h_matches_high_precision(x, y, z):
    spec = family(EX2)
    assert h(spec, x, y, z) == pytest.approx(h_oracle(spec, x, y, z), abs=1e-12, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(x=points, z=positive_z)
def test_h_vanishes_on_diagonal(x, z):
    assert h(family(EX3), x, x, z) == 0.0


def test_h_closed_forms():
    assert h(pure(3), 0.3, 0.3, 5.0) == 0.0
    assert h(pure(2), 0.0, 1.0, "one") == pytest.approx(0.0, abs=1e-15)
    assert h(pure(3), 0.0, 1.0, 2.0) == pytest.approx(4 - 6 * math.log(2), abs=1e-14)


def test_h_rejects_nonpositive_z():
    with pytest.raises(NonpositiveZ):
        h(pure(3), 0.0, 1.0, 0.0)
    with pytest.raises(NonpositiveZ):
        h(pure(3), 0.0, 1.0, -1.0)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0.0, 0.98), gap=st.floats(0.01, 1.0))
def test_h_strictly_increasing_in_z(x, gap):
    y = min(x + gap, 1.0)
    spec = family(EX4)
    zs = np.logspace(-6, 6, 121)
    vals = np.array([h(spec, x, y, z) for z in zs])
    assert np.all(np.diff(vals) > 0)


@settings(max_examples=40, deadline=None)
@given(x=points, y=points)
def test_h_limits(x, y):
    assume(abs(x - y) > 1e-3)
    spec = family(EX5)
    lo, hi = h(spec, x, y, "zero"), h(spec, x, y, "infinity")
    assert lo <= 0.0 <= hi
    # bracket(1e-8) = -1 + O(1e-8 log 1e8), bracket(1e8) = O(log(1e8) / 1e8)
    scale = (spec.d(max(x, y), 1) - spec.d(min(x, y), 1)) * abs(y - x)
    assert abs(h(spec, x, y, 1e-8) - lo) <= 2e-7 * scale + 1e-15
    assert abs(h(spec, x, y, 1e8) - hi) <= 2e-7 * scale + 1e-15


def test_bracket_series_agrees_with_direct_formula():
    for d in np.concatenate([np.linspace(1e-4, 1e-3, 50), -np.linspace(1e-4, 1e-3, 50)]):
        z = 1.0 + d
        e = z - 1.0  # exact in binary, unlike d
        direct = 1.0 / e - z * math.log(z) / e ** 2
        series = -0.5 + e / 6 - e ** 2 / 12 + e ** 3 / 20 - e ** 4 / 30
        assert abs(direct - series) < 1e-10
    for e in (1e-9, 5e-5, -5e-5, 9.9e-5):
        z = mp.mpf(1) + mp.mpf(e)
        exact = float(1 / (z - 1) - z * mp.log(z) / (z - 1) ** 2)
        assert bracket(1.0 + e) == pytest.approx(exact, abs=1e-15)
    assert bracket(1.0) == -0.5


def test_bracket_array_and_inverse():
    z = np.logspace(-5, 5, 200)
    np.testing.assert_allclose(bracket_array(z), [bracket(v) for v in z], rtol=1e-14, atol=1e-16)
    for v in (1e-3, 0.5, 1.0, 2.8, 400.0):
        assert inverse_bracket(bracket(v)) == pytest.approx(v, rel=1e-9)


def test_r2_values():
    assert r2(pure(3), 0.0, 1.0) == pytest.approx(2.0, rel=1e-15)
    assert r2(pure(3), 1.0, 0.0) == 0.0
    spec = family(EX2)
    for x in (0.1, 0.5, 0.93):
        assert r2(spec, x, x + 1e-8) == pytest.approx(1.0, abs=1e-6)


def test_r1_reduces_to_r2():
    spec = family(EX2)
    worst = 0.0
    for x in np.linspace(0.05, 0.6, 8):
        for y in np.linspace(x + 0.05, 0.95, 8):
            for sgn in (1, -1):
                worst = max(worst, abs(r1(spec, x, y, y + sgn * 1e-9) - r2(spec, x, y)))
    assert worst < 1e-5
    assert abs(r1(spec, 0.2, 0.7, 0.7 + 1e-9) - r2(spec, 0.2, 0.7)) < 1e-6


def test_r1_degenerate():
    with pytest.raises(DegenerateArguments):
        r1(family(EX2), 0.4, 0.4, 0.4)


def _literal_profile(spec, x):
    """Chain functionals transcribed term by term (l >= 1, or s - l odd)."""
    s = len(x) - 1
    R = {l: r1(spec, x[l - 1], x[l + 1], x[l]) for l in range(1, s)}
    iota = lambda i: i % 2
    F, A = {}, {}
    for l in range(s + 1):
        sg = (-1) ** (s - l)
        if l == 0 and sg == 1:
            continue
        val = r2(spec, x[l - sg], x[l])
        for i in range(1, (s - l - iota(s - l)) // 2 + 1):
            val *= (R[s + 1 - 2 * i] / R[s - 2 * i]) ** sg
        F[l] = val
    for l in range(1, s):
        sg = (-1) ** (s - l)
        val = r1(spec, x[l], x[l - sg], x[l + sg])
        for i in range(1, (s - l - iota(s - l)) // 2 + 1):
            val *= (R[s - 2 * i] / R[s + 1 - 2 * i]) ** sg
        A[l] = val
    return F, A


@st.composite
def chains(draw, s):
    inner = sorted(draw(st.lists(st.floats(0.02, 0.98), min_size=s - 1, max_size=s - 1,
                                 unique=True)))
    assume(all(b - a > 1e-3 for a, b in zip([0.0] + inner, inner + [1.0])))
    return (0.0, *inner, 1.0)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), s=st.integers(1, 5))
def test_profile_matches_literal_formulas(data, s):
    x = data.draw(chains(s))
    spec = family(EX3)
    prof = chain_profile(spec, Chain(x))
    F, A = _literal_profile(spec, x)
    for l, v in F.items():
        assert prof.F[l] == pytest.approx(v, rel=1e-11)
    for l, v in A.items():
        assert prof.A[l] == pytest.approx(v, rel=1e-11)
    # maxima recomputed from the stored entries
    zc = [prof.F[l] for l in range(s + 1) if (s - l) % 2] + [prof.A[l] for l in prof.A if (s - l) % 2 == 0]
    yc = [prof.F[l] for l in range(s + 1) if (s - l) % 2 == 0] + [prof.A[l] for l in prof.A if (s - l) % 2]
    assert prof.Z == max(zc) and prof.Y == max(yc)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), s=st.integers(1, 5))
def test_parity_duality_identity(data, s):
    # the F_l form and the F_{l-1} form of each block equation coincide
    x = data.draw(chains(s))
    spec = family(EX5)
    prof = chain_profile(spec, Chain(x))
    for l in range(1, s + 1):
        lhs = r2(spec, x[l - 1], x[l]) / prof.F[l]
        rhs = prof.F[l - 1] / r2(spec, x[l], x[l - 1]) if prof.F[l - 1] > 0 else None
        if rhs is not None:
            assert lhs == pytest.approx(rhs, rel=1e-9)


def test_profile_single_block():
    spec = family(EX2)
    for x0, x1 in ((0.0, 0.7), (0.3, 0.95), (0.2, 1.0)):
        prof = chain_profile(spec, Chain((x0, x1)))
        assert prof.F[1] == r2(spec, x0, x1) and prof.F[0] == r2(spec, x1, x0)
        assert prof.Z == prof.F[0] and prof.Y == prof.F[1] and prof.A == {}


def test_profile_example_two_sources():
    prof = chain_profile(family(EX2), Chain((0, 0.9345, 0.975, 1)))
    # the maximum defining Z ranges over F_0, F_2, A_1 and the one defining Y over
    # F_1, F_3, A_2; the binding entries are F_2 and A_2
    assert prof.Z_source == ("F", 2) and prof.Y_source == ("A", 2)
    assert all(v > 0 for v in prof.F[1:]) and all(v > 0 for v in prof.A.values())


def test_profile_rejects_coincident_points():
    with pytest.raises(ChainNotStrict):
        chain_profile(family(EX2), Chain((0, 0.5, 0.5, 1)))


def test_hF():
    assert hF(pure(3), 0.0, 1.0) == pytest.approx(4 - 6 * math.log(2), abs=1e-14)
    assert abs(hF(family(EX2), 0.5, 0.5 + 1e-6)) < 1e-9
    assert hF(pure(2), 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_hbar_example_brackets():
    assert hbar(family(EX3), "h1L", 0.929) <= 0 <= hbar(family(EX3), "h1L", 0.93)
    assert hbar(family(EX5), "h3U", 0.97) <= 0 <= hbar(family(EX5), "h3U", 0.972)
    assert hbar(family(EX4), "h3U", 0.9714) <= 0 <= hbar(family(EX4), "h3U", 0.9715)


def test_hbar_argument_order():
    with pytest.raises(ArgumentOrder):
        hbar(family(EX3), "h2U", 0.95, 0.94)


def test_bracket_huge_finite_z():
    for z in (1e17, 1e200, 1.7e308):
        assert -1e-14 < bracket(z) <= 0.0
        assert bracket_array([z])[0] == pytest.approx(bracket(z), abs=1e-300)
