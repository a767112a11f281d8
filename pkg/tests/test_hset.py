import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import EX2, EX3, EX4, EX5, context, family, pure
from parisi_zero.errors import NotFound
from parisi_zero.hset import condition_kappa, find_extremal, extremal_point, tilde_chain
from parisi_zero.kernels import Chain, h, hbar, r2

EX2_CHAIN = (0.0, 0.9345, 0.975, 1.0)


def test_example_two_chain_is_member():
    rep = condition_kappa(family(EX2), EX2_CHAIN)
    assert rep.satisfied
    assert len(rep.margins) == 3
    assert all(m > 1e-10 for pair in rep.margins for m in pair)


def test_example_three_chain_is_not_member():
    rep = condition_kappa(family(EX3), (0.0, 0.93))
    assert not rep.satisfied
    assert hbar(family(EX3), "h1L", 0.93) >= 0


def test_coincident_chain_reported_not_raised():
    rep = condition_kappa(family(EX2), (0.0, 0.5, 0.5, 1.0))
    assert not rep.satisfied and rep.reason.startswith("ChainNotStrict")


def test_pure_three_spin_unit_chain():
    rep = condition_kappa(pure(3), (0.0, 1.0))
    assert rep.satisfied
    assert rep.margins[0][0] == pytest.approx(1.0, abs=1e-15)            # h(0, 1, inf)
    assert rep.margins[0][1] == pytest.approx(6 * math.log(2) - 4, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.0, 0.95), gap=st.floats(0.02, 1.0))
def test_single_block_margins_reduce_to_kernel_pair(a, gap):
    b = min(a + gap, 1.0)
    spec = family(EX3)
    rep = condition_kappa(spec, (a, b))
    mz, my = rep.margins[0]
    rba = r2(spec, b, a)
    z_arg = 1.0 / rba if rba > 0 else "infinity"
    assert mz == pytest.approx(h(spec, a, b, z_arg), abs=1e-13)
    assert my == pytest.approx(-h(spec, a, b, r2(spec, a, b)), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e-12, 1e-12), min_size=2, max_size=2))
def test_membership_stable_under_tiny_perturbation(eps):
    x = (0.0, 0.9345 + eps[0], 0.975 + eps[1], 1.0)
    assert condition_kappa(family(EX2), x).satisfied


def test_extremal_example_three():
    spec = family(EX3)
    ep = find_extremal(spec, 1, "first", "max_last", context(spec))
    q = ep.chain.values
    assert q[0] == 0.0 and 0.929 <= q[1] <= 0.93
    assert abs(hbar(spec, "h1L", q[1])) < 1e-10
    assert ep.report.satisfied and ep.report.min_margin <= 1e-9


def test_extremal_example_four():
    spec = family(EX4)
    ch = extremal_point(spec, 1, "last", "min_first", context(spec))
    q = ch.values
    assert q[1] == 1.0 and 0.9714 <= q[0] <= 0.9715
    assert abs(hbar(spec, "h3U", q[0])) < 1e-10


def test_extremal_both_pinned_pure_three():
    assert extremal_point(pure(3), 1, "both").values == (0.0, 1.0)


def test_extremal_not_found_carries_resolution():
    with pytest.raises(NotFound) as info:
        find_extremal(pure(3), 2, "both", ctx=context(pure(3)))
    assert info.value.details["resolution"] > 0


@pytest.mark.parametrize("free,s,fixed,objective", [
    (EX3, 2, "last", "min_first"), (EX4, 2, "first", "max_last"),
    (EX5, 1, "none", "max_last"), (EX2, 2, "last", "min_first"),
])
def test_extremal_points_are_active_members(free, s, fixed, objective):
    spec = family(free)
    ep = find_extremal(spec, s, fixed, objective, context(spec))
    assert ep.report.satisfied
    assert ep.report.min_margin <= 1e-9


def test_relation_example_three():
    spec = family(EX3)
    v = tilde_chain(spec, (1, 2), context(spec))
    assert v.holds
    first, last = v.witnesses
    assert first[0][-1] <= 0.93 < 0.9352 <= last[0][0]


def test_relation_example_four():
    spec = family(EX4)
    v = tilde_chain(spec, (2, 1), context(spec))
    assert v.holds
    first, last = v.witnesses
    assert first[0][-1] <= 0.97139 < 0.9714 <= last[0][0]


def test_relation_example_five():
    spec = family(EX5)
    assert tilde_chain(spec, (1, 1, 1), context(spec)).holds


def test_single_part_is_both_pinned_nonemptiness():
    for spec, s in ((family(EX2), 3), (family(EX3), 3), (family(EX3), 2), (pure(3), 1)):
        holds = tilde_chain(spec, (s,), context(spec)).holds
        try:
            find_extremal(spec, s, "both", ctx=context(spec))
            nonempty = True
        except NotFound:
            nonempty = False
        assert holds == nonempty


def test_relation_fails_with_reason():
    spec = family(EX2)
    v = tilde_chain(spec, (1, 2), context(spec))
    assert not v.holds and v.reason
