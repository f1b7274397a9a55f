from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import gf2, lagrangian as lg
from cliffdesign.hamming import column_bound, defect_shift_prob, pair_prob, preserve_prob


def test_identity_preserves_everything():
    rep = preserve_prob(lg.permutation_matrix((0, 1, 2, 3)))
    assert rep.probability == 1 and not rep.applicable


def test_anti_identity_saturates():
    rep = preserve_prob(lg.anti_identity(6))
    assert rep.probability == Fraction(13, 16)
    assert rep.bound == Fraction(13, 16)
    assert rep.saturated and rep.column_weight == 5
    assert rep.as_dict()["probability_exact"] == "13/16"


def test_column_bound():
    assert column_bound(2) == column_bound(4) == Fraction(1, 2)
    assert column_bound(5) == Fraction(1, 2) + Fraction(20, 64)
    with pytest.raises(ValueError):
        column_bound(0)


def test_pair_prob():
    assert pair_prob(lg.enumerate_sigma(4)[3]).probability == 1
    rep = pair_prob(lg.defect_element(4))
    assert rep.probability == Fraction(7, 8) and rep.saturated


@pytest.mark.parametrize("t", [4, 5])
def test_pair_prob_bound(t):
    for T in lg.enumerate_sigma(t):
        if not T.is_permutation:
            assert pair_prob(T).probability <= Fraction(7, 8)


def test_defect_shift():
    N = gf2.subspace([0b1111], 4)
    assert defect_shift_prob(N, 0b1111) == Fraction(3, 4)
    assert defect_shift_prob(N, 0) == 1
    with pytest.raises(ValueError):
        defect_shift_prob(N, 0b0011)


def test_weight_one_shift_never_preserves():
    # shifting by a weight-one vector moves every weight by exactly one
    assert defect_shift_prob(gf2.full(1), 1) == 0


@given(st.sampled_from(lg.enumerate_Ot(6)))
def test_preserve_below_bound(O):
    rep = preserve_prob(O)
    assert rep.probability <= rep.bound
    if O.is_permutation():
        assert rep.probability == 1
