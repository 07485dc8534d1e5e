import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massart_sq import hermite_correlation as hc
from massart_sq.massart_measures import PiecewiseGaussianMeasure, l1_norm
from oracles import correlated_expectation_chi, mp_hermite_integral, rectangle_chi


def _ratio_pieces(meas):
    l1 = l1_norm(meas)
    return meas.lo, meas.hi, meas.coeff * meas.weight / l1


@pytest.fixture(scope="module")
def single():
    return PiecewiseGaussianMeasure(1.0, np.array([0.3]), np.array([1.7]), np.array([1.0]))


@pytest.fixture(scope="module")
def symmetric():
    return PiecewiseGaussianMeasure(
        2.0, np.array([-2.0, -0.5, 1.0]), np.array([-1.0, 0.5, 2.0]), np.array([1.0, 3.0, 1.0])
    )


def test_zeroth_coefficient_is_mass(desk_pair):
    exp = hc.hermite_coefficients(desk_pair.plus)
    assert exp.coeffs[0] == pytest.approx(exp.l1, rel=1e-12)
    assert exp.normalized[0] == pytest.approx(1.0, abs=1e-10)


def test_symmetric_measure_has_no_odd_coefficients(symmetric):
    exp = hc.hermite_coefficients(symmetric)
    assert np.all(np.abs(exp.normalized[1::2]) < 1e-10)


def test_third_coefficient_matches_quadrature(desk_pair):
    meas = desk_pair.plus
    # a_3 nearly cancels across pieces, so compare piece by piece and bound
    # the total by the rounding budget of the sum
    sel = np.flatnonzero(np.abs(meas.lo) < 8)
    ints = hc.normalized_hermite_integrals(3, meas.lo[sel], meas.hi[sel])[3]
    refs = [mp_hermite_integral(3, meas.lo[i], meas.hi[i]) for i in sel]
    np.testing.assert_allclose(ints, refs, rtol=1e-8, atol=1e-300)
    terms = meas.coeff * meas.weight[sel] * np.array(refs)
    budget = 1e-13 * float(np.sum(np.abs(terms)))
    got = math.fsum((meas.coeff * meas.weight[sel] * ints).tolist())
    assert abs(got - math.fsum(terms.tolist())) <= budget


@pytest.mark.parametrize("n", [1, 3, 8, 20])
def test_single_interval_coefficients(single, n):
    exp = hc.hermite_coefficients(single)
    assert exp.coeffs[n] == pytest.approx(mp_hermite_integral(n, 0.3, 1.7), rel=1e-9, abs=1e-14)


def test_rejects_order_above_cap(single):
    with pytest.raises(ValueError):
        hc.hermite_coefficients(single, N=65)


def test_truncated_gaussian_has_zero_chi_squared():
    meas = PiecewiseGaussianMeasure(1.0, np.array([-40.0]), np.array([40.0]), np.array([1.0]))
    assert abs(hc.chi_squared(meas)) < 1e-14
    assert abs(hc.chi_squared(meas, "series")) < 1e-14


def test_single_interval_chi_squared(single):
    mass = float(mpmath.ncdf(1.7) - mpmath.ncdf(0.3))
    assert hc.chi_squared(single) == pytest.approx(1 / mass - 1, rel=1e-12)


def test_series_chi_squared_approaches_closed_form_from_below():
    meas = PiecewiseGaussianMeasure(1.0, np.array([-1.0, 0.2]), np.array([0.0, 2.0]), np.array([2.0, 1.0]))
    closed = hc.chi_squared(meas)
    partial = [hc.chi_squared(meas, "series", N) for N in (8, 16, 32, 64)]
    assert all(a <= b for a, b in zip(partial, partial[1:]))
    assert partial[-1] <= closed + 1e-12
    # jumps in the weight make the coefficients decay algebraically
    assert closed - partial[-1] < closed - partial[0]


def test_unknown_method_rejected(single):
    with pytest.raises(ValueError):
        hc.chi_squared(single, "fourier")


def test_desk_plus_chi_squared_bounded_by_density_ratio(desk_pair):
    prm = desk_pair.params
    chi = hc.chi_squared(desk_pair.plus)
    assert 0 < chi <= (4 * prm.C * prm.ratio / desk_pair.l1_plus) ** 2


def test_parseval(desk_pair, lift_pair):
    for meas in (desk_pair.plus, desk_pair.minus, lift_pair.plus, lift_pair.minus):
        exp = hc.hermite_coefficients(meas)
        assert float(np.sum(exp.normalized**2)) <= 1 + exp.chi2 + 1e-10


def test_correlation_at_zero_and_one(lift_pair):
    ea = hc.hermite_coefficients(lift_pair.plus)
    assert hc.pairwise_correlation(ea, ea, 0.0) == 0.0
    meas = PiecewiseGaussianMeasure(1.0, np.array([-1.0, 0.2]), np.array([0.0, 2.0]), np.array([2.0, 1.0]))
    es = hc.hermite_coefficients(meas)
    assert hc.pairwise_correlation(es, es, 1.0) == pytest.approx(hc.chi_squared(meas, "series"), rel=1e-14)


def test_correlation_rejects_cosine_above_one(single):
    exp = hc.hermite_coefficients(single)
    with pytest.raises(ValueError):
        hc.pairwise_correlation(exp, exp, 1.01)


def test_single_interval_correlation_matches_oracles(single):
    exp = hc.hermite_coefficients(single)
    got = hc.pairwise_correlation(exp, exp, 0.3)
    pieces = _ratio_pieces(single)
    assert got == pytest.approx(0.2298875677, rel=1e-9)
    assert got == pytest.approx(correlated_expectation_chi(*pieces, *pieces, 0.3), rel=1e-8)
    assert got == pytest.approx(rectangle_chi(*pieces, *pieces, 0.3), rel=1e-5)


@pytest.mark.parametrize("sides", [("plus", "plus"), ("plus", "minus"), ("minus", "minus")])
def test_coarse_pair_correlation_matches_oracle(lift_pair, sides):
    ma, mb = (getattr(lift_pair, s) for s in sides)
    ea, eb = hc.hermite_coefficients(ma), hc.hermite_coefficients(mb)
    got = hc.pairwise_correlation(ea, eb, 0.3)
    ref = correlated_expectation_chi(*_ratio_pieces(ma), *_ratio_pieces(mb), 0.3, nodes=60)
    assert got == pytest.approx(ref, rel=1e-4)


def test_coarse_pair_frozen_correlation(lift_pair):
    ea = hc.hermite_coefficients(lift_pair.plus)
    eb = hc.hermite_coefficients(lift_pair.minus)
    assert hc.pairwise_correlation(ea, ea, 0.3) == pytest.approx(1.28033e-9, rel=1e-4)
    assert hc.pairwise_correlation(ea, eb, 0.3) == pytest.approx(-9.08e-10, rel=1e-2)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(-1, 1))
def test_sign_flip_negates_odd_terms_only(single, t):
    exp = hc.hermite_coefficients(single)
    a = exp.normalized
    n = np.arange(len(a))
    even = math.fsum((a[2::2] ** 2 * t ** n[2::2]).tolist())
    plus = hc.pairwise_correlation(exp, exp, t)
    minus = hc.pairwise_correlation(exp, exp, -t)
    assert 0.5 * (plus + minus) == pytest.approx(even, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(-1, 1))
def test_symmetric_measure_correlation_even_in_t(symmetric, t):
    exp = hc.hermite_coefficients(symmetric)
    assert hc.pairwise_correlation(exp, exp, t) == pytest.approx(
        hc.pairwise_correlation(exp, exp, -t), abs=1e-13
    )


def test_tail_bound_shrinks_with_t(lift_pair):
    ea = hc.hermite_coefficients(lift_pair.plus)
    assert hc.correlation_tail_bound(ea, ea, 0.2) < hc.correlation_tail_bound(ea, ea, 0.45)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_correlation_check_passes_at_desk(desk_pair, k):
    for meas in (desk_pair.plus, desk_pair.minus):
        rep = hc.correlation_lemma_check(meas, k)
        assert rep.ok
        assert all(r.margin >= 0 for r in rep.rows)


def test_correlation_check_at_origin(desk_pair):
    rep = hc.correlation_lemma_check(desk_pair.plus, 4, (0.0,))
    assert rep.rows[0].lhs == 0.0 and rep.ok


def test_correlation_check_rhs_first_term_shrinks_with_k(desk_pair):
    exp = hc.hermite_coefficients(desk_pair.plus)
    first = [0.3 ** (k + 1) * exp.chi2 for k in (2, 4, 6)]
    assert first[0] > first[1] > first[2]


def test_correlation_check_rejects_large_grid(desk_pair):
    with pytest.raises(ValueError):
        hc.correlation_lemma_check(desk_pair.plus, 4, (0.5,))


def test_nu_envelope_dominates_raw(desk_pair):
    exp = hc.hermite_coefficients(desk_pair.minus)
    assert exp.nu_envelope(6) >= exp.nu(6) >= 0
    assert exp.nu(0) == 0.0
