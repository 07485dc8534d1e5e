import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massart_sq import discrete_gaussian as dg
from massart_sq.gaussian_core import gaussian_moment

SIGMA_GRID = (0.5, 0.4, 0.3, 0.2, 0.1)


def test_unit_lattice_atom_at_origin():
    pts, mass = dg.atoms(dg.DiscreteGaussianSpec(1.0, 0.0))
    i = int(np.argmin(np.abs(pts)))
    assert pts[i] == 0.0
    assert mass[i] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_offset_lattice_misses_origin():
    pts, _ = dg.atoms(dg.DiscreteGaussianSpec(0.5, 0.25))
    assert np.min(np.abs(pts)) == pytest.approx(0.25)


def test_unit_lattice_total_mass_by_direct_sum():
    ref = math.fsum(math.exp(-0.5 * n * n) / math.sqrt(2 * math.pi) for n in range(-40, 41))
    assert dg.moment(dg.DiscreteGaussianSpec(1.0), 0) == pytest.approx(ref, rel=1e-14)
    # sigma = 1 is coarse enough that the total mass visibly differs from one
    assert abs(ref - 1) > 1e-9


def test_atoms_are_increasing_and_positive():
    pts, mass = dg.atoms(dg.DiscreteGaussianSpec(0.3, 0.1))
    assert np.all(np.diff(pts) > 0)
    assert np.all(mass > 0)
    assert np.all(np.abs(pts) <= 40)


def test_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        dg.DiscreteGaussianSpec(0.0)
    with pytest.raises(ValueError):
        dg.DiscreteGaussianSpec(-1.0)


def test_rejects_order_above_cap():
    with pytest.raises(ValueError):
        dg.moment(dg.DiscreteGaussianSpec(0.2), 40)


def test_symmetric_lattice_first_moment():
    assert abs(dg.moment(dg.DiscreteGaussianSpec(0.2, 0.0), 1)) <= 1e-14


def test_offset_lattice_second_moment():
    assert dg.moment(dg.DiscreteGaussianSpec(0.2, 0.07), 2) == pytest.approx(1.0, abs=1e-6)


def test_coarse_lattice_fourth_moment_gap_visible():
    val = dg.moment(dg.DiscreteGaussianSpec(1.0, 0.3), 4)
    pts = np.arange(-40, 41) + 0.3
    ref = math.fsum((p**4 * math.exp(-0.5 * p * p) / math.sqrt(2 * math.pi) for p in pts))
    assert val == pytest.approx(ref, rel=1e-13)
    assert abs(val - 3) > 1e-7


def test_gaussian_reference_moment():
    assert gaussian_moment(4) == 3


def test_gap_shrinks_with_spacing_at_sixth_moment():
    # At these spacings the true gap is below double precision; use a coarser pair
    # where the comparison is visible, plus the required pair up to noise.
    g_fine = dg.moment_gap(dg.DiscreteGaussianSpec(0.2), 6)
    g_coarse = dg.moment_gap(dg.DiscreteGaussianSpec(0.4), 6)
    assert g_fine <= g_coarse + 1e-14
    assert dg.moment_gap(dg.DiscreteGaussianSpec(0.8), 6) < dg.moment_gap(dg.DiscreteGaussianSpec(1.2), 6)


def test_total_mass_gap_over_offsets():
    s = 0.25
    worst = max(dg.moment_gap(dg.DiscreteGaussianSpec(s, f * s), 0) for f in (0, 0.25, 0.5))
    assert worst <= 1e-10


def test_gap_envelope_on_grid():
    prof = dg.moment_gap_profile(SIGMA_GRID, (0.0, 1 / 3, 0.5), 8)
    for i, s in enumerate(SIGMA_GRID):
        for t in range(9):
            assert prof.worst_over_theta()[i, t] <= dg.gap_envelope(s, t) + 1e-12


def test_gap_monotone_in_spacing():
    prof = dg.moment_gap_profile(SIGMA_GRID, (0.0, 1 / 3, 0.5), 8)
    assert prof.monotone_in_sigma(1e-14).all()


def test_gap_monotone_on_coarse_grid_where_gaps_are_visible():
    prof = dg.moment_gap_profile((1.6, 1.3, 1.0, 0.8), (0.0, 0.5), 4)
    assert prof.worst_over_theta()[0, 0] > 1e-6
    assert prof.monotone_in_sigma(0.0)[[0, 2, 4]].all()


def test_profile_rejects_sigma_out_of_range():
    with pytest.raises(ValueError):
        dg.moment_gap_profile([2.5])


def test_truncation_bound_dominates_dropped_mass():
    spec = dg.DiscreteGaussianSpec(0.5, 0.1, r_trunc=3.0)
    full = dg.DiscreteGaussianSpec(0.5, 0.1, r_trunc=40.0)
    dropped = dg.moment(full, 0) - dg.moment(spec, 0)
    assert 0 < dropped <= spec.truncation_bound()


@settings(max_examples=40, deadline=None)
@given(sigma=st.floats(0.05, 0.3), frac=st.floats(0.0, 1.0))
def test_total_mass_near_one_for_fine_spacing(sigma, frac):
    assert dg.moment(dg.DiscreteGaussianSpec(sigma, frac * sigma), 0) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(sigma=st.floats(0.05, 0.3), frac=st.floats(0.0, 1.0), t=st.integers(0, 8))
def test_envelope_holds_for_random_offsets(sigma, frac, t):
    gap = dg.moment_gap(dg.DiscreteGaussianSpec(sigma, frac * sigma), t)
    assert gap <= dg.gap_envelope(sigma, t) + 1e-12


@settings(max_examples=30, deadline=None)
@given(sigma=st.floats(0.1, 1.5), theta=st.floats(-3, 3))
def test_offset_by_full_period_is_same_measure(sigma, theta):
    a = dg.moment(dg.DiscreteGaussianSpec(sigma, theta), 2)
    b = dg.moment(dg.DiscreteGaussianSpec(sigma, theta + sigma), 2)
    assert a == pytest.approx(b, rel=1e-12)
