import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T_SMALL, W_SMALL, quad_transform
from ddequiv.channel import PhysicalChannel, ScattererDensity
from ddequiv.ongrid import (
    CSV_HEADER,
    U_TAPS,
    V_TAPS,
    GridSpec,
    OrientationError,
    TapMatrix,
    TruncationPolicy,
    TruncationWarning,
    compute_taps,
    compute_taps_continuous,
    compute_taps_discrete,
    read_taps,
    reconstruct_spread,
    spread_report,
    tap_gains,
)
from ddequiv.windows import QuadratureWarning, WindowPair, hamming, raised_cosine, rect

T, W = T_SMALL, W_SMALL
GRID = GridSpec(T, W)
RECT_A = WindowPair(rect("time", T), rect("frequency", W))
RECT_B = WindowPair(rect("frequency", W), rect("time", T))
SMOOTH_A = WindowPair(hamming("time", T), raised_cosine("frequency", W, 0.2))
RC_A = WindowPair(raised_cosine("time", T, 0.5), raised_cosine("frequency", W, 0.5))


def path(g, d_bins, k_bins):
    return PhysicalChannel.from_paths([(g, d_bins / W, k_bins / T)])


def quiet(fn, *a, **k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return fn(*a, **k)


# --- discrete taps ------------------------------------------------------------

def test_on_grid_path_single_tap():
    taps = compute_taps_discrete(path(0.8 - 0.3j, 5, -3), RECT_A)
    mag = np.abs(taps.gains)
    assert taps.at(-3, 5) == pytest.approx((0.8 - 0.3j) * T * W, rel=1e-14)
    mag[-3 - taps.kappa_min, 5 - taps.d_min] = 0
    assert mag.max() < 1e-12 * abs(0.8 - 0.3j) * T * W
    assert not taps.capped


def test_half_grid_path_four_equal_peaks():
    taps = quiet(compute_taps_discrete, path(1.0, 25.5, 15.5), RECT_A)
    expect = (2 / math.pi) ** 2 * T * W
    for k, d in [(15, 25), (16, 25), (15, 26), (16, 26)]:
        assert abs(taps.at(k, d)) == pytest.approx(expect, rel=1e-12)
    # symmetric about the half-grid point
    for dk, dd in [(2, 0), (0, 3), (4, 7)]:
        a = abs(taps.at(16 + dk, 26 + dd))
        b = abs(taps.at(15 - dk, 25 - dd))
        assert a == pytest.approx(b, rel=1e-12)


def test_taps_match_quadrature_of_tap_integral():
    ch = path(0.6 + 0.4j, 3.3, -1.7)
    taps = quiet(compute_taps_discrete, ch, SMOOTH_A, GRID)
    g, tau, nu = ch.arrays()
    for k, d in [(-2, 3), (-1, 4), (3, -2), (-7, 10)]:
        ref = g[0] * quad_transform(SMOOTH_A.time_window, k / T - nu[0]) \
            * quad_transform(SMOOTH_A.freq_window, d / W - tau[0])
        assert abs(taps.at(k, d) - ref) <= 1e-9 * abs(taps.gains).max()


def test_superposition_on_forced_window():
    pol = TruncationPolicy(rel_floor=0.0, force_kappa=(-40, 40), force_d=(-30, 60), max_index=16)
    c1, c2 = path(1.0, 3.2, 4.7), path(0.3j, 20.9, -6.1)
    t1, t2, t12 = (quiet(compute_taps_discrete, c, SMOOTH_A, GRID, pol) for c in (c1, c2, c1 | c2))
    assert t1.gains.shape == t12.gains.shape and t1.kappa_min == t12.kappa_min
    err = t12.gains - t1.gains - t2.gains
    assert np.sum(np.abs(err) ** 2) / np.sum(np.abs(t12.gains) ** 2) < 1e-24


@settings(max_examples=30, deadline=None)
@given(d=st.floats(0, 60), k=st.floats(-30, 30), phase=st.floats(0, 1))
def test_convention_bridge_magnitudes(d, k, phase):
    ch = path(np.exp(2j * np.pi * phase), d, k)
    kappa, dd = np.arange(-40, 41), np.arange(-10, 75)
    V = tap_gains(ch, RECT_A, GRID, kappa, dd)
    U = tap_gains(ch, RECT_B, GRID, kappa, dd)
    assert np.max(np.abs(np.abs(U) - np.abs(V))) <= 1e-12 * T * W
    # orientation b carries the U weight: exactly the V taps times exp(-j 2 pi nu tau)
    np.testing.assert_allclose(U, V * np.exp(-2j * np.pi * (k / T) * (d / W)),
                               atol=1e-12 * T * W)


def test_grid_shift_covariance():
    kappa, dd = np.arange(-30, 31), np.arange(-20, 41)
    base = np.abs(tap_gains(path(1.0, 7.3, 2.6), RECT_A, GRID, kappa, dd))
    moved = np.abs(tap_gains(path(1.0, 7.3 + 5, 2.6 - 3), RECT_A, GRID, kappa - 3, dd + 5))
    np.testing.assert_allclose(moved, base, atol=1e-12 * T * W)


def test_truncation_monotone_in_epsilon():
    ch = path(1.0, 10.37, -4.61) | path(0.5j, 30.8, 7.2)
    energy = []
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        taps = quiet(compute_taps_discrete, ch, SMOOTH_A, GRID, TruncationPolicy(rel_floor=eps))
        energy.append(float(np.sum(np.abs(taps.retained_gains()) ** 2)))
        peak = np.abs(taps.gains).max()
        assert np.all(np.abs(taps.gains[taps.retained]) >= eps * peak)
    assert all(b >= a for a, b in zip(energy, energy[1:]))


def test_truncation_bound_tracks_policy():
    ch = path(1.0, 10.37, -4.61)
    loose = quiet(compute_taps_discrete, ch, RC_A, GRID, TruncationPolicy(1e-2, 1e-2))
    tight = quiet(compute_taps_discrete, ch, RC_A, GRID, TruncationPolicy(1e-8, 1e-10))
    assert tight.truncation_bound < loose.truncation_bound
    assert tight.truncation_bound < 1e-9


def test_cap_warns_for_rect_sinc_tails():
    with pytest.warns(TruncationWarning):
        taps = compute_taps_discrete(path(1.0, 5.5, 2.5), RECT_A, GRID,
                                     TruncationPolicy(max_index=32))
    assert taps.capped
    assert taps.kappa_range[1] - taps.kappa_range[0] <= 2 * 32 + 1


def test_orientation_mismatch_rejected():
    with pytest.raises(OrientationError):
        compute_taps_discrete(path(1.0, 1, 1), RECT_A, GRID, convention=U_TAPS)
    with pytest.raises(OrientationError):
        compute_taps_discrete(path(1.0, 1, 1), RECT_B, GRID, convention=V_TAPS)
    assert compute_taps_discrete(path(1.0, 1, 1), RECT_B, GRID).convention == U_TAPS


def test_window_wider_than_grid_rejected():
    wide = WindowPair(rect("time", 2 * T), rect("frequency", W))
    with pytest.raises(ValueError):
        compute_taps_discrete(path(1.0, 1, 1), wide, GRID)


def test_empty_channel_gives_zero_taps():
    taps = compute_taps_discrete(PhysicalChannel(), RECT_A, GRID)
    assert np.all(taps.gains == 0)


# --- continuous scatterers ---------------------------------------------------

def tent_density(nu0, tau0, half_nu, half_tau, g=1.0, n=41):
    nu = nu0 + np.linspace(-half_nu, half_nu, n)
    tau = tau0 + np.linspace(-half_tau, half_tau, n)
    a = 1 - np.abs(nu - nu0) / half_nu
    b = 1 - np.abs(tau - tau0) / half_tau
    vals = np.outer(a, b) / (half_nu * half_tau)  # unit integral
    return ScattererDensity(nu, tau, g * vals)


def test_narrow_tent_approaches_on_grid_path():
    pol = TruncationPolicy(rel_floor=1e-6, max_index=64)
    disc = compute_taps_discrete(path(1.0, 8, 3), RECT_A, GRID, pol)
    errs = []
    for width in (0.2, 0.1, 0.05):
        dens = tent_density(3 / T, 8 / W, width / T, width / W)
        taps = quiet(compute_taps_continuous, dens, RECT_A, GRID, pol)
        assert not taps.coarse
        errs.append(abs(taps.at(3, 8) - disc.at(3, 8)) / abs(disc.at(3, 8)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_zero_density_gives_zero_taps():
    dens = ScattererDensity([0.0, 1.0], [0.0, 1e-6], np.zeros((2, 2)))
    taps = compute_taps(PhysicalChannel(density=dens), RECT_A, GRID)
    assert np.all(taps.gains == 0)


def tent(x, x0, half):
    return np.clip(1 - np.abs(x - x0) / half, 0.0, None) / half


def test_density_linearity():
    pol = TruncationPolicy(rel_floor=0.0, force_kappa=(-20, 20), force_d=(-10, 40), max_index=8)
    nu = np.linspace(-6 / T, 9 / T, 601)
    tau = np.linspace(5 / W, 26 / W, 841)
    va = np.outer(tent(nu, -5.2 / T, 0.5 / T), tent(tau, 6.1 / W, 0.5 / W))
    vb = 0.5j * np.outer(tent(nu, 7.7 / T, 0.3 / T), tent(tau, 25.4 / W, 0.4 / W))
    ta, tb, tab = (quiet(compute_taps_continuous, ScattererDensity(nu, tau, v), SMOOTH_A, GRID, pol)
                   for v in (va, vb, va + vb))
    assert not tab.coarse
    err = tab.gains - ta.gains - tb.gains
    assert np.sum(np.abs(err) ** 2) / np.sum(np.abs(tab.gains) ** 2) < 1e-10


def test_coarse_density_flagged():
    # a Doppler ramp far wider than the grid spacing, sampled at only 5 points
    nu = np.linspace(-40 / T, 40 / T, 5)
    tau = np.linspace(0, 3 / W, 5)
    vals = np.outer(np.cos(np.linspace(0, 3, 5)), np.ones(5)) * (1 + 0.5j)
    with pytest.warns(QuadratureWarning):
        taps = quiet(compute_taps_continuous, ScattererDensity(nu, tau, vals), RECT_A, GRID,
                     TruncationPolicy(max_index=64))
    assert taps.coarse


def test_density_orientation_b_uses_u_weights():
    dens = tent_density(2.3 / T, 4.6 / W, 0.2 / T, 0.2 / W)
    pol = TruncationPolicy(rel_floor=0.0, force_kappa=(-5, 10), force_d=(0, 10), max_index=8)
    va = quiet(compute_taps_continuous, dens, RECT_A, GRID, pol)
    ub = quiet(compute_taps_continuous, dens, RECT_B, GRID, pol)
    assert ub.convention == U_TAPS
    # a narrow tent behaves like a point scatterer: U ~ V exp(-j 2 pi nu tau)
    ratio = ub.at(2, 5) / va.at(2, 5)
    assert ratio == pytest.approx(np.exp(-2j * np.pi * 2.3 / T * 4.6 / W), abs=2e-3)


# --- reconstruction ----------------------------------------------------------

def test_reconstruction_constant_at_grid_point():
    taps = quiet(compute_taps_discrete, path(1.0, 25.5, 15.5), RECT_A)
    g = taps.grid
    raw = reconstruct_spread(taps, g.nu(16), g.tau(25), as_printed=True)
    assert raw == pytest.approx(math.pi**2 * taps.at(16, 25), rel=1e-12)
    assert reconstruct_spread(taps, g.nu(16), g.tau(25)) == pytest.approx(taps.at(16, 25), rel=1e-12)


def direct_spread(ch, windows, nu, tau):
    g, t0, n0 = ch.arrays()
    from ddequiv.windows import window_transform
    return g[0] * window_transform(windows.time_window, nu - n0[0]) \
        * window_transform(windows.freq_window, tau - t0[0])


def test_reconstruction_off_grid_smooth_windows(rng):
    ch = path(0.9 + 0.2j, 12.37, 3.81)
    windows = WindowPair(raised_cosine("time", T, 0.5, 0.1 * T),
                         raised_cosine("frequency", W, 0.5, -0.2 * W))
    grid = GridSpec.from_windows(windows)
    taps = quiet(compute_taps_discrete, ch, windows, grid,
                 TruncationPolicy(rel_floor=1e-12, energy_deficit=1e-14))
    nu = rng.uniform(-5, 12, 100) / T
    tau = rng.uniform(5, 20, 100) / W
    got = reconstruct_spread(taps, nu, tau)
    ref = direct_spread(ch, windows, nu, tau)
    peak = np.abs(taps.gains).max()
    assert np.max(np.abs(got - ref)) < 1e-6 * peak


def test_reconstruction_rect_converges_with_truncation(rng):
    # sinc tails decay like 1/K, so the reconstruction error shrinks as the cap grows
    ch = path(1.0, 12.37, 3.81)
    nu = rng.uniform(-5, 12, 50) / T
    tau = rng.uniform(5, 20, 50) / W
    ref = direct_spread(ch, RECT_A, nu, tau)
    errs = []
    for cap in (64, 256, 1024):
        taps = quiet(compute_taps_discrete, ch, RECT_A, GRID,
                     TruncationPolicy(rel_floor=0.0, max_index=cap))
        errs.append(np.max(np.abs(reconstruct_spread(taps, nu, tau) - ref)) / (T * W))
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[2] > 8  # close to the 16x expected from 1/K
    assert errs[2] < 1e-2


def test_reconstruction_rejects_u_taps_and_zero_taps():
    ub = compute_taps_discrete(path(1.0, 1, 1), RECT_B, GRID)
    with pytest.raises(OrientationError):
        reconstruct_spread(ub, 0.0, 0.0)
    z = compute_taps_discrete(PhysicalChannel(), RECT_A, GRID)
    assert reconstruct_spread(z, 1.3 / T, 2.7 / W) == 0


# --- spread statistics ------------------------------------------------------

def test_spread_report_on_grid():
    rep = spread_report(compute_taps_discrete(path(1.0, 8, 3), RECT_A))
    assert rep.nonzero_count_at[1e-9] == 1
    assert rep.rank1_residual < 1e-10
    assert rep.peak_index == (3, 8)


@settings(max_examples=15, deadline=None)
@given(d=st.floats(0, 50), k=st.floats(-20, 20), smooth=st.booleans())
def test_single_path_rank1_and_concentration(d, k, smooth):
    taps = quiet(compute_taps_discrete, path(1.0, d, k), SMOOTH_A if smooth else RECT_A, GRID,
                 TruncationPolicy(max_index=128))
    rep = spread_report(taps)
    assert 0.0 <= rep.rank1_residual < 1e-10
    vals = [rep.energy_concentration[K] for K in sorted(rep.energy_concentration)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_two_path_matrix_is_not_rank1():
    taps = quiet(compute_taps_discrete, path(1.0, 3.5, 2.5) | path(1.0, 20.5, -7.5), RECT_A, GRID,
                 TruncationPolicy(max_index=64))
    assert spread_report(taps).rank1_residual > 1e-3


def test_half_grid_spreads_on_grid_does_not():
    on = spread_report(compute_taps_discrete(path(1.0, 25, 15), RECT_A))
    assert on.nonzero_count_at[1e-9] == 1
    for d, k in [(25.5, 15), (25, 15.5)]:
        rep = spread_report(quiet(compute_taps_discrete, path(1.0, d, k), RECT_A))
        assert rep.nonzero_count_at[1e-2] >= 8


# --- serialisation ------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    taps = compute_taps_discrete(path(0.3 - 1.1j, 4.4, -2.2), RC_A, GRID)
    csv, side = taps.write(tmp_path / "t.csv")
    assert csv.read_text().splitlines()[0] == CSV_HEADER
    back = read_taps(csv)
    assert back.convention == taps.convention and back.kappa_range == taps.kappa_range
    np.testing.assert_array_equal(back.retained, taps.retained)
    np.testing.assert_array_equal(back.gains, taps.retained_gains())
    assert back.grid == taps.grid and back.policy == taps.policy
    assert back.to_csv() == taps.to_csv()


def test_csv_rows_only_retained(tmp_path):
    taps = compute_taps_discrete(path(1.0, 8, 3), RECT_A)
    rows = taps.to_csv().splitlines()[1:]
    assert len(rows) == 1
    k, d, nu, tau, re, im, ab = rows[0].split(",")
    assert (int(k), int(d)) == (3, 8)
    assert float(re) == taps.at(3, 8).real


def test_policy_json_round_trip():
    pol = TruncationPolicy(1e-5, 1e-9, 256, 4, (-3, 3), (0, 9))
    assert TruncationPolicy.from_json(pol.to_json()) == pol
    with pytest.raises(ValueError):
        TruncationPolicy(rel_floor=1.5)
    with pytest.raises(ValueError):
        TruncationPolicy(force_d=(5, 1))


def test_tapmatrix_validation():
    with pytest.raises(ValueError):
        TapMatrix("X_taps", 0, 0, np.ones((1, 1)), GRID)
    with pytest.raises(ValueError):
        TapMatrix(V_TAPS, 0, 0, np.ones((2, 2)), GRID, retained=np.ones((1, 2), bool))
