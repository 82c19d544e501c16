import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from boundary_weyl.domains import BoundaryPoint
from boundary_weyl.eigensolver import annulus_spectrum, cap_spectrum, hemisphere_zonal_mode
from boundary_weyl.spectral import (
    IllConditionedFitError,
    IncompleteSpectrumError,
    SmoothingKernel,
    TailTruncationWarning,
    UnderResolvedGridError,
    cluster_jumps,
    default_sigma,
    envelope,
    half_space_constant,
    jump,
    local_maxima,
    pi_b,
    power_fit,
    remainder,
    smoothed_density,
    supnorm_scan,
    trace_weights,
    two_term_fit,
    wave_trace,
    zonal_ratio_limit,
)

Q_IN = BoundaryPoint(0, 0.0)
Q_OUT = BoundaryPoint(1, 0.0)


@pytest.fixture(scope="module")
def small():
    return {bc: annulus_spectrum(bc, 1.0, 2.0, 60.0) for bc in ("dirichlet", "neumann")}


# -- kernels


@pytest.fixture(scope="module")
def fejer():
    return SmoothingKernel(1.0)


def test_fejer_hat_properties(fejer):
    t = np.linspace(0, 1.2, 241)
    h = fejer.rho_hat_unit(t)
    assert h[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(h >= 0)
    assert np.all(np.diff(h) <= 1e-15)
    assert np.all(h[t >= 1.0] == 0.0)
    assert np.array_equal(fejer.rho_hat_unit(-t), h)


def test_plateau_hat_properties():
    k = SmoothingKernel(1.0, "plateau")
    t = np.linspace(0, 1.2, 241)
    h = k.rho_hat_unit(t)
    assert np.all(h[t <= 0.5] == 1.0)
    assert np.all(h[t >= 1.0] == 0.0)
    assert np.all(np.diff(h) <= 0)


@pytest.mark.parametrize("shape", ["fejer_bump", "plateau"])
def test_rho_unit_mass_and_table_accuracy(shape):
    k = SmoothingKernel(1.0, shape)
    x = np.linspace(0, 800, 160001)
    mass = 2 * integrate.simpson(k.rho_unit(x), x=x)
    assert mass == pytest.approx(1.0, abs=1e-7)
    # direct transform rho(x) = (1/pi) int_0^1 rho_hat(t) cos(x t) dt
    for xv in (0.0, 0.37, 3.1, 12.5, 40.0):
        ref, _ = integrate.quad(lambda t: float(k.rho_hat_unit(t)) * math.cos(xv * t) / math.pi, 0, 1,
                                epsabs=1e-13, limit=400)
        assert float(k.rho_unit(xv)) == pytest.approx(ref, abs=1e-10)


def test_fejer_rho_nonnegative(fejer):
    x = np.linspace(0, 200, 40001)
    assert np.min(fejer.rho_unit(x)) >= -1e-12


def test_scaling_and_support():
    k = SmoothingKernel(4.0)
    assert float(k.rho(0.3)) == pytest.approx(4 * float(k.rho_unit(1.2)), rel=1e-14)
    assert float(k.rho_hat(3.99)) > 0 and float(k.rho_hat(4.0)) == 0.0


def test_kernel_validation():
    with pytest.raises(ValueError):
        SmoothingKernel(0.0)
    with pytest.raises(ValueError):
        SmoothingKernel(1.0, "boxcar")


# -- pi_b, remainder, jumps


def test_pi_b_trivial(small):
    s = small["dirichlet"]
    w = trace_weights(s, Q_IN)
    assert pi_b(s, Q_IN, 0.5 * s.lam[0]) == 0.0
    assert s.lam[1] > s.lam[0]
    assert pi_b(s, Q_IN, s.lam[0]) == w[0]


def test_pi_b_monotone_and_range(small):
    s = small["neumann"]
    lam = np.linspace(0, 60, 3001)
    y = pi_b(s, Q_OUT, lam)
    assert np.all(np.diff(y) >= 0)
    with pytest.raises(IncompleteSpectrumError):
        pi_b(s, Q_OUT, 60.5)


def test_remainder_below_first_eigenvalue(small):
    s = small["dirichlet"]
    assert remainder(s, Q_IN, 2.0, C_ref=0.1) == pytest.approx(-0.4)


def test_remainder_steps_only_at_eigenvalues(small):
    s = small["dirichlet"]
    C = 0.08
    for a, b in s.clusters()[:40]:
        lj = s.lam[a]
        step = remainder(s, Q_IN, lj, C) - remainder(s, Q_IN, lj * (1 - 1e-12), C)
        assert step == pytest.approx(jump(s, Q_IN, lj), abs=1e-9)
        mid = 0.5 * (s.lam[b - 1] + s.lam[b])
        smooth = remainder(s, Q_IN, mid + 1e-9, C) - remainder(s, Q_IN, mid, C)
        assert abs(smooth) < 1e-6


def test_jump_simple_and_clusters(small):
    s = small["dirichlet"]
    w = trace_weights(s, Q_IN)
    assert jump(s, Q_IN, s.lam[0]) == w[0]
    lam, jmp = cluster_jumps(s, Q_IN)
    assert math.fsum(jmp) == pytest.approx(math.fsum(w), rel=1e-13)
    assert np.all(jmp >= 0)
    assert jump(s, Q_IN, 0.5 * (lam[3] + lam[4])) == 0.0


def test_hemisphere_cluster_mass_closed_form(spectrum):
    # addition theorem: degree-l Neumann modes carry (2l+1)/(2 pi) at any rim point
    s = spectrum("hemisphere", "neumann")
    lam, jmp = cluster_jumps(s, BoundaryPoint(0, 0.9))
    l = np.round(-0.5 + np.sqrt(0.25 + lam**2))
    assert np.max(np.abs(jmp - (2 * l + 1) / (2 * math.pi))) < 1e-9
    ratio = jmp[l >= 2] / lam[l >= 2]
    assert ratio.min() > 0.3


# -- two-term fits


def test_half_space_constants():
    assert half_space_constant("neumann") == pytest.approx(1 / (2 * math.pi))
    assert half_space_constant("dirichlet") == pytest.approx(1 / (4 * math.pi))


def test_fit_window_checks(small):
    with pytest.raises(IllConditionedFitError):
        two_term_fit(small["neumann"], Q_IN, (50.0, 51.0))
    with pytest.raises(IllConditionedFitError):
        two_term_fit(small["neumann"], Q_IN, (50.0, 40.0))
    with pytest.raises(IncompleteSpectrumError):
        two_term_fit(small["neumann"], Q_IN, (30.0, 70.0))


def test_pi_b_half_space_constant(spectrum):
    s = spectrum("annulus", "neumann")
    val = pi_b(s, Q_IN, 100.0) / 100.0**2
    assert val == pytest.approx(1 / (2 * math.pi), rel=0.15)


@pytest.mark.parametrize("bc", ["neumann", "dirichlet"])
def test_second_coefficient_follows_curvature(spectrum, bc):
    s = spectrum("annulus", bc)
    c_in = two_term_fit(s, Q_IN, (60.0, 150.0)).second_coeff
    c_out = two_term_fit(s, Q_OUT, (60.0, 150.0)).second_coeff
    # inner rim kappa = -1, outer rim kappa = +1/2; Dirichlet flips the sign
    if bc == "neumann":
        assert c_in < 0 < c_out
    else:
        assert c_out < 0 < c_in


def test_leading_coefficient_rotation_invariant(spectrum):
    s = spectrum("annulus", "neumann")
    fits = [two_term_fit(s, BoundaryPoint(0, p), (60.0, 150.0)) for p in (0.0, 0.77, 2.9)]
    c = np.array([f.leading_coeff for f in fits])
    assert np.ptp(c) / c.mean() < 0.05
    assert all(abs(f.exponent - 2) < 0.05 for f in fits)


# -- smoothed density


def test_smoothed_density_far_spectrum_negligible(small):
    s = small["neumann"]
    k = SmoothingKernel(4.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        # every eigenvalue sits more than 160/T away from lambda = -200
        assert abs(smoothed_density(s, Q_IN, -200.0, k)) <= 1e-8 * pi_b(s, Q_IN, 60.0)


def test_smoothed_density_integrates_to_increment(spectrum):
    s = spectrum("annulus", "neumann")
    k = SmoothingKernel(20.0)
    x = np.linspace(60.0, 100.0, 16001)
    y = smoothed_density(s, Q_IN, x, k)
    inc = pi_b(s, Q_IN, 100.0) - pi_b(s, Q_IN, 60.0)
    assert integrate.simpson(y, x=x) == pytest.approx(inc, rel=0.01)


def test_smoothed_density_exponent(spectrum):
    s = spectrum("annulus", "neumann")
    k = SmoothingKernel(4.0)
    x = np.arange(60.0, 108.0, 0.5)
    for q in (Q_IN, Q_OUT):
        p, _ = power_fit(x, smoothed_density(s, q, x, k))
        assert abs(p - 1.0) < 0.1


def test_plus_branch_negligible(spectrum):
    s = spectrum("annulus", "neumann")
    k = SmoothingKernel(10.0)
    for lam in (10.0, 30.0, 60.0):
        both = smoothed_density(s, Q_IN, lam, k)
        minus = smoothed_density(s, Q_IN, lam, k, plus_branch=False)
        assert abs(both - minus) <= 1e-8 * abs(both)


def test_tail_warning(small):
    with pytest.warns(TailTruncationWarning):
        smoothed_density(small["neumann"], Q_IN, 58.0, SmoothingKernel(4.0))


def test_smoothed_density_rejects_gaussian(small):
    with pytest.raises(ValueError):
        smoothed_density(small["neumann"], Q_IN, 20.0, SmoothingKernel(1.0, "gaussian", sigma=0.1))


# -- sup norms


def test_supnorm_dominates_grid_values(small):
    s = small["neumann"]
    grid = 2 * math.pi * np.arange(1024) / 1024
    rows = supnorm_scan(s, grid, component=1)
    tr = np.array([s.traces(BoundaryPoint(1, g)) for g in grid])
    assert len(rows) == len(s)
    assert np.all(np.array([r.sup_trace for r in rows]) >= np.max(np.abs(tr), axis=0) - 1e-15)


def test_supnorm_grid_resolution(small):
    s = small["neumann"]
    with pytest.raises(UnderResolvedGridError):
        supnorm_scan(s, np.linspace(0, 2 * math.pi, 64, endpoint=False))


def test_zonal_ratio_limit():
    modes = [hemisphere_zonal_mode(l) for l in (40, 100, 400)]
    grid = 2 * math.pi * np.arange(4096) / 4096
    rows = supnorm_scan(modes, grid)
    lim = zonal_ratio_limit()
    assert lim == pytest.approx(1 / math.sqrt(math.pi))
    errs = [abs(r.ratio / lim - 1) for r in rows]
    assert errs[0] < 0.02 and errs[0] > errs[1] > errs[2]


def test_cap_ratio_below_hemisphere(spectrum):
    s = spectrum("cap", "neumann")
    sel = (s.lam >= 20) & (s.lam <= 100)
    rows = supnorm_scan(s, 2 * math.pi * np.arange(2048) / 2048)
    ratio = np.array([r.ratio for r in rows])[sel]
    assert ratio.max() < zonal_ratio_limit()


def test_envelope_bins():
    c, m = envelope([1, 2, 11, 12, 25], [0.1, 0.3, 0.2, 0.05, 0.4], 0, 30, 10)
    assert c.tolist() == [5.0, 15.0, 25.0]
    assert m.tolist() == [0.3, 0.2, 0.4]


# -- wave trace


def test_wave_trace_even_and_peak(small):
    s = small["neumann"]
    sigma = default_sigma(60.0)
    t = np.linspace(0, 1.0, 201)
    y = wave_trace(s, Q_IN, t, sigma)
    assert np.array_equal(y, wave_trace(s, Q_IN, -t, sigma))
    assert np.all(np.abs(y[1:]) <= y[0])


def test_default_sigma_meets_cutoff():
    sig = default_sigma(150.0)
    assert math.exp(-0.5 * (sig * 150.0) ** 2) == pytest.approx(1e-8, rel=1e-9)


def test_wave_trace_warns_on_weak_cutoff(small):
    with pytest.warns(TailTruncationWarning):
        wave_trace(small["neumann"], Q_IN, [0.0], 0.01)


def test_local_maxima():
    t = np.linspace(0, 1, 11)
    y = np.array([0, 1, 0, 2, 3, 2, 1, 0, 1, 0.5, 1])
    tm, ym = local_maxima(t, y)
    assert tm.tolist() == pytest.approx([0.1, 0.4, 0.8])
    assert ym.tolist() == [1, 3, 1]
