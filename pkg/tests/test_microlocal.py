import json
import math

import numpy as np
import pytest

from boundary_weyl.billiard import loop_scan
from boundary_weyl.domains import Annulus, BoundaryPoint, CovectorClass, SinaiTorus, SphereCapComplement
from boundary_weyl.eigensolver import annulus_spectrum
from boundary_weyl.microlocal import (
    FilterKind,
    InfeasibleBudgetError,
    SymbolFilter,
    apply_filter,
    build_loop_cutoff,
    bump_symbol,
    classify_mode,
    constant_symbol,
    cutoff_complement_measure,
    filtered_window_sum,
    fourier_filter_trace,
    glancing_band,
    glancing_mass,
    glancing_slope,
    hyperbolic_indicator,
    mode_eta,
    plateau_symbol,
    smooth_ramp,
    spectrum_eta,
    window_law,
)
from boundary_weyl.spectral import trace_weights

Q_IN = BoundaryPoint(0, 0.4)


@pytest.fixture(scope="module")
def spec():
    return annulus_spectrum("neumann", 1.0, 2.0, 50.0)


def _find(spec, pred):
    for j in range(len(spec)):
        if pred(spec[j]):
            return spec[j]
    raise LookupError


def test_eta_and_class(spec):
    m0 = _find(spec, lambda md: md.m == 0 and md.lam > 10)
    assert mode_eta(m0, 0) == 0.0 and classify_mode(m0, 0) is CovectorClass.HYPERBOLIC
    # whispering gallery: m close to lambda r2 is elliptic on the inner rim
    wg = _find(spec, lambda md: md.lam > 30 and md.m > 0.9 * md.lam * 2)
    assert mode_eta(wg, 0) == pytest.approx(2 * mode_eta(wg, 1))
    assert mode_eta(wg, 0) > 1.7 and classify_mode(wg, 0) is CovectorClass.ELLIPTIC
    gl = _find(spec, lambda md: md.lam > 30 and md.m == round(md.lam))
    assert abs(mode_eta(gl, 0) - 1) < 0.05 and classify_mode(gl, 0) is CovectorClass.GLANCING


def test_spectrum_eta_vectorized(spec):
    eta = spectrum_eta(spec, 1)
    for j in range(0, len(spec), 17):
        assert eta[j] == mode_eta(spec[j], 1)


@pytest.mark.parametrize("j", [1, 9, 120, 400, 777])
def test_filter_identity_and_zero(spec, j):
    from boundary_weyl.eigensolver import boundary_trace

    md = spec[j]
    assert apply_filter(constant_symbol(1.0), md, Q_IN) == boundary_trace(md, Q_IN)
    assert apply_filter(constant_symbol(0.0), md, Q_IN) == 0.0


@pytest.mark.parametrize("j", [0, 3, 50, 260, 500, 901])
@pytest.mark.parametrize("comp", [0, 1])
def test_diagonal_action_matches_fourier_multiplier(spec, j, comp):
    md = spec[j]
    q = BoundaryPoint(comp, 1.1)
    for filt in (bump_symbol(0.5, 0.3), plateau_symbol(0.6, 0.8), hyperbolic_indicator(0.1)):
        assert apply_filter(filt, md, q) == pytest.approx(fourier_filter_trace(filt, md, q), abs=1e-10)


def test_parseval_on_window(spec):
    w = trace_weights(spec, Q_IN)
    sel = (spec.lam >= 40) & (spec.lam < 41)
    direct = math.fsum(apply_filter(constant_symbol(1.0), spec[j], Q_IN) ** 2 for j in np.nonzero(sel)[0])
    assert filtered_window_sum(spec, constant_symbol(1.0), Q_IN, 40.0) == pytest.approx(math.fsum(w[sel]), rel=1e-14)
    assert direct == pytest.approx(math.fsum(w[sel]), rel=1e-12)


def test_nested_supports_monotone(spec):
    small = bump_symbol(0.3, 0.2)
    big = hyperbolic_indicator(0.1)
    eta = np.linspace(0, 1.5, 3001)
    assert np.all(small(eta) <= big(eta))
    for lam in np.arange(20.0, 49.0, 1.0):
        assert filtered_window_sum(spec, small, Q_IN, lam) <= filtered_window_sum(spec, big, Q_IN, lam)


def test_empty_window_is_zero():
    s = annulus_spectrum("dirichlet", 1.0, 2.0, 10.0)
    assert filtered_window_sum(s, hyperbolic_indicator(), Q_IN, 1.0) == 0.0


def test_glancing_mass_monotone_in_eps(spec):
    for lam in (30.0, 45.0):
        m = [glancing_mass(spec, e, Q_IN, lam).mass for e in (0.02, 0.05, 0.1, 0.2, 0.4)]
        assert m == sorted(m)


def test_glancing_mass_vanishes_for_tiny_band(spec):
    eta = spectrum_eta(spec, 0)
    sel = (spec.lam >= 30) & (spec.lam < 31)
    gap = np.min(np.abs(eta[sel] - 1))
    assert gap > 1e-6
    assert glancing_mass(spec, 1e-6, Q_IN, 30.0).mass == 0.0


def test_glancing_slope_fit(spec):
    fit = glancing_slope(spec, Q_IN, [0.05, 0.1, 0.2], 30.0, 49.0)
    assert fit.slope > 0
    assert fit.y == sorted(fit.y)


def test_window_law_baseline_is_exact(spec):
    base = hyperbolic_indicator(0.1)
    law = window_law(spec, base, base, Q_IN, 40.0)
    assert law.value == pytest.approx(law.predicted, rel=1e-13)


# -- symbols


def test_support_conditions():
    for f in (bump_symbol(0.0, 0.5), bump_symbol(0.3, 0.4), plateau_symbol(0.6, 0.8), hyperbolic_indicator(0.1)):
        assert f.kind is FilterKind.AWAY_FROM_GLANCING and f.check_support()
        v = f(np.linspace(-2, 2, 4001))
        assert v.min() >= 0 and v.max() <= 1
    g = glancing_band(0.2)
    assert g.kind is FilterKind.GLANCING_BAND and g.check_support()
    assert float(g(1.0)) == 1.0 and float(g(1.21)) == 0.0
    assert float(hyperbolic_indicator(0.1)(0.5)) == 1.0


def test_symbol_validation():
    with pytest.raises(ValueError):
        bump_symbol(0.8, 0.2)
    with pytest.raises(ValueError):
        plateau_symbol(0.6, 0.95)
    with pytest.raises(ValueError):
        glancing_band(0.6)


def test_l2_mass_quadrature():
    assert constant_symbol(1.0).l2_mass() == pytest.approx(2.0, rel=1e-13)
    w = constant_symbol(1.0).l2_mass(weight=lambda e: np.sqrt(1 - e**2))
    assert w == pytest.approx(math.pi / 2, rel=1e-6)


def test_smooth_ramp():
    u = np.linspace(-0.5, 1.5, 2001)
    r = smooth_ramp(u)
    assert r[0] == 1.0 and r[-1] == 0.0 and float(smooth_ramp(0.5)) == pytest.approx(0.5)
    assert np.all(np.diff(r) <= 0)


def test_filter_json_roundtrip():
    f = plateau_symbol(0.6, 0.8)
    d = json.loads(f.to_json())
    g = SymbolFilter.from_dict(d)
    eta = np.linspace(0, 1.5, 401)
    assert g.kind is f.kind and g.eps == f.eps
    assert np.max(np.abs(g(eta) - f(eta))) < 1e-12


# -- loop cutoffs


def test_loop_cutoff_empty_for_loopless_scan():
    scan = loop_scan(SinaiTorus(1.0, 0.25), BoundaryPoint(0, 0.2), 0.9, 10_000, 0.01, seed=1)
    assert scan.estimate.loop_count == 0
    filt = build_loop_cutoff(scan, 0.9, 0.01)
    assert np.all(filt(np.linspace(-1, 1, 101)) == 0.0)
    assert filt.kind is FilterKind.LOOP_CUTOFF


def test_loop_cutoff_infeasible_on_hemisphere():
    scan = loop_scan(SphereCapComplement(math.pi / 2), BoundaryPoint(0, 0.0), 7.0, 2000, 0.01, seed=1)
    with pytest.raises(InfeasibleBudgetError):
        build_loop_cutoff(scan, 7.0, 0.5)


def test_loop_cutoff_budget_one_over_t_squared():
    T = 10.0
    scan = loop_scan(Annulus(1.0, 2.0), BoundaryPoint(0, 0.0), T, 20_000, 0.002, seed=4)
    assert scan.estimate.loop_count > 0
    filt = build_loop_cutoff(scan, T, 1 / T**2)
    assert cutoff_complement_measure(filt) <= 0.01
    eta_loop = np.abs(scan.eta[scan.is_loop])
    assert np.all(filt(eta_loop) == 1.0)


def test_loop_cutoff_horizon_mismatch():
    scan = loop_scan(Annulus(1.0, 2.0), BoundaryPoint(0, 0.0), 3.0, 1000, 0.01, seed=4)
    with pytest.raises(ValueError):
        build_loop_cutoff(scan, 4.0, 0.1)


def test_elliptic_suppression(spectrum):
    s = spectrum("annulus", "neumann")
    q = BoundaryPoint(0, 0.0)
    w = trace_weights(s, q)
    ell = spectrum_eta(s, 0) > 1.1  # elliptic beyond the default glancing band
    for lam in range(80, 150, 7):
        sel = (s.lam >= lam) & (s.lam < lam + 1)
        assert w[sel & ell].sum() <= 0.01 * w[sel].sum()
