import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mqcotoc.correlator import echo_coefficients_exact, echo_coefficients_stochastic
from mqcotoc.lattice import RingSpec, build_couplings
from mqcotoc.propagator import TrotterPlan
from mqcotoc.spectrum import (
    PhiGrid,
    cluster_size_direct,
    cluster_size_from_spectrum,
    decode_spectrum,
    diagonal_offdiagonal_split,
    kseries_from_routes,
    spectrum_route,
)


def plan_for(N, alpha=3.0, seed=0, **kw):
    return TrotterPlan(build_couplings(RingSpec(N, alpha, seed=seed, **kw)))


def route_at(plan, t):
    return spectrum_route(echo_coefficients_exact(plan, t))


# -- phase grid and decoding ----------------------------------------------------

def test_phi_grid_default_and_validation():
    assert PhiGrid.for_spins(8).n_phi == 32
    assert PhiGrid.for_spins(16).n_phi == 64
    with pytest.raises(ValueError):
        PhiGrid(24)
    with pytest.raises(ValueError):
        PhiGrid.for_spins(16, 32)  # aliases orders near 16
    grid = PhiGrid(16)
    assert grid.values[1] == pytest.approx(2 * np.pi / 16)
    assert grid.orders[0] == -8 and grid.orders[-1] == 7


def test_decode_constant_is_order_zero():
    spec = decode_spectrum(np.ones(16))
    assert spec.intensity(0) == pytest.approx(1.0, abs=1e-15)
    assert np.abs(np.delete(spec.g, 8)).max() < 1e-15
    assert cluster_size_from_spectrum(spec) == 0.0


def test_decode_cos2phi_and_pure_tone_size():
    phis = PhiGrid(16).values
    spec = decode_spectrum(np.cos(2 * phis), phis)
    assert spec.intensity(2) == pytest.approx(0.5, abs=1e-15)
    assert spec.intensity(-2) == pytest.approx(0.5, abs=1e-15)
    assert cluster_size_from_spectrum(spec) == pytest.approx(8.0, abs=1e-12)
    assert spec.intensity(100) == 0.0


def test_decode_rejects_bad_grids_and_complex_input():
    phis = np.linspace(0, 2 * np.pi, 16)  # includes the endpoint: not the DFT grid
    with pytest.raises(ValueError):
        decode_spectrum(np.ones(16), phis)
    with pytest.raises(ValueError):
        decode_spectrum(np.ones(12))
    phis = PhiGrid(16).values
    with pytest.raises(ValueError):
        decode_spectrum(np.sin(phis), phis)  # odd signal decodes to imaginary weights


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5))
def test_even_trig_polynomial_recovered(coeffs):
    # M(phi) = a0 + sum_m 2 a_m cos(m phi) decodes to g_{+-m} = a_m
    phis = PhiGrid(16).values
    M = coeffs[0] + sum(2 * a * np.cos(m * phis) for m, a in enumerate(coeffs[1:], start=1))
    spec = decode_spectrum(M, phis)
    for m, a in enumerate(coeffs):
        assert spec.intensity(m) == pytest.approx(a, abs=1e-12)
        assert spec.intensity(-m) == pytest.approx(a, abs=1e-12)
    expected = 2 * sum(2 * m * m * a for m, a in enumerate(coeffs))
    assert cluster_size_from_spectrum(spec) == pytest.approx(expected, abs=1e-10)


# -- spectra of the ring dynamics ----------------------------------------------

def test_cluster_size_zero_at_t0():
    r = route_at(plan_for(6), 0.0)
    assert r.K_G == 0.0 and r.K_L == 0.0 and r.K_CT == 0.0
    assert r.g_G[r.orders == 0][0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("t", [0.5, 2.0, 7.0])
def test_parity_sum_rule_and_symmetry(t):
    r = route_at(plan_for(6, 2.0, seed=3), t)
    odd = (r.orders % 2) == 1
    assert np.abs(r.g_G[odd]).max() < 1e-9
    assert np.abs(r.g_L[odd]).max() < 1e-9
    # local spectrum sums to the initial normalization
    assert r.g_L.sum() == pytest.approx(1.0, abs=1e-10)
    # the global echo at phi = 0 is the total return, 1 for unitary dynamics
    assert r.g_G.sum() == pytest.approx(1.0, abs=1e-10)
    spec = r.spectrum("G")
    for m in range(1, 7):
        assert spec.intensity(m) == pytest.approx(spec.intensity(-m), abs=1e-12)


@pytest.mark.parametrize("t", [0.3, 3.0, 12.0])
def test_positivity(t):
    r = route_at(plan_for(6, 1.0, seed=2, sign_mode="random"), t)
    assert r.K_G >= 0
    assert r.g_G.min() >= -1e-9
    assert r.g_L.min() >= -1e-9


@pytest.mark.parametrize("N,t,alpha", [(6, 1.0, 3.0), (6, 4.0, 1.0), (5, 2.5, 2.0)])
def test_route_equivalence(N, t, alpha):
    plan = plan_for(N, alpha, seed=1)
    r = route_at(plan, t)
    K_G, K_L, K_CT = cluster_size_direct(plan, t)
    assert K_G == pytest.approx(r.K_G, rel=1e-6)
    assert K_L == pytest.approx(r.K_L, rel=1e-6)
    assert K_CT == pytest.approx(r.K_CT, rel=1e-6, abs=1e-9)


def test_diagonal_offdiagonal_split_reconstructs():
    plan = plan_for(6, 3.0)
    diag, off, cross = diagonal_offdiagonal_split(plan, 0.0)
    assert (diag, off, cross) == (0.0, 0.0, 0.0)
    diag, off, cross = diagonal_offdiagonal_split(plan, 5.0)
    r = route_at(plan, 5.0)
    assert diag + off == pytest.approx(r.K_L, rel=1e-9)
    assert cross == pytest.approx(r.K_CT, rel=1e-9, abs=1e-12)
    with pytest.raises(ValueError):
        diagonal_offdiagonal_split(plan_for(10), 1.0)


def test_short_time_ratio_is_two():
    plan = plan_for(8, 3.0)
    for t in (0.01, 0.03, 0.05):
        r = route_at(plan, t)
        assert 1.9 <= r.K_G / r.K_L <= 2.1


def test_site_sizes_average_to_totals():
    r = route_at(plan_for(6, 2.0, seed=4), 3.0)
    assert r.site_K_L.mean() == pytest.approx(r.K_L)
    assert r.site_K_G.mean() == pytest.approx(r.K_G)


def test_kseries_collects_routes():
    plan = plan_for(5)
    ks = kseries_from_routes(route_at(plan, t) for t in (0.0, 1.0, 2.0))
    assert ks.N == 5
    assert np.allclose(ks.K_G, ks.K_L + ks.K_CT)
    assert ks.err_G is None


def test_stochastic_route_has_error_bars():
    plan = plan_for(6)
    exact = route_at(plan, 2.0)
    coeffs = echo_coefficients_stochastic(plan, 2.0, n_states=30, seed=5)
    r = spectrum_route(coeffs)
    err_G, err_L, err_CT = r.err
    assert err_G > 0 and err_L > 0
    assert abs(r.K_G - exact.K_G) < 4 * err_G
    assert abs(r.K_L - exact.K_L) < 4 * err_L
    ks = kseries_from_routes([r])
    assert ks.err_G[0] == err_G


def test_direct_route_stochastic_and_bad_estimator():
    plan = plan_for(6)
    K_exact = cluster_size_direct(plan, 2.0)[0]
    K_est = cluster_size_direct(plan, 2.0, "stochastic", n_states=40, seed=1)[0]
    assert K_est == pytest.approx(K_exact, rel=0.25)
    with pytest.raises(ValueError):
        cluster_size_direct(plan, 1.0, "other")
