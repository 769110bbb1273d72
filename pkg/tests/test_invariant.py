import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dubins_smc import controller as ctl
from dubins_smc.controller import BENCHMARK_BOUNDS, benchmark_params
from dubins_smc.frenet import rates
from dubins_smc.invariant import (CertificatePreconditionError, InvariantSetSpec, attractiveness_certificate,
                                  boundary_derivatives, boundary_margin, boundary_values, classify_region,
                                  contains, default_kappa_max, disturbance_gradient, gamma2_tilde,
                                  nagumo_certificate, sigma_sigma_dot, sigma_sigma_dot_bound)
from dubins_smc.plant import DisturbanceBounds

P = benchmark_params()
KMAX = default_kappa_max(P)


def test_corner_angle_closed_form():
    spec = InvariantSetSpec.from_params(P)
    assert spec.corner_angle == pytest.approx(np.arccos(1 - 0.818))
    # at the corner both active boundaries vanish
    L1, _, G1, _ = boundary_values(-P.R, spec.corner_angle, spec)
    assert L1 == pytest.approx(0.0) and G1 == pytest.approx(0.0, abs=1e-12)


def test_membership_by_hand():
    assert contains(0.0, 0.0, P)
    assert contains(-0.5, np.radians(30), P)
    assert contains(0.5, np.radians(-30), P)
    assert not contains(0.0, 1.4, P)
    assert not contains(0.81, 0.0, P)
    assert not contains(-0.81, 0.0, P)


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-1.6, 1.6))
def test_set_is_point_symmetric(y, th):
    assert boundary_margin(y, th, P) == pytest.approx(boundary_margin(-y, -th, P), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-1.6, 1.6), st.floats(0.0, 0.5), st.floats(0.0, 0.45))
def test_set_shrinks_with_p(y, th, p1, dp):
    small = P.with_(p=p1 + dp)
    if contains(y, th, small):
        assert contains(y, th, P.with_(p=p1))


def test_sliding_manifold_lies_in_set():
    th = np.linspace(-np.pi / 2, np.pi / 2, 2001)
    for q in (0.182, 0.59, 0.818):
        p = P.with_(q=q)
        y = -np.sign(th) * (1 - np.cos(th)) * p.R / (1 - q)   # sigma = 0
        np.testing.assert_allclose(ctl.sigma(y, th, p), 0.0, atol=1e-15)
        in_box = np.abs(y) <= p.R
        assert np.all(boundary_margin(y[in_box], th[in_box], p) >= -1e-12)


def test_region_classification():
    assert classify_region(-0.5, 0.3, P) == 1     # sigma > 0, theta > 0
    assert classify_region(0.5, -0.3, P) == 2
    assert classify_region(0.3, 0.2, P) == 3
    assert classify_region(-0.3, -0.2, P) == 4
    assert classify_region(0.0, 0.0, P) == 1       # tie goes low
    with pytest.raises(ValueError):
        classify_region(0.0, 1.5, P)


def test_gamma2_tilde_closed_form():
    assert gamma2_tilde(P, 0.0) == np.inf
    assert gamma2_tilde(P, 0.5) == pytest.approx(-2 + 0.818 + 0.818 / 0.4)
    # zero exactly at the curvature bound implied by the minimum path radius
    assert gamma2_tilde(P, KMAX) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("law", ["sign", "saturated"])
def test_boundary_derivatives_match_transverse_rates(law):
    """Chain rule on the boundary functions through frenet.rates + the control law."""
    p = benchmark_params(law=law)
    rng = np.random.default_rng(2)
    n = 500
    y, th = rng.uniform(-0.7, 0.7, n), rng.uniform(-1.2, 1.2, n)
    kabs, sgn = rng.uniform(0, KMAX, n), rng.choice([-1.0, 1.0], n)
    d1, d2 = rng.uniform(-0.1, 0.1, n), rng.uniform(-0.1, 0.1, n)
    om = ctl.turn_rate(y, th, sgn, p)
    dy, dth = rates(y, th, kabs, sgn, p.v, om, d1, d2)
    u = om * sgn * p.R / p.v
    m = 1 - p.p
    L1d, L2d, G1d, G2d = boundary_derivatives(y, th, kabs, d1, d2, p, u)
    np.testing.assert_allclose(L1d, dy / p.R, atol=1e-13)
    np.testing.assert_allclose(L2d, -dy / p.R, atol=1e-13)
    np.testing.assert_allclose(G1d, -m * dy / p.R - 2 * np.sin(th) * dth, atol=1e-12)
    np.testing.assert_allclose(G2d, m * dy / p.R - 2 * np.sin(th) * dth, atol=1e-12)
    sdot = -(1 - p.q) * dy / p.R - np.sign(th) * np.sin(th) * dth
    np.testing.assert_allclose(sigma_sigma_dot(y, th, kabs, d1, d2, p, u), ctl.sigma(y, th, p) * sdot, atol=1e-13)


def test_proof_bound_dominates_exact_value():
    rng = np.random.default_rng(8)
    y, th = rng.uniform(-0.8, 0.8, 3000), rng.uniform(0.01, 1.5, 3000)
    for q in (0.2, 0.59, 0.8):
        p = P.with_(q=q)
        sg = ctl.sigma(y, th, p)
        for d1, d2 in BENCHMARK_BOUNDS.vertices():
            bound = sigma_sigma_dot_bound(y, th, d1, d2, p)
            for k in (0.0, 0.5 * KMAX, KMAX):
                exact = sigma_sigma_dot(y, th, k, d1, d2, p)
                assert np.all(exact <= bound + 1e-15)
            # region 3 at zero curvature: the bound is attained
            r3 = sg < 0
            np.testing.assert_allclose(sigma_sigma_dot(y, th, 0.0, d1, d2, p)[r3], bound[r3], rtol=1e-12)


def test_disturbance_gradient_is_exact_for_affine_objective():
    y, th, k = 0.3, -0.4, 0.5
    c1, c2 = disturbance_gradient(y, th, k, P, "attraction")
    f = lambda a, b: -sigma_sigma_dot(y, th, k, a, b, P)
    assert f(0.07, -0.03) == pytest.approx(f(0, 0) + 0.07 * c1 - 0.03 * c2, abs=1e-14)


# -- certificates -------------------------------------------------------------------

def test_nagumo_passes_for_benchmark_params():
    rep = nagumo_certificate(InvariantSetSpec.from_params(P), P, BENCHMARK_BOUNDS, KMAX)
    assert rep.passed, rep.failures()
    assert min(c.extremum for c in rep.checks) >= -1e-9
    assert all(c.n_samples == 1000 for c in rep.checks)


def test_nagumo_fails_below_min_p():
    p = P.with_(p=0.05)
    rep = nagumo_certificate(InvariantSetSpec.from_params(p), p, BENCHMARK_BOUNDS, KMAX)
    assert not rep.passed
    assert rep.failures() == ["boundary 4 (Gamma2 = 0)"]


def test_nagumo_passes_without_disturbance_at_p_zero():
    p = P.with_(p=0.0)
    rep = nagumo_certificate(InvariantSetSpec.from_params(p), p, DisturbanceBounds(0.0, 0.0), 1.0)
    assert rep.passed


def test_nagumo_precondition():
    with pytest.raises(CertificatePreconditionError):
        nagumo_certificate(InvariantSetSpec.from_params(P), P, BENCHMARK_BOUNDS, 1.0)


def test_attractiveness_benchmark_q_passes():
    rep = attractiveness_certificate(P, BENCHMARK_BOUNDS, KMAX)
    assert rep.passed
    assert all(c.extremum < 0 and c.bound_extremum < 0 for c in rep.checks)


def test_attractiveness_low_q_fails_in_region_3():
    rep = attractiveness_certificate(P.with_(q=0.1), BENCHMARK_BOUNDS, KMAX)
    assert rep.failures() == ["region 3"]
    assert any("outside the window" in n for n in rep.notes)


def test_attractiveness_high_q_fails_in_region_1():
    rep = attractiveness_certificate(P.with_(q=0.9), BENCHMARK_BOUNDS, KMAX)
    assert rep.failures() == ["region 1"]
    # the exact closed form is still negative: the upper q limit is conservative
    exact = attractiveness_certificate(P.with_(q=0.9), BENCHMARK_BOUNDS, KMAX, mode="exact")
    assert exact.passed


def test_certificate_report_serialises():
    rep = attractiveness_certificate(P, BENCHMARK_BOUNDS, KMAX)
    d = rep.to_dict()
    assert d["kind"] == "attractiveness" and len(d["checks"]) == 2


@pytest.mark.parametrize("p", [0.182, 0.3])
def test_invariance_also_needs_q_above_p(p):
    # on the Gamma boundaries the sign of sigma depends on q; with q <= p the law
    # steers outward near the corners
    spec = InvariantSetSpec(p, 1.0, 0.8)
    below = P.with_(p=p, q=p - 0.05)
    above = P.with_(p=p, q=p + 0.01)
    assert not nagumo_certificate(spec, below, BENCHMARK_BOUNDS, 0.5).passed
    assert nagumo_certificate(spec, above, BENCHMARK_BOUNDS, 0.5).passed
