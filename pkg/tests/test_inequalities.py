import dataclasses
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate as spi
from scipy.optimize import bisect

from entstab import functionals as fn
from entstab import inequalities as ineq
from entstab.numerics import GridFunction, build_grid
from entstab.profiles import ProfileSpec, barenblatt_mass, grid_for, sample

FD_Q = [(1, 1.5), (1, 2.0), (2, 1.5), (2, 2.0), (2, 2.5), (3, 1.5), (3, 2.0), (3, 2.5)]
PM_Q = [(d, q) for d in (1, 2, 3) for q in (0.3, 0.5, 0.8)]


def _u(spec, d, n=2048):
    return fn.density_to_u(sample(spec, grid_for(spec, d, n)))


def _barenblatt(p, d, n=2048, **kw):
    spec = ProfileSpec("barenblatt_fd" if p < 1 else "barenblatt_pm", p=p, **kw)
    return sample(spec, grid_for(spec, d, n))


# --- verdict semantics -----------------------------------------------------------------

def test_verdict_tolerance_and_validity():
    v = ineq.verdict("x", 1.0, 1.0 + 0.5e-5)
    assert v.passed and v.margin < 0
    assert not ineq.verdict("x", 1.0, 1.0 + 2e-5).passed
    assert ineq.verdict("x", 100.0, 100.0 + 5e-4).passed
    assert not ineq.verdict("x", 1.0, 0.0, residual=1e-5).valid
    assert ineq.verdict("x", 1.0, 0.0, residual=1e-7).to_dict()["valid"]


# --- log-Sobolev gain ---------------------------------------------------------------------

def test_phi_basics():
    assert ineq.phi(0.0, 2) == 0.0
    assert ineq.phi_pp0(3) == pytest.approx(1 / 3)
    for d in (1, 2, 3):
        for t in (0.1, 1, 5):
            assert ineq.phi(t, d) >= t * t / (2 * d)
        # the quadratic bound needs t >= 0 (entropies are nonnegative)
        for t in (-5, -1, -0.1):
            assert ineq.phi(t, d) < t * t / (2 * d)


# [DERIVED] closed form (e - 2)/2, evaluated in double precision
def test_phi_one_d2():
    assert ineq.phi(1.0, 2) == pytest.approx((math.e - 2) / 2, rel=1e-14)
    assert ineq.phi(1.0, 2) == pytest.approx(0.35914091422952255, rel=1e-14)


@given(t=st.floats(0, 5), d=st.integers(1, 3))
def test_phi_quadratic_lower_bound(t, d):
    assert ineq.phi(t, d) >= t * t / (2 * d) * (1 - 1e-12)


@given(t=st.floats(-4, 4), h=st.floats(1e-3, 0.5), d=st.integers(1, 3))
def test_phi_convex(t, h, d):
    assert ineq.phi(t + h, d) - 2 * ineq.phi(t, d) + ineq.phi(t - h, d) >= -1e-8


# --- Beckner gains ----------------------------------------------------------------------------

def test_phi_p_basics():
    assert ineq.phi_p(0.0, 1.5, 2) == 0.0
    for p in (1.0, 1.25, 1.5, 1.75):
        x = 1e-6
        assert ineq.phi_p(x, p, 2) / x == pytest.approx(p / (2 * (2 - p)), rel=1e-4)
    with pytest.raises(ineq.InequalityError):
        ineq.phi_p(0.5, 2.0, 1)
    with pytest.raises(ineq.InequalityError):
        ineq.phi_p(1.0, 1.5, 1)


# [DERIVED] bisection oracle on an independent transcription of phi_p(x) = x/(2-p)
X_STAR_15_D2 = 0.13112314790418056


def test_x_star_oracle():
    def g(x, p=1.5, d=2):
        return d / 4 * ((1 - x) ** (-2 * p / (d * (2 - p))) - 1) - x / (2 - p)

    root = bisect(g, 1e-6, 0.99, xtol=1e-15)
    assert root == pytest.approx(X_STAR_15_D2, abs=1e-12)
    assert ineq.x_star(1.5, 2) == pytest.approx(X_STAR_15_D2, abs=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.75])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_x_star_unique_root(p, d):
    xs = ineq.x_star(p, d)
    assert abs(ineq.phi_p(xs, p, d) - xs / (2 - p)) <= 1e-10 * xs
    grid = np.linspace(1e-6, 1 - 1e-6, 10_000)
    diff = ineq.phi_p(grid, p, d) - grid / (2 - p)
    assert np.count_nonzero(np.diff(np.sign(diff)) != 0) == 1


@pytest.mark.parametrize("p", [1.25, 1.5, 1.75])
def test_Phi_p_branches(p):
    d = 2
    xs = ineq.x_star(p, d)
    below = np.linspace(0, xs, 50, endpoint=False)
    above = np.linspace(xs, 0.99, 50)[1:]
    # the linear bound is the larger one below x_star; phi_p takes over above it
    assert np.allclose(ineq.Phi_p(below, p, d), below / (2 - p), rtol=0, atol=1e-15)
    assert np.all(ineq.Phi_p(above, p, d) > above / (2 - p))


def test_beckner_rate_linear_branch():
    p, d = 1.5, 1
    y = np.linspace(0, 0.05, 20)
    assert np.allclose(ineq.beckner_rate(y, p, d), 2 * y, rtol=1e-12, atol=1e-15)
    assert ineq.Psi_p(0.0, p, d) == 0.0


@given(x=st.floats(0, 0.99), p=st.floats(1.0, 1.95), d=st.integers(1, 3))
def test_Phi_p_dominates_line(x, p, d):
    assert ineq.Phi_p(x, p, d) >= x / (2 - p)


def test_spectral_bound():
    assert ineq.spectral_lambda_bound(1 + 1e-9) == pytest.approx(3.0)
    assert ineq.spectral_lambda_bound(1.5) == pytest.approx(24 / 7, rel=1e-15)
    vals = [ineq.spectral_lambda_bound(p) for p in np.linspace(1.05, 1.95, 19)]
    assert np.all(np.diff(vals) > 0)
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(ineq.InequalityError):
            ineq.spectral_lambda_bound(bad)


@pytest.mark.parametrize("e0", [0.01, 0.3, 2.0])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_ou_bound_dominance(e0, d):
    t = np.linspace(0, 5, 100)
    imp = ineq.ou_improved_bound(e0, t, d)
    assert imp[0] == pytest.approx(e0, rel=1e-12)
    assert np.all(imp <= e0 * np.exp(-2 * t) + 1e-10)


# --- Gagliardo-Nirenberg constants ----------------------------------------------------------------

# [DERIVED] arithmetic oracle: a = 1, b = 1/2, zeta = 1/3, alpha = 8/3, theta = 1/4
def test_gn_d2_q2():
    s = ineq.gn_setting(2.0, 2)
    assert s.case == "fd"
    assert (s.a, s.b, s.zeta_or_eta, s.alpha, s.theta_gn) == pytest.approx((1, 0.5, 1 / 3, 8 / 3, 0.25), rel=1e-14)
    assert s.theta_gn_display == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("d, q", FD_Q + PM_Q)
def test_gn_cross_identities(d, q):
    s = ineq.gn_setting(q, d)
    assert s.theta_gn == pytest.approx(s.theta_gn_display, rel=1e-12)
    z = s.zeta_or_eta
    if s.case == "fd":
        assert s.theta_gn == pytest.approx(2 * z / s.alpha, rel=1e-12)
        assert s.kappa * s.C == pytest.approx(s.B_star + s.C ** (1 / z) * s.B_star ** (1 - 1 / z), rel=1e-10)
    else:
        assert s.a > s.b
        assert s.theta_gn == pytest.approx(2 * z / ((q + 1) * (1 + z)), rel=1e-12)


@pytest.mark.parametrize("d, q", FD_Q + PM_Q)
def test_gn_B_star_matches_optimizer_integral(d, q):
    s = ineq.gn_setting(q, d)
    assert s.B_star == pytest.approx(s.beta * s.w_star_norms["lq1"], rel=1e-4)


@pytest.mark.parametrize("d, q", [(1, 1.0), (3, 3.0), (3, 4.0), (2, -0.5), (2, 0.0)])
def test_gn_inadmissible(d, q):
    with pytest.raises(ineq.InequalityError):
        ineq.gn_setting(q, d)


def test_q_p_roundtrip():
    for p in (0.6, 0.75, 1.25, 1.5):
        assert ineq.p_of_q(ineq.q_of_p(p)) == pytest.approx(p)


@pytest.mark.parametrize("d, q", FD_Q + PM_Q)
def test_gn_deficit_vanishes_at_optimizer(d, q):
    s = ineq.gn_setting(q, d)
    g = ineq.gn_grid(q, d)
    src = ineq.w_star_source(q, d)
    w = GridFunction(g, src(g.nodes), True, src)
    assert abs(ineq.gn_deficit(w, s)) <= 1e-5
    lhs, raw = ineq.check_gn(w, s)
    assert lhs.metadata["gain_argument"] == pytest.approx(0.0, abs=1e-8)
    assert abs(lhs.margin) <= 1e-5 and raw.passed


@pytest.mark.parametrize("d, q", PM_Q)
def test_pm_gain_convexity_margin(d, q):
    s = ineq.gn_setting(q, d)
    pp0 = s.gain_pp0
    assert pp0 > 0
    for frac in (0.1, 0.5, 1.0, 3.0):
        assert ineq.gn_gain_pp(frac * s.B_star, s) > pp0


@pytest.mark.parametrize("d, q", FD_Q + PM_Q)
def test_gain_quadratic_lower_bound(d, q):
    s = ineq.gn_setting(q, d)
    assert ineq.gn_gain(0.0, s) == 0.0
    for frac in (0.01, 0.1, 0.5, 0.9):
        sv = frac * s.B_star
        assert ineq.gn_gain(sv, s) >= 0.5 * s.gain_pp0 * sv * sv


@pytest.mark.parametrize("d, q", FD_Q)
def test_fd_gain_blows_up_at_B_star(d, q):
    s = ineq.gn_setting(q, d)
    vals = [float(ineq.gn_gain(f * s.B_star, s)) for f in (0.99, 0.995, 0.998, 0.9989)]
    assert np.all(np.diff(vals) > 0) and vals[-1] > 10 * vals[0] * 0 + vals[0]
    with pytest.raises(ineq.InequalityError):
        ineq.gn_gain(0.999 * s.B_star, s)


@given(frac=st.floats(-0.5, 0.95), h=st.floats(1e-4, 1e-2), idx=st.integers(0, len(FD_Q + PM_Q) - 1))
def test_gain_convex(frac, h, idx):
    d, q = (FD_Q + PM_Q)[idx]
    s = ineq.gn_setting(q, d)
    x = frac * s.B_star
    dh = h * s.B_star
    assume(x + dh < 0.998 * s.B_star)
    second = ineq.gn_gain(x + dh, s) - 2 * ineq.gn_gain(x, s) + ineq.gn_gain(x - dh, s)
    assert second >= -1e-8


# --- scale optimization -------------------------------------------------------------------------

def test_scale_symmetric_case():
    s = dataclasses.replace(ineq.gn_setting(2.0, 2), a=1.0, b=1.0)
    lam, _ = ineq.scale_optimize(2.0, 2.0, s)
    assert lam == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("d, q", [(2, 2.0), (3, 1.5), (1, 0.5), (3, 0.3)])
@pytest.mark.parametrize("A, B", [(0.5, 2.0), (3.0, 0.7)])
def test_scale_optimize_scan(d, q, A, B):
    s = ineq.gn_setting(q, d)
    lam, hmin = ineq.scale_optimize(A, B, s)
    scan = lam * np.geomspace(0.1, 10, 101)
    assert np.all(ineq.scale_function(scan, A, B, s.C, s) >= hmin - 1e-12 * abs(hmin))
    assert ineq.scale_function(1.0, A, B, s.C, s) >= hmin
    assert hmin == pytest.approx(ineq.scale_minimum_closed_form(A, B, s.C, s), rel=1e-12)


def test_scale_optimize_rejects_nonpositive():
    s = ineq.gn_setting(2.0, 2)
    with pytest.raises(ineq.InequalityError):
        ineq.scale_optimize(0.0, 1.0, s)


# --- log-Sobolev checks -----------------------------------------------------------------------------

@pytest.mark.parametrize("variant", ineq.LOGSOB_VARIANTS)
def test_logsob_constant_is_equality(variant):
    g = build_grid("radial", 2, 12.0, 2048)
    one = GridFunction(g, np.ones(g.n), True)
    v = ineq.check_logsob(one, variant)
    assert abs(v.margin) <= 1e-6 and v.passed and v.valid


@pytest.mark.parametrize("d", [1, 2, 3])
def test_logsob_improved_on_perturbed_gaussian(d):
    v = ineq.check_logsob(_u(ProfileSpec("perturbed_gaussian", eps=0.2, k=3), d), "improved")
    assert v.passed and v.margin >= 0 and v.valid
    assert v.rhs > v.metadata["plain_rhs"]


def test_logsob_exponential_dominates_plain():
    from entstab.profiles import gaussian_corpus

    for d in (1, 2, 3):
        for _, spec in gaussian_corpus(d):
            v = ineq.check_logsob(_u(spec, d, 1024), "exponential")
            if v.metadata["entropy"] > 1e-12:
                assert v.rhs >= v.metadata["plain_rhs"]


def test_logsob_unknown_variant():
    with pytest.raises(ineq.InequalityError):
        ineq.check_logsob(_u(ProfileSpec("gaussian"), 1), "sharp")


# --- stability chain ---------------------------------------------------------------------------------

@pytest.mark.parametrize("theta, d", [(0.5, 1), (1.0, 2), (2.0, 3)])
def test_stability_gaussian_all_zero(theta, d):
    spec = ProfileSpec("gaussian", mass=1.3, temperature=theta)
    for v in ineq.check_stability(sample(spec, grid_for(spec, d))):
        assert abs(v.lhs) <= 1e-6 and abs(v.rhs) <= 1e-6


# [DERIVED] f = N(1, 1), mu_f = N(0, 2): e = log(2)/2, deficit = (1 - log 2)/2, L1 by adaptive quadrature
def test_stability_offcenter_members():
    def gauss(x, c, th):
        return np.exp(-((x - c) ** 2) / (2 * th)) / np.sqrt(2 * np.pi * th)

    cross = 2 + np.array([-1, 1]) * np.sqrt(2 + 2 * math.log(2))
    l1, _ = spi.quad(lambda x: abs(gauss(x, 1, 1) - gauss(x, 0, 2)), -40, 40, points=cross, epsabs=1e-14, limit=200)
    spec = ProfileSpec("gaussian_offcenter", center=1.0)
    lemma, chain, pinsker = ineq.check_stability(sample(spec, grid_for(spec, 1)))
    assert lemma.metadata["relative_entropy"] == pytest.approx(math.log(2) / 2, abs=1e-6)
    assert lemma.lhs == pytest.approx((1 - math.log(2)) / 2, abs=1e-6)
    assert lemma.metadata["l1_distance"] == pytest.approx(l1, abs=1e-6)
    # a translate of the optimizer saturates the lemma; the weaker members stay strict
    assert lemma.lhs == pytest.approx(lemma.rhs, abs=1e-10)
    assert chain.margin > 0 and pinsker.margin > 0


def test_stability_pm_barenblatt_strict():
    for v in ineq.check_stability(_barenblatt(2.0, 1)):
        assert v.margin > 1e-4


# --- Beckner checks ------------------------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 1.5])
@pytest.mark.parametrize("variant", ineq.BECKNER_VARIANTS)
def test_beckner_constant_is_equality(p, variant):
    g = build_grid("radial", 1, 12.0, 2048)
    v = ineq.check_beckner(GridFunction(g, np.ones(g.n), True), p, variant)
    assert abs(v.margin) <= 1e-6


@pytest.mark.parametrize("variant", ["plain", "improved", "combined"])
def test_beckner_poincare_case(variant):
    v = ineq.check_beckner(_u(ProfileSpec("perturbed_gaussian", eps=0.2, k=2), 2), 1.0, variant)
    assert v.passed and v.margin > 0


def test_beckner_distance_direction():
    u = _u(ProfileSpec("perturbed_gaussian", eps=0.2, k=3), 1)
    for p in (1.0, 1.5):
        v = ineq.check_beckner(u, p, "distance")
        # the variance about |u|'s mean dominates the p-gap, never the other way round
        assert v.passed and v.margin > 0
        assert not v.metadata["reversed_holds"]


def test_beckner_bad_p():
    u = _u(ProfileSpec("gaussian"), 1)
    with pytest.raises(ineq.InequalityError):
        ineq.check_beckner(u, 2.0)
    with pytest.raises(ineq.InequalityError):
        ineq.check_beckner(u, 1.5, "sharp")


# --- GN checks -----------------------------------------------------------------------------------------

@pytest.mark.parametrize("d, q", [(1, 0.5), (2, 0.3), (3, 0.8)])
@pytest.mark.parametrize("lam", [0.8, 1.2])
def test_gn_pm_dilated_optimizer_saturates(d, q, lam):
    # scale optimization is exact along the dilation orbit of w_star, so J = gain
    # there; the discrete gap must shrink under refinement
    gaps = []
    for n in (2048, 4096):
        s = ineq.gn_setting(q, d, n)
        g = ineq.gn_grid(q, d, n)
        base = ineq.w_star_source(q, d)
        src = lambda x: base(lam * np.asarray(x))  # noqa: E731
        lhs, raw = ineq.check_gn(GridFunction(g, src(g.nodes), True, src), s)
        assert lhs.rhs > 0 and raw.passed
        gaps.append(abs(lhs.margin) / lhs.rhs)
    assert gaps[0] <= 1e-4 and gaps[1] <= gaps[0] / 2


def test_gn_dimension_mismatch():
    s = ineq.gn_setting(2.0, 2)
    with pytest.raises(ineq.InequalityError):
        ineq.check_gn(_barenblatt(1.5, 1), s)


# --- flow entropies --------------------------------------------------------------------------------------

@pytest.mark.parametrize("p, d", [(0.75, 2), (0.7, 1), (1.5, 2), (1.25, 3)])
def test_flow_checks_on_barenblatt(p, d):
    case = "fd" if p < 1 else "pm"
    for var in ineq.FLOW_VARIANTS:
        v = ineq.check_flow_entropy(_barenblatt(p, d), p, case, var)
        assert abs(v.lhs) <= 1e-5 and abs(v.rhs) <= 1e-5
    scaled = _barenblatt(p, d, mass=2 * barenblatt_mass(p, d), scale=1.5)
    v = ineq.check_flow_entropy(scaled, p, case, "unscaled")
    assert abs(v.margin) <= 1e-5


@pytest.mark.parametrize("p, d", [(0.75, 2), (0.7, 1), (1.5, 2), (1.25, 3)])
def test_flow_quadratic_strict(p, d):
    case = "fd" if p < 1 else "pm"
    spec = ProfileSpec("perturbed_barenblatt", p=p, eps=0.2)
    v = ineq.check_flow_entropy(sample(spec, grid_for(spec, d)), p, case, "quadratic")
    assert v.margin > 0 and v.valid


# --- Csiszar-Kullback bounds -------------------------------------------------------------------------------

@pytest.mark.parametrize("p, d", [(0.75, 2), (0.85, 3), (2.0, 1), (2.5, 2)])
def test_ck_zero_at_matched_barenblatt(p, d):
    case = "fd" if p < 1 else "pm"
    u = _barenblatt(p, d, mass=1.7 * barenblatt_mass(p, d), scale=1.3)
    v = ineq.check_ck(u, p, case)
    assert abs(v.lhs) <= 1e-10 and abs(v.rhs) <= 1e-10


# [DERIVED] direct evaluation: chi(1) = 0, chi(0) = p - 1 - c_p
@pytest.mark.parametrize("p", [1.25, 1.5, 2.0, 2.5, 3.0])
def test_chi_values(p):
    assert ineq.chi(1.0, p) == 0.0
    assert ineq.chi(0.0, p) == pytest.approx(p - 1 - ineq.c_p(p), abs=1e-15)
    assert ineq.chi(0.0, p) >= 0


def test_chi_sign_on_dense_sample():
    t = np.linspace(0, 5, 50_001)
    for p in (2.0, 2.5, 3.0):
        assert ineq.chi(t, p).min() >= -1e-12
    # below p = 2 the function dips under zero just above t = 1
    assert ineq.chi(t, 1.5).min() < 0


@pytest.mark.parametrize("p, d", [(0.75, 2), (0.7, 1), (2.5, 2), (3.0, 3)])
def test_ck_perturbed(p, d):
    case = "fd" if p < 1 else "pm"
    spec = ProfileSpec("perturbed_barenblatt", p=p, eps=0.2)
    u = sample(spec, grid_for(spec, d))
    const = "displayed" if case == "fd" else "proof"
    v = ineq.check_ck(u, p, case, const)
    assert v.passed and v.margin > 0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ck_pm_quadratic_case_constant(d):
    # at p = 2 the free energy is exactly int (u - B)^2, half the larger constant's right side
    spec = ProfileSpec("perturbed_barenblatt", p=2.0, eps=0.2)
    u = sample(spec, grid_for(spec, d))
    shown = ineq.check_ck(u, 2.0, "pm", "displayed")
    proof = ineq.check_ck(u, 2.0, "pm", "proof")
    assert shown.rhs == pytest.approx(2 * shown.lhs, rel=1e-9)
    assert proof.rhs == pytest.approx(shown.lhs, rel=1e-9)


def test_ck_fd_range():
    with pytest.raises(ineq.InequalityError):
        ineq.check_ck(_barenblatt(0.7, 3), 0.55, "fd")


# --- suites -------------------------------------------------------------------------------------------------

def test_suite_sizes():
    for suite in ineq.SUITES:
        for d in (1, 2, 3):
            assert len(ineq.default_corpus(suite, d)) >= 15


def test_ck_suite_failures_are_the_displayed_pm_constant():
    recs = ineq.run_suite("ck", 2, n=1024)
    failing = {r.verdict.inequality_id for r in recs if not r.verdict.passed}
    assert failing == {"ck.pm.displayed"}
    bad = [r for r in recs if not r.verdict.passed]
    assert all(r.param.startswith("p=2:") for r in bad)


def test_unknown_suite():
    with pytest.raises(ineq.InequalityError):
        ineq.run_suite("sobolev", 1)
