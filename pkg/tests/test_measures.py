import math

import numpy as np
import pytest
from scipy import integrate, special

from coalflow.measures import (
    BetaLambda,
    BranchingMechanism,
    DensityLambda,
    FiniteAtomsLambda,
    JumpMeasureDensity,
    JumpMeasureFiniteAtoms,
    JumpMeasureStable,
    Kingman,
    UnsupportedFamilyError,
    binom_moment,
    cdi_check,
    coalescent_weight,
    compensated_exp,
    extinction_check,
    nu_tail,
    phi_eval,
    phi_psi_ratio_bracket,
    phi_weight,
    psi_derivative,
    psi_eval,
)

STABLE15 = BranchingMechanism(0.0, JumpMeasureStable(1.5))
DELTA1 = BranchingMechanism(0.0, JumpMeasureFiniteAtoms([(1.0, 1.0)]))
FELLER = BranchingMechanism(0.5, None)
B0515 = BetaLambda(0.5, 1.5)
BS = BetaLambda(1.0, 1.0)
ATOM05 = FiniteAtomsLambda([(0.5, 0.25)])  # nu = delta_{0.5}


# ---------------------------------------------------------------- kernels

def test_stable_kernels_match_direct_evaluation():
    x = np.array([0.3, 0.5, 0.05, 0.01])
    b = 17
    direct = 1 - (1 - x) ** b - b * x * (1 - x) ** (b - 1)
    assert np.allclose(coalescent_weight(b, x), direct, rtol=1e-12)
    q = 7.0
    direct = q * x - 1 + (1 - x) ** q
    assert np.allclose(phi_weight(q, x), direct, rtol=1e-12)


def test_compensated_exp_small_argument():
    y = 1e-9
    assert compensated_exp(y) == pytest.approx(y * y / 2, rel=1e-10)


# ---------------------------------------------------------------- psi

def test_psi_stable_closed_form_vs_quadrature():
    # oracle: adaptive quadrature of the defining integral
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = integrate.quad(
            lambda r: (math.exp(-r) - 1 + r) * 1.5 * r ** -2.5, 0, np.inf,
            limit=800, epsrel=1e-11, epsabs=0.0)
    assert psi_eval(STABLE15, 1.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-12)
    assert psi_eval(STABLE15, 1.0) == pytest.approx(val, rel=1e-7)


def test_psi_trivial_and_atom_values():
    assert psi_eval(STABLE15, 0.0) == 0.0
    assert psi_eval(DELTA1, 0.0) == 0.0
    assert psi_eval(DELTA1, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_psi_convexity_on_grid():
    for mech in (STABLE15, DELTA1, FELLER):
        q = np.linspace(0.0, 8.0, 33)
        psi = np.array([psi_eval(mech, float(v)) for v in q])
        mid = np.array([psi_eval(mech, float(v)) for v in 0.5 * (q[1:] + q[:-1])])
        assert np.all(mid <= 0.5 * (psi[1:] + psi[:-1]) + 1e-12)


def test_psi_derivative_values_and_signs():
    assert psi_derivative(STABLE15, 2, 1.0) == pytest.approx(
        1.5 * math.sqrt(math.pi), rel=1e-12)
    # quadrature oracle for the same quantity
    val, _ = integrate.quad(lambda r: r ** 2 * math.exp(-r) * 1.5 * r ** -2.5,
                            0, np.inf, limit=400)
    assert psi_derivative(STABLE15, 2, 1.0) == pytest.approx(val, rel=1e-9)
    assert psi_derivative(DELTA1, 2, 1e-9) == pytest.approx(1.0, rel=1e-6)
    for mech in (STABLE15, DELTA1):
        for k in range(2, 7):
            for q in (0.5, 1.0, 3.0):
                assert (-1) ** k * psi_derivative(mech, k, q) >= 0
    assert psi_derivative(STABLE15, 3, 1.0) < 0


def test_psi_derivative_rejects_low_order():
    with pytest.raises(ValueError):
        psi_derivative(STABLE15, 1, 1.0)


# ---------------------------------------------------------------- phi

def test_phi_trivial_zero_at_one():
    for lam in (B0515, BS, ATOM05):
        assert phi_eval(lam, 1.0) == pytest.approx(0.0, abs=1e-10)


def test_phi_probability_measure_at_two():
    # Phi(2) = int r^2 nu = Lambda(]0,1]) = 1
    assert phi_eval(B0515, 2.0) == pytest.approx(1.0, rel=1e-8)


def test_phi_atom_value():
    assert phi_eval(ATOM05, 2.0) == pytest.approx(0.25, rel=1e-12)


def test_phi_nondecreasing():
    qs = [1.0, 2.0, 5.0, 20.0, 1e3, 1e6]
    for lam in (B0515, BS, ATOM05):
        vals = [phi_eval(lam, q) for q in qs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_phi_kingman_unsupported():
    with pytest.raises(UnsupportedFamilyError):
        phi_eval(Kingman(), 2.0)


# ---------------------------------------------------------------- nu_tail

def test_nu_tail_beta_oracle_value():
    # frozen quadrature oracle for int_{.5}^1 x^{-2.5}(1-x)^{.5} dx / B(.5,1.5)
    assert nu_tail(B0515, 0.5) == pytest.approx(0.4244131815783878, rel=1e-9)


def test_nu_tail_atom_trivial():
    assert nu_tail(ATOM05, 0.6) == 0.0
    assert nu_tail(ATOM05, 0.5) == pytest.approx(1.0)


def test_nu_tail_regular_variation_limit():
    # eps^gamma nu([eps,1]) -> 1/(gamma B(2-gamma,gamma)) = 4/(3 pi)
    lim = 4.0 / (3.0 * math.pi)
    vals = {eps: eps ** 1.5 * nu_tail(B0515, eps) for eps in (1e-2, 1e-3, 1e-4)}
    assert vals[1e-4] == pytest.approx(lim, rel=0.01)
    assert abs(vals[1e-3] - lim) < abs(vals[1e-2] - lim)


def test_nu_tail_matches_scipy_quad():
    for eps in (0.05, 0.3, 0.7):
        ref, _ = integrate.quad(
            lambda x: x ** -2.5 * (1 - x) ** 0.5 / special.beta(0.5, 1.5),
            eps, 1.0, limit=400, epsrel=1e-12)
        assert nu_tail(B0515, eps) == pytest.approx(ref, rel=1e-9)


# ---------------------------------------------------------------- binom_moment

def test_binom_moment_closed_values():
    assert binom_moment(BS, 5, 2) == pytest.approx(0.25, rel=1e-12)
    assert binom_moment(BS, 3, 3) == pytest.approx(0.5, rel=1e-12)
    assert binom_moment(ATOM05, 2, 2) == pytest.approx(0.25, rel=1e-12)


def test_binom_moment_closed_form_vs_quadrature():
    lam = B0515
    for b in (2, 5, 17, 50):
        for k in sorted({2, min(b, 3), min(b, 7), b}):
            ref, _ = integrate.quad(
                lambda x: x ** (k - 2) * (1 - x) ** (b - k)
                * x ** -0.5 * (1 - x) ** 0.5 / special.beta(0.5, 1.5),
                0, 1, limit=400, epsrel=1e-12)
            assert binom_moment(lam, b, k) == pytest.approx(ref, rel=1e-7)


def test_binom_moment_log_space_large_b():
    v = binom_moment(B0515, 10 ** 6, 2)
    assert 0 < v < 1 and math.isfinite(v)


# ---------------------------------------------------------------- verdicts

def test_extinction_verdicts():
    assert extinction_check(STABLE15) == "Extinct"
    assert extinction_check(FELLER) == "Extinct"
    assert extinction_check(DELTA1) == "NotExtinct"


def test_cdi_verdicts():
    assert cdi_check(Kingman()) == "ComesDown"
    for g in (1.2, 1.5, 1.8):
        assert cdi_check(BetaLambda(2 - g, g)) == "ComesDown"
    assert cdi_check(BS) == "DoesNotComeDown"
    assert cdi_check(ATOM05) == "DoesNotComeDown"


def test_phi_psi_ratio_bracket():
    for lam in (B0515, BS):
        lo, hi = phi_psi_ratio_bracket(lam)
        assert 0.0 < lo <= hi <= 1.0 + 1e-9


# ---------------------------------------------------------------- construction

def test_constructors_reject_bad_input():
    with pytest.raises(ValueError):
        JumpMeasureStable(1.0)
    with pytest.raises(ValueError):
        JumpMeasureStable(2.0)
    with pytest.raises(ValueError):
        BranchingMechanism(0.0, None)
    with pytest.raises(ValueError):
        JumpMeasureFiniteAtoms([(0.0, 1.0)])
    with pytest.raises(ValueError):
        FiniteAtomsLambda([(1.5, 1.0)])
    with pytest.raises(ValueError):
        BetaLambda(-1.0, 1.0)


def test_density_families():
    pi = JumpMeasureDensity(lambda r: 1.0, (0.0, 1.0))
    val, _ = integrate.quad(lambda r: math.exp(-r) - 1 + r, 0, 1)
    assert pi.psi_integral(1.0) == pytest.approx(val, rel=1e-9)
    lam = DensityLambda(lambda x: 2.0 * x)  # Lambda density 2x => nu density 2/x
    ref = -2.0 * math.log(0.25)
    assert lam.nu_tail(0.25) == pytest.approx(ref, rel=1e-9)


def test_beta_regvar_metadata():
    assert B0515.regvar_gamma == pytest.approx(1.5)
    assert BetaLambda(1.5, 0.5).regvar_gamma is None
