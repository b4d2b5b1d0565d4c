import math

import numpy as np
import pytest
from scipy import integrate

from coalflow.csbp_analytic import (
    CumulantSolver,
    LevyMeasureTable,
    feller_levy_cdf,
    feller_levy_density,
    g_scaling,
    invert_cdf_transform,
    lambda1_laplace_stable,
    levy_cdf,
    levy_total_mass,
    stable_levy_cdf,
    ut,
)
from coalflow.measures import (
    BranchingMechanism,
    JumpMeasureDensity,
    JumpMeasureFiniteAtoms,
    JumpMeasureStable,
    psi_eval,
)

STABLE15 = BranchingMechanism(0.0, JumpMeasureStable(1.5))
FELLER = BranchingMechanism(0.5, None)
DELTA1 = BranchingMechanism(0.0, JumpMeasureFiniteAtoms([(1.0, 1.0)]))
GAMMA = math.gamma(0.5)  # Gamma(2 - 1.5)


# ---------------------------------------------------------------- ut

def test_ut_closed_forms():
    # Feller: q / (1 + beta q t)
    assert ut(FELLER, 1.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-12)
    # stable: (q^{1-gamma} + Gamma(2-gamma) t)^{1/(1-gamma)}
    ref = (1.0 + GAMMA) ** -2.0
    assert ut(STABLE15, 1.0, 1.0) == pytest.approx(ref, rel=1e-12)
    assert ut(STABLE15, 1.0, 1.0) == pytest.approx(0.1300982181438868, rel=1e-13)


def test_ut_initial_condition_and_monotonicity():
    for mech in (STABLE15, FELLER, DELTA1):
        assert ut(mech, 0.0, 3.0) == pytest.approx(3.0, rel=1e-12)
        vals = [ut(mech, t, 3.0) for t in (0.1, 0.5, 1.0, 2.0)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_ut_generic_ode_matches_stable_closed_form():
    # truncated stable density; support cutoffs bound the closed-form gap
    pi = JumpMeasureDensity(lambda r: 1.5 * r ** -2.5, (1e-14, 1e10))
    mech = BranchingMechanism(0.0, pi)
    solver = CumulantSolver(mech)
    for t in (0.1, 1.0, 2.0):
        for q in (0.3, 1.0, 2.0):
            assert solver.ut(t, q) == pytest.approx(
                ut(STABLE15, t, q), rel=1e-4)


def test_ut_semigroup_property():
    mech = BranchingMechanism(0.0, JumpMeasureFiniteAtoms([(1.0, 1.0), (0.3, 2.0)]))
    solver = CumulantSolver(mech)
    for q in (0.5, 2.0):
        assert solver.ut(0.7, solver.ut(0.5, q)) == pytest.approx(
            solver.ut(1.2, q), rel=1e-8)


def test_ut_stable_scaling_identity():
    # u_s(q) = s^{1/(1-gamma)} u_1(q s^{1/(gamma-1)})
    for s in (0.25, 0.5, 2.0):
        for q in (0.5, 1.0, 4.0):
            lhs = ut(STABLE15, s, q)
            rhs = s ** -2.0 * ut(STABLE15, 1.0, q * s ** 2.0)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_ut_ode_consistency_with_psi():
    # d/dt ut = -Psi(ut), central difference
    solver = CumulantSolver(DELTA1)
    h = 1e-6
    for t in (0.3, 1.0):
        lhs = (solver.ut(t + h, 2.0) - solver.ut(t - h, 2.0)) / (2 * h)
        assert lhs == pytest.approx(-psi_eval(DELTA1, solver.ut(t, 2.0)), rel=1e-6)


# ---------------------------------------------------------------- total mass

def test_levy_total_mass_closed_forms():
    assert levy_total_mass(FELLER, 1.0) == pytest.approx(2.0, rel=1e-12)
    assert levy_total_mass(STABLE15, 1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)
    assert levy_total_mass(FELLER, 2.0) == pytest.approx(1.0, rel=1e-12)


def test_levy_total_mass_not_extinct_is_infinite():
    assert levy_total_mass(DELTA1, 1.0) == math.inf


def test_levy_total_mass_generic_extrapolation():
    pi = JumpMeasureDensity(lambda r: 1.5 * r ** -2.5, (1e-14, 1e10))
    mech = BranchingMechanism(0.0, pi)
    assert levy_total_mass(mech, 1.0) == pytest.approx(1.0 / math.pi, rel=1e-3)


# ---------------------------------------------------------------- Feller density

def test_feller_density_integrates_to_cdf():
    t = 1.0
    for x in (0.2, 1.0, 3.0):
        ref, _ = integrate.quad(lambda s: feller_levy_density(t, s), 0, x)
        assert feller_levy_cdf(t, x) == pytest.approx(ref, rel=1e-10)
    # closed form: (2/t)(1 - exp(-2x/t))
    assert feller_levy_cdf(1.0, 1.0) == pytest.approx(2 * (1 - math.exp(-2)),
                                                      rel=1e-12)
    assert feller_levy_cdf(1.0, 1.0) == pytest.approx(1.7293294335267746, rel=1e-13)


def test_feller_density_rejects_bad_arguments():
    with pytest.raises(ValueError):
        feller_levy_density(0.0, 1.0)
    with pytest.raises(ValueError):
        feller_levy_density(1.0, 0.0)


# ---------------------------------------------------------------- transforms

def test_lambda1_laplace_stable_limits():
    assert lambda1_laplace_stable(1.5, 0.0) == pytest.approx(0.0, abs=1e-12)
    # q -> inf the Laplace functional saturates at the total mass
    assert lambda1_laplace_stable(1.5, 1e8) == pytest.approx(
        1.0 / math.pi, rel=1e-3)
    assert lambda1_laplace_stable(1.5, 1.0) == pytest.approx(
        ut(STABLE15, 1.0, 1.0), rel=1e-12)
    with pytest.raises(ValueError):
        lambda1_laplace_stable(1.0, 1.0)


def test_talbot_inversion_recovers_feller_cdf():
    # F(x) known in closed form; transform of F is 4 / (t q (2 + q t))
    t = 1.0
    for x in (0.1, 0.7, 2.0):
        got = invert_cdf_transform(lambda q: 4.0 / (t * q * (2.0 + q * t)), x)
        assert got == pytest.approx(feller_levy_cdf(t, x), rel=1e-10)


def test_stable_levy_cdf_frozen_values():
    frozen = {
        0.1: 0.10249207401,
        0.5: 0.179853429393,
        1.0: 0.216609342705,
        2.0: 0.250448875186,
        5.0: 0.284864879663,
    }
    for x, ref in frozen.items():
        assert stable_levy_cdf(1.5, 1.0, x) == pytest.approx(ref, rel=1e-9)


def test_stable_levy_cdf_monotone_and_saturates():
    xs = [0.05, 0.2, 1.0, 5.0, 30.0]
    vals = [stable_levy_cdf(1.5, 1.0, x) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1.0 / math.pi
    assert stable_levy_cdf(1.5, 1.0, 200.0) == pytest.approx(1.0 / math.pi,
                                                             rel=5e-3)


def test_levy_cdf_dispatch():
    assert levy_cdf(FELLER, 1.0, 1.0) == pytest.approx(feller_levy_cdf(1.0, 1.0))
    assert levy_cdf(STABLE15, 1.0, 1.0) == pytest.approx(
        stable_levy_cdf(1.5, 1.0, 1.0))
    with pytest.raises(ValueError):
        levy_cdf(DELTA1, 1.0, 1.0)  # not almost surely extinct
    trunc = BranchingMechanism(
        0.0, JumpMeasureDensity(lambda r: 1.5 * r ** -2.5, (1e-12, 1e2)))
    with pytest.raises(NotImplementedError):
        levy_cdf(trunc, 1.0, 1.0)


def test_cdf_reproduces_cumulant():
    # int (1 - e^{-qx}) dF(x) == ut(q) for the cluster measure
    # grid truncation above x=200 leaves ~3e-4 of the mass out of the table
    table = LevyMeasureTable.build(STABLE15, 1.0,
                                   np.logspace(-5, 2.3, 200))
    for q in (0.5, 1.0, 3.0):
        assert table.laplace(q) == pytest.approx(ut(STABLE15, 1.0, q), abs=5e-4)


# ---------------------------------------------------------------- scaling map

def test_g_scaling_values():
    from coalflow.measures import BetaLambda
    lam = BetaLambda(0.5, 1.5)
    assert g_scaling(lam, 0.01) == pytest.approx(0.23919844068168017, rel=1e-8)
    vals = [g_scaling(lam, e) for e in (0.1, 0.01, 0.001)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # small-eps asymptotics: g(eps) ~ eps^{gamma-1} * 3 pi / 4
    assert g_scaling(lam, 1e-5) == pytest.approx(
        (1e-5) ** 0.5 * 3 * math.pi / 4, rel=5e-3)


# ---------------------------------------------------------------- table I/O

def test_levy_table_roundtrip(tmp_path):
    xs = np.logspace(-3, 1, 50)
    table = LevyMeasureTable.build(FELLER, 1.0, xs)
    path = tmp_path / "table.csv"
    path.write_text(table.to_csv())
    back = LevyMeasureTable.from_csv(path.read_text())
    assert np.allclose(back.xs, table.xs)
    assert np.allclose(back.cdf, table.cdf)
    assert back.cdf_at(0.5) == pytest.approx(table.cdf_at(0.5), rel=1e-12)


def test_levy_table_matches_feller_closed_form():
    xs = np.logspace(-3, 1.5, 120)
    table = LevyMeasureTable.build(FELLER, 1.0, xs)
    assert np.allclose(table.cdf, feller_levy_cdf(1.0, xs), rtol=1e-10)
    # off-node lookups interpolate linearly
    assert table.cdf_at(0.1) == pytest.approx(feller_levy_cdf(1.0, 0.1),
                                              rel=1e-3)
