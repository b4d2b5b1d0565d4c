import math

import numpy as np
import pytest

from coalflow.coalescent import BlockState, fv_marginal_via_dual, simulate_to
from coalflow.fleming_viot import (
    FiniteNu,
    rescale_largepop,
    simulate_fv_flow,
    simulate_fv_marginal_batch,
)
from coalflow.measures import FiniteAtomsLambda

NU_HALF = FiniteNu(atoms=[(0.5, 1.0)])  # nu = delta_{1/2}


def test_finite_nu_validation():
    with pytest.raises(ValueError):
        FiniteNu()
    with pytest.raises(ValueError):
        FiniteNu(atoms=[(1.5, 1.0)])
    with pytest.raises(ValueError):
        FiniteNu(atoms=[(0.5, -1.0)])
    with pytest.raises(ValueError):
        FiniteNu(density=lambda x: x ** -2.5)  # not integrable near 0


def test_density_nu_sampling():
    nu = FiniteNu(density=lambda x: 2.0 * x)
    assert nu.total == pytest.approx(1.0, rel=1e-6)
    rng = np.random.default_rng(0)
    draws = nu.sample_xi(rng, size=50_000)
    # E xi = int x 2x dx = 2/3
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - 2.0 / 3.0) <= 3 * se


def test_flow_boundaries_fixed():
    rng = np.random.default_rng(1)
    st = simulate_fv_flow(NU_HALF, (0.0, 0.4, 1.0), 5.0, rng)
    assert st.values[0] == 0.0
    assert st.values[-1] == 1.0
    assert st.clock == 5.0


def test_flow_preserves_order():
    rng = np.random.default_rng(2)
    for _ in range(200):
        st = simulate_fv_flow(NU_HALF, (0.1, 0.5, 0.9), 2.0, rng)
        assert np.all(np.diff(st.values) >= 0.0)
        assert np.all((st.values >= 0.0) & (st.values <= 1.0))


def test_flow_martingale_mean():
    # E[F_t(x)] = x
    rng = np.random.default_rng(3)
    n, x = 20_000, 0.3
    vals = simulate_fv_marginal_batch(NU_HALF, x, 1.0, n, rng)
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - x) <= 3 * se


def test_flow_and_batch_agree_in_law():
    rng = np.random.default_rng(4)
    n, x, t = 4000, 0.3, 1.0
    a = np.array([simulate_fv_flow(NU_HALF, (x,), t, rng).values[0]
                  for _ in range(n)])
    b = simulate_fv_marginal_batch(NU_HALF, x, t, n, rng)
    for q in (1.0, 4.0):
        wa, wb = np.exp(-q * a), np.exp(-q * b)
        se = math.hypot(wa.std(ddof=1), wb.std(ddof=1)) / math.sqrt(n)
        assert abs(wa.mean() - wb.mean()) <= 3 * se


def test_flow_matches_dual_coalescent_moments():
    # E[F_t(y)^n] = E[y^{#blocks of the dual n-coalescent at t}]
    # for Lambda(dx) = x^2 nu(dx)
    rng = np.random.default_rng(5)
    lam = FiniteAtomsLambda([(0.5, 0.25)])
    n_pow, y, t, reps = 3, 0.4, 1.0, 30_000
    f = simulate_fv_marginal_batch(NU_HALF, y, t, reps, rng)
    w = f ** n_pow
    dual = np.array([
        y ** simulate_to(lam, BlockState.singletons(n_pow), t, rng).block_count
        for _ in range(8000)])
    se = math.hypot(w.std(ddof=1) / math.sqrt(reps),
                    dual.std(ddof=1) / math.sqrt(8000))
    assert abs(w.mean() - dual.mean()) <= 3 * se


def test_fv_marginal_via_dual_matches_direct_law():
    # one-dimensional law via the dual line vs direct flow simulation
    rng = np.random.default_rng(6)
    lam = FiniteAtomsLambda([(0.5, 0.25)])
    y, t = 0.3, 1.0
    direct = simulate_fv_marginal_batch(NU_HALF, y, t, 8000, rng)
    dual = np.array([
        fv_marginal_via_dual(
            simulate_to(lam, BlockState.singletons(800), t, rng), y, rng)
        for _ in range(2000)])
    # compare distributions through a few Laplace points
    for q in (1.0, 3.0):
        wa, wb = np.exp(-q * direct), np.exp(-q * dual)
        se = math.hypot(wa.std(ddof=1) / math.sqrt(len(wa)),
                        wb.std(ddof=1) / math.sqrt(len(wb)))
        # dual uses a finite sample of n=800 lines: allow a small bias term
        assert abs(wa.mean() - wb.mean()) <= 3 * se + 0.01


def test_rescaled_nu_pushforward():
    nu = FiniteNu(atoms=[(0.5, 2.0)])
    sc = nu.rescaled(4.0)
    assert sc.total == pytest.approx(2.0)
    assert sc.x[0] == pytest.approx(0.125)


def test_rescale_largepop_identity_and_mean():
    rng = np.random.default_rng(7)
    st = rescale_largepop(1.0, NU_HALF, (0.2,), 1.0, rng)
    assert st.clock == 1.0
    # martingale mean survives the rescaling
    a, x, n = 5.0, 1.0, 4000
    vals = np.array([
        rescale_largepop(a, NU_HALF.rescaled(a), (x,), 1.0, rng).values[0]
        for _ in range(n)])
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - x) <= 3 * se


def test_rescale_rejects_points_outside_range():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        rescale_largepop(2.0, NU_HALF, (3.0,), 1.0, rng)
