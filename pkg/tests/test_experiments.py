import json
import math

import numpy as np
import pytest

from coalflow.experiments import (
    ExperimentReport,
    _map_replicas,
    cdi_equivalence_run,
    largepop_marginal_run,
    rate_asymptotics_check,
    replica_rngs,
    replica_seed,
    series_identities,
    smalltime_kingman_control,
    smolu_residual,
)
from coalflow.measures import (
    BranchingMechanism,
    JumpMeasureFiniteAtoms,
    JumpMeasureStable,
)

STABLE15 = BranchingMechanism(0.0, JumpMeasureStable(1.5))
FELLER = BranchingMechanism(0.5, None)


# ---------------------------------------------------------------- report

def test_report_gating_and_serialization():
    rep = ExperimentReport("demo", {"p": 1}, 10)
    rep.add("a", 1.0, 1.0005, 1e-3, "closed-form")
    assert rep.passed
    rep.add("b", 1.0, 2.0, 1e-3, "oracle-MC")
    assert not rep.passed
    doc = json.loads(rep.to_json())
    assert doc["passed"] is False
    assert {s["name"] for s in doc["statistics"]} == {"a", "b"}
    assert "wall_time" not in doc
    assert "FAIL" in rep.to_text()
    with pytest.raises(ValueError):
        rep.add("c", 0.0, 0.0, 0.0, "hearsay")


def test_replica_seeding_deterministic_and_distinct():
    r1 = replica_rngs(123, 3)
    r2 = replica_rngs(123, 3)
    a, b = r1[0].random(4), r2[0].random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(r1[1].random(4), r2[2].random(4))
    assert replica_seed(123, 0) == replica_seed(123, 0)
    assert replica_seed(123, 0) != replica_seed(123, 1)
    assert 0 <= replica_seed(123, 5) < 2 ** 31


def test_map_replicas_order_independent_of_threads():
    fn = lambda i: i * i
    assert _map_replicas(fn, 8, threads=1) == _map_replicas(fn, 8, threads=4)


# ---------------------------------------------------------------- residuals

def test_smolu_exact_exponential_residuals():
    for mech in (STABLE15, FELLER):
        out = smolu_residual(mech, 1.0, ("exp", 1.0), "exact-exponential")
        assert out["residual"] <= 1e-7


def test_smolu_rejects_non_extinct():
    mech = BranchingMechanism(0.0, JumpMeasureFiniteAtoms([(1.0, 1.0)]))
    with pytest.raises(ValueError):
        smolu_residual(mech, 1.0, ("exp", 1.0), "exact-exponential")


def test_smolu_feller_quadrature_residual_and_series():
    out = smolu_residual(FELLER, 1.0, ("hat", 0.5, 2.0), "feller-quadrature")
    assert out["residual"] <= 1e-6
    # single surviving series term reproduces the pairwise rhs
    assert out["series_gap"] <= out["series_tail_bound"] + 1e-5
    assert out["series_tail_bound"] == 0.0  # Psi^{(k)} = 0 for k >= 3


def test_smolu_mc_poisson_within_3se():
    out = smolu_residual(STABLE15, 1.0, ("exp", 1.0), "mc-poisson",
                         replicas=60_000, seed=3)
    assert out["residual"] <= 3 * out["se"] + 5e-3
    assert out["gate_3se"]


# ---------------------------------------------------------------- series

def test_series_identities_exact_remainders():
    for g in (1.2, 1.5, 1.8):
        ids = series_identities(g, K=200)
        assert ids["series2_gap"] <= 1e-12
        assert ids["series3_gap"] <= 1e-12
        # naive truncation alone is NOT enough at K=200
        assert ids["series2_tail"] > 1e-7
        assert abs(ids["series3_partial"] - ids["series3_target"]) > 1e-6


# ---------------------------------------------------------------- runners

def test_rate_asymptotics_check_passes():
    rep = rate_asymptotics_check(1.5)
    assert rep.passed, [s for s in rep.statistics if not s["passed"]]


def test_cdi_equivalence_run_passes():
    rep = cdi_equivalence_run()
    assert rep.passed, [s for s in rep.statistics if not s["passed"]]


def test_largepop_small_scale_gates():
    pi = JumpMeasureFiniteAtoms([(1.0, 1.0)])
    rep = largepop_marginal_run(pi, [5.0, 20.0], 1.0, 1.0, [1.0],
                                replicas=20_000, seed=5)
    assert rep.passed, [s for s in rep.statistics if not s["passed"]]


def test_largepop_thread_count_does_not_change_results():
    pi = JumpMeasureFiniteAtoms([(1.0, 1.0)])
    r1 = largepop_marginal_run(pi, [5.0], 1.0, 1.0, [1.0],
                               replicas=4000, seed=5, threads=1)
    r2 = largepop_marginal_run(pi, [5.0], 1.0, 1.0, [1.0],
                               replicas=4000, seed=5, threads=3)
    assert r1.to_json() == r2.to_json()


def test_smalltime_kingman_control_passes():
    rep = smalltime_kingman_control(1e-3, 100_000,
                                    np.array([0.1, 0.3, 1.0, 3.0]),
                                    replicas=8, seed=42)
    assert rep.passed, rep.to_text()
