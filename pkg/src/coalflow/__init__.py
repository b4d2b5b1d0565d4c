"""Simulation and numerical-verification laboratory for Lambda-coalescents,
generalized Fleming-Viot flows, and continuous-state branching processes."""

from .measures import (
    BetaLambda,
    BranchingMechanism,
    DensityLambda,
    FiniteAtomsLambda,
    JumpMeasureDensity,
    JumpMeasureFiniteAtoms,
    JumpMeasureStable,
    Kingman,
    binom_moment,
    cdi_check,
    extinction_check,
    nu_tail,
    phi_eval,
    psi_derivative,
    psi_eval,
)
from .csbp_analytic import (
    CumulantSolver,
    LevyMeasureTable,
    feller_levy_density,
    g_scaling,
    lambda1_laplace_stable,
    levy_cdf,
    levy_total_mass,
    ut,
)
from .csbp_sim import (
    FlowState,
    feller_exact_sample,
    simulate_csbp_flow,
    truncation_bias_bound,
)
from .coalescent import (
    BlockState,
    block_count_at,
    frequencies,
    fv_marginal_via_dual,
    jump_size_sample,
    simulate_to,
    total_rate,
)
from .fleming_viot import FiniteNu, FvFlowState, rescale_largepop, simulate_fv_flow
from .empirical import EmpiricalMeasure, kolmogorov_distance, poisson_sum_sample

__version__ = "0.1.0"
