"""Deterministic analytic layer of the CSBP.

Cumulant semigroup u_t(q) (closed forms for the Feller and stable
mechanisms, high-order ODE integration otherwise), total mass and CDF of
the Levy measure lambda_t of x -> Z(t,x), the small-time scaling g(eps),
and numerical Laplace inversion on a deformed contour for the stable CDF.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .measures import (
    EXTINCT,
    INCONCLUSIVE,
    NOT_EXTINCT,
    BranchingMechanism,
    JumpMeasureStable,
    LambdaMeasure,
    extinction_check,
)

__all__ = [
    "CumulantSolver",
    "LevyMeasureTable",
    "ut",
    "levy_total_mass",
    "levy_cdf",
    "lambda1_laplace_stable",
    "g_scaling",
    "feller_levy_density",
    "stable_levy_cdf",
    "invert_cdf_transform",
]

INF_SENTINEL = math.inf


def _mech_tag(mech: BranchingMechanism) -> str:
    if mech.pi is None:
        return "Feller"
    if mech.beta == 0.0 and isinstance(mech.pi, JumpMeasureStable):
        return "Stable"
    return "Generic"


class CumulantSolver:
    """u_t(q) solving du/dt = -Psi(u), u_0 = q."""

    def __init__(self, mech: BranchingMechanism, rtol: float = 1e-12,
                 atol: float = 1e-14):
        self.mech = mech
        self.tag = _mech_tag(mech)
        self.rtol = rtol
        self.atol = atol

    def ut(self, t: float, q: float) -> float:
        if t < 0 or q < 0:
            raise ValueError("need t >= 0 and q >= 0")
        if q == 0.0 or t == 0.0:
            return float(q)
        if self.tag == "Feller":
            b = self.mech.beta
            return q / (1.0 + b * q * t)
        if self.tag == "Stable":
            g = self.mech.pi.gamma
            return (q ** (1.0 - g) + special.gamma(2.0 - g) * t) ** (1.0 / (1.0 - g))
        return self._ut_ode(t, q)

    def _ut_ode(self, t: float, q: float) -> float:
        psi = self.mech.psi
        sol = solve_ivp(lambda _, u: [-psi(max(u[0], 0.0))], (0.0, t), [q],
                        method="DOP853", rtol=self.rtol, atol=self.atol,
                        dense_output=False)
        if not sol.success:
            raise RuntimeError(f"cumulant ODE failed: {sol.message}")
        u = float(sol.y[0, -1])
        if u > q or u < -self.atol:
            raise RuntimeError("cumulant ODE violated monotonicity")
        return max(u, 0.0)

    def ut_ode_grid(self, ts, q: float) -> np.ndarray:
        """Numeric u_t(q) on a sorted grid of times, one ODE solve total."""
        ts = np.asarray(ts, dtype=float)
        if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("ts must be a strictly increasing 1-d grid")
        if ts[0] < 0 or q < 0:
            raise ValueError("need t >= 0 and q >= 0")
        psi = self.mech.psi
        sol = solve_ivp(lambda _, u: [-psi(max(u[0], 0.0))], (0.0, ts[-1]),
                        [q], method="DOP853", rtol=self.rtol, atol=self.atol,
                        t_eval=ts)
        if not sol.success:
            raise RuntimeError(f"cumulant ODE failed: {sol.message}")
        return np.maximum(sol.y[0], 0.0)


def ut(mech: BranchingMechanism, t: float, q: float) -> float:
    """Cumulant u_t(q); E[e^{-q Z(t,x)}] = e^{-x u_t(q)}."""
    return CumulantSolver(mech).ut(t, q)


def levy_total_mass(mech: BranchingMechanism, t: float) -> float:
    """lambda_t(]0,infty[) = lim_{q->infty} u_t(q); +inf when not extinct."""
    if t <= 0:
        raise ValueError("t must be > 0")
    tag = _mech_tag(mech)
    if tag == "Feller":
        return 1.0 / (mech.beta * t)
    if tag == "Stable":
        g = mech.pi.gamma
        return (special.gamma(2.0 - g) * t) ** (1.0 / (1.0 - g))
    verdict = extinction_check(mech)
    if verdict == NOT_EXTINCT:
        return INF_SENTINEL
    if verdict == INCONCLUSIVE:
        raise RuntimeError("inconclusive extinction verdict; total mass "
                           "requires an explicit caller override")
    solver = CumulantSolver(mech)
    vals = np.array([solver.ut(t, 10.0 ** k) for k in range(2, 10)])
    # Aitken delta-squared on the monotone tail of the sequence
    est = vals[-1]
    d1, d2 = vals[-1] - vals[-2], vals[-1] - 2 * vals[-2] + vals[-3]
    if d2 != 0.0:
        est = vals[-1] - d1 * d1 / d2
    return float(est)


def feller_levy_density(t: float, x: float) -> float:
    """Density of lambda_t for the Feller mechanism: 4 t^{-2} e^{-2x/t}."""
    if t <= 0 or x <= 0:
        raise ValueError("need t > 0, x > 0")
    return 4.0 / (t * t) * math.exp(-2.0 * x / t)


def feller_levy_cdf(t: float, x) -> float:
    """lambda_t(]0,x[) = (2/t)(1 - e^{-2x/t}) for the Feller mechanism."""
    return 2.0 / t * -np.expm1(-2.0 * np.asarray(x, dtype=float) / t)


def lambda1_laplace_stable(gamma: float, q: float) -> float:
    """int (1 - e^{-qr}) lambda_1(dr) = (Gamma(2-gamma) + q^{1-gamma})^{1/(1-gamma)}."""
    if not (1.0 < gamma < 2.0):
        raise ValueError("gamma must lie in ]1,2[")
    if q < 0:
        raise ValueError("q must be >= 0")
    if q == 0.0:
        return 0.0
    return (special.gamma(2.0 - gamma) + q ** (1.0 - gamma)) ** (1.0 / (1.0 - gamma))


def invert_cdf_transform(transform, x: float, *, dps: int = 30,
                         degree: int = 40) -> float:
    """Invert q -> transform(q) (a Laplace transform in q) at the point x.

    Talbot deformed-contour rule evaluated in extended precision; the
    transform must accept complex q away from the negative real axis.
    """
    if x <= 0:
        raise ValueError("x must be > 0")
    with mpmath.workdps(dps):
        val = mpmath.invertlaplace(transform, x, method="talbot", degree=degree)
    return float(val)


def stable_levy_cdf(gamma: float, t: float, x) -> np.ndarray:
    """lambda_t(]0,x[) for the stable mechanism by contour Laplace inversion.

    The transform of the CDF is (m - u_t(q))/q with m the total mass;
    the closed-form u_t continues to complex q via the principal branch.
    """
    if not (1.0 < gamma < 2.0):
        raise ValueError("gamma must lie in ]1,2[")
    G = special.gamma(2.0 - gamma)
    m = (G * t) ** (1.0 / (1.0 - gamma))

    def transform(q):
        u = (q ** (1.0 - gamma) + G * t) ** (1.0 / (1.0 - gamma))
        return (m - u) / q

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([invert_cdf_transform(transform, xi) for xi in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def levy_cdf(mech: BranchingMechanism, t: float, x):
    """lambda_t(]0,x[) for mechanisms with finite total mass.

    Feller: exact closed form.  Stable: contour Laplace inversion.
    Generic extinct mechanisms have no deterministic route here; use the
    Monte Carlo cluster estimate in csbp_sim (flagged as an estimate).
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    tag = _mech_tag(mech)
    if tag == "Feller":
        return feller_levy_cdf(t, x)
    if tag == "Stable":
        return stable_levy_cdf(mech.pi.gamma, t, x)
    if extinction_check(mech) != EXTINCT:
        raise ValueError("levy_cdf requires an almost-surely-extinct mechanism")
    raise NotImplementedError(
        "no deterministic CDF for generic mechanisms; use the Monte Carlo "
        "cluster estimate (csbp_sim.levy_cdf_mc_estimate)")


def g_scaling(lam: LambdaMeasure, eps: float) -> float:
    """Small-time observation scale g(eps) = 1 / (eps * nu([eps,1]))."""
    tail = lam.nu_tail(eps)
    if tail <= 0.0:
        raise ValueError(f"nu([{eps:g},1]) = 0: scaling undefined")
    return 1.0 / (eps * tail)


@dataclass
class LevyMeasureTable:
    """Tabulated CDF of lambda_t on a grid, serializable to CSV."""

    mech_label: str
    t: float
    total_mass: float
    xs: np.ndarray
    cdf: np.ndarray
    drift: float = 0.0  # d_t = 0 under Assumption (E)

    def __post_init__(self):
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(self.cdf) < -1e-12):
            raise ValueError("CDF must be nondecreasing")
        if self.cdf[-1] > self.total_mass * (1.0 + 1e-9):
            raise ValueError("CDF exceeds total mass")

    @classmethod
    def build(cls, mech: BranchingMechanism, t: float,
              xs: Optional[np.ndarray] = None) -> "LevyMeasureTable":
        if xs is None:
            xs = np.logspace(-3, math.log10(20.0), 120)
        cdf = np.asarray(levy_cdf(mech, t, xs), dtype=float)
        cdf = np.maximum.accumulate(cdf)  # clip inversion jitter
        return cls(mech.label(), float(t), float(levy_total_mass(mech, t)),
                   np.asarray(xs, dtype=float), cdf)

    def cdf_at(self, x) -> np.ndarray:
        return np.interp(x, self.xs, self.cdf, left=0.0, right=self.cdf[-1])

    def laplace(self, q: float) -> float:
        """int (1-e^{-qx}) lambda_t(dx) from the table (trapezoid in x)."""
        w = np.diff(self.cdf)
        mid = 0.5 * (self.xs[1:] + self.xs[:-1])
        return float((w * -np.expm1(-q * mid)).sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# mech={self.mech_label} t={self.t:.17g} "
                  f"total_mass={self.total_mass:.17g} drift={self.drift:.17g}\n")
        buf.write("x,cdf_value\n")
        for x, c in zip(self.xs, self.cdf):
            buf.write(f"{x:.17g},{c:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LevyMeasureTable":
        lines = text.strip().splitlines()
        header = dict(kv.split("=", 1) for kv in lines[0].lstrip("# ").split())
        rows = [ln.split(",") for ln in lines[2:]]
        xs = np.array([float(r[0]) for r in rows])
        cdf = np.array([float(r[1]) for r in rows])
        return cls(header["mech"], float(header["t"]),
                   float(header["total_mass"]), xs, cdf,
                   drift=float(header["drift"]))
