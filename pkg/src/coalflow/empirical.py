"""Weighted empirical measures on ]0,infty[ and Kolmogorov-type distances."""

from __future__ import annotations

import math
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = ["EmpiricalMeasure", "kolmogorov_distance", "poisson_sum_sample"]


class EmpiricalMeasure:
    """Finite collection of weighted atoms on ]0,infty[ with CDF queries."""

    def __init__(self, positions, weights=None):
        pos = np.asarray(positions, dtype=float)
        if weights is None:
            weights = np.ones(len(pos))
        w = np.asarray(weights, dtype=float)
        if np.any(pos <= 0) or np.any(w < 0):
            raise ValueError("positions must be > 0 and weights >= 0")
        order = np.argsort(pos, kind="stable")
        self.positions = pos[order]
        self.weights = w[order]
        self._cum = np.cumsum(self.weights)

    def total_mass(self) -> float:
        return float(self._cum[-1]) if len(self.weights) else 0.0

    def cdf(self, x) -> np.ndarray:
        """Measure of ]0,x[ (open on the right: atoms at x excluded)."""
        idx = np.searchsorted(self.positions, np.asarray(x, dtype=float),
                              side="left")
        cum = np.concatenate([[0.0], self._cum]) if len(self.weights) else \
            np.zeros(1)
        return cum[idx]

    def cdf_closed(self, x) -> np.ndarray:
        """Measure of ]0,x] (atoms at x included)."""
        idx = np.searchsorted(self.positions, np.asarray(x, dtype=float),
                              side="right")
        cum = np.concatenate([[0.0], self._cum]) if len(self.weights) else \
            np.zeros(1)
        return cum[idx]

    def scaled(self, pos_factor: float, weight_factor: float) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.positions * pos_factor,
                                self.weights * weight_factor)


def kolmogorov_distance(emp: EmpiricalMeasure,
                        ref_cdf: Callable[[np.ndarray], np.ndarray],
                        window: Optional[Tuple[float, float]] = None,
                        anchored: bool = False) -> float:
    """sup_x |emp(]0,x[) - ref_cdf(x)| over atom positions (both limits).

    With a window (lo,hi) the sup runs over [lo,hi] only; ``anchored``
    compares window increments emp(]lo,x]) - (ref(x)-ref(lo)) instead,
    which is the vague-topology statistic for windows away from 0.
    Empty measure: returns sup of ref over the evaluation points
    (documented convention).
    """
    if window is None:
        pts = emp.positions
        if len(pts) == 0:
            return float(np.asarray(ref_cdf(np.array([math.inf]))).ravel()[0])
        ref = np.asarray(ref_cdf(pts), dtype=float)
        below = np.abs(emp.cdf(pts) - ref)
        above = np.abs(emp.cdf_closed(pts) - ref)
        return float(max(below.max(), above.max()))
    lo, hi = window
    pts = emp.positions[(emp.positions >= lo) & (emp.positions <= hi)]
    pts = np.unique(np.concatenate([pts, [lo, hi]]))
    ref = np.asarray(ref_cdf(pts), dtype=float)
    if anchored:
        base_emp = emp.cdf_closed(np.array([lo]))[0]
        base_ref = float(ref_cdf(np.array([lo]))[0])
        below = np.abs((emp.cdf(pts) - base_emp) - (ref - base_ref))
        above = np.abs((emp.cdf_closed(pts) - base_emp) - (ref - base_ref))
    else:
        below = np.abs(emp.cdf(pts) - ref)
        above = np.abs(emp.cdf_closed(pts) - ref)
    return float(max(below.max(), above.max()))


def poisson_sum_sample(mu, rng) -> float:
    """Sum of the atoms of a Poisson random measure with intensity mu.

    mu is an EmpiricalMeasure (atoms) or an object with attributes
    (xs, cdf) tabulating a CDF, e.g. a LevyMeasureTable.  N ~ Poisson(mass),
    atom positions i.i.d. mu/mass.
    """
    if isinstance(mu, EmpiricalMeasure):
        mass = mu.total_mass()
        if mass == 0.0:
            return 0.0
        n = rng.poisson(mass)
        if n == 0:
            return 0.0
        idx = rng.choice(len(mu.positions), size=n, p=mu.weights / mass)
        return float(mu.positions[idx].sum())
    # tabulated CDF: inverse-transform sampling on the grid
    xs, cdf = mu.xs, mu.cdf
    mass = float(cdf[-1])
    if mass == 0.0:
        return 0.0
    n = rng.poisson(mass)
    if n == 0:
        return 0.0
    u = rng.random(n) * mass
    return float(np.interp(u, cdf, xs).sum())
