"""Exact simulation of the Lambda-coalescent restricted to block sizes.

The exchangeable partition is reduced to its sufficient statistic, the
multiset of block sizes: with b blocks, k of them merge at rate
alpha_{b,k} = C(b,k) int x^k (1-x)^{b-k} nu(dx).  Total rates alpha_b are
precomputed in bulk per measure (vectorized quadrature over the measure's
nodes) and cached; jump sizes are drawn by sequential inversion on the
closed-form ratio recursion for the Beta family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import special

from .empirical import EmpiricalMeasure
from .measures import (
    BetaLambda,
    FiniteAtomsLambda,
    LambdaMeasure,
    _log1p_neg_plus,
    _one_minus_exp1p,
    coalescent_weight,
)

__all__ = [
    "BlockState",
    "total_rate",
    "jump_size_sample",
    "simulate_to",
    "block_count_at",
    "frequencies",
    "fv_marginal_via_dual",
]

_CHUNK = 2000


@dataclass
class BlockState:
    sizes: List[int]
    n0: int
    clock: float = 0.0

    @classmethod
    def singletons(cls, n: int) -> "BlockState":
        return cls([1] * n, n, 0.0)

    @property
    def block_count(self) -> int:
        return len(self.sizes)


class _RateTable:
    """Cached alpha_b (and log alpha_{b,2} for Beta) up to a growing bmax."""

    def __init__(self, lam: LambdaMeasure):
        self.lam = lam
        self.bmax = 1
        self.alpha = np.zeros(2)       # alpha[b], index by b
        self.log_ab2 = np.zeros(2)

    def ensure(self, bmax: int):
        if bmax <= self.bmax:
            return
        lam = self.lam
        bs = np.arange(self.bmax + 1, bmax + 1)
        x, w = lam.nu_nodes()
        lx = np.asarray(_log1p_neg_plus(x))
        alpha = np.empty(len(bs))
        for lo in range(0, len(bs), _CHUNK):
            bc = bs[lo:lo + _CHUNK, None]
            s = (bc - 1) * lx[None, :]
            y = (bc - 1) * x[None, :]
            wb = -np.expm1(s) + np.exp(s) * _one_minus_exp1p(y)
            alpha[lo:lo + _CHUNK] = wb @ w
        if isinstance(lam, BetaLambda):
            la2 = (np.log(bs * (bs - 1) / 2.0) + math.log(lam.mass)
                   + special.betaln(lam.a, lam.c + bs - 2.0)
                   - special.betaln(lam.a, lam.c))
        else:
            la2 = np.zeros(len(bs))
        self.alpha = np.concatenate([self.alpha, alpha])
        self.log_ab2 = np.concatenate([self.log_ab2, la2])
        self.bmax = bmax

    def rate(self, b: int) -> float:
        self.ensure(b)
        return float(self.alpha[b])


def _rate_table(lam: LambdaMeasure) -> _RateTable:
    tab = getattr(lam, "_coal_rates", None)
    if tab is None:
        tab = _RateTable(lam)
        lam._coal_rates = tab
    return tab


def total_rate(lam: LambdaMeasure, b: int) -> float:
    """alpha_b = int (1 - (1-x)^b - bx(1-x)^{b-1}) nu(dx); C(b,2) for Kingman."""
    if b < 2:
        raise ValueError("b must be >= 2")
    if lam.is_kingman:
        return b * (b - 1) / 2.0
    return _rate_table(lam).rate(b)


def _sample_k_ratio(b: int, a: float, c: float, target: float,
                    term0: float) -> int:
    """Sequential inversion of k ~ alpha_{b,k} via the Beta ratio recursion."""
    term, cum, k = term0, term0, 2
    while cum < target and k < b:
        term *= (b - k) / (k + 1.0) * (a + k - 2.0) / (c + b - k - 1.0)
        k += 1
        cum += term
    return k


def _binom_cond_ge2(b: int, x: float, target_u: float) -> int:
    """k ~ Binomial(b,x) conditioned on k >= 2, by ratio inversion."""
    wb = float(coalescent_weight(b, np.array([x]))[0])
    target = target_u * wb
    lx = math.log1p(-x)
    term = math.exp(math.log(b * (b - 1) / 2.0) + 2 * math.log(x) + (b - 2) * lx)
    cum, k = term, 2
    ratio_x = x / (1.0 - x)
    while cum < target and k < b:
        term *= (b - k) / (k + 1.0) * ratio_x
        k += 1
        cum += term
    return k


def jump_size_sample(lam: LambdaMeasure, b: int, rng) -> int:
    """Merge size k in [2,b], distributed as alpha_{b,k} / alpha_b."""
    if b < 2:
        raise ValueError("b must be >= 2")
    if b == 2 or lam.is_kingman:
        return 2
    if isinstance(lam, BetaLambda):
        tab = _rate_table(lam)
        tab.ensure(b)
        return _sample_k_ratio(b, lam.a, lam.c, rng.random() * tab.alpha[b],
                               math.exp(tab.log_ab2[b]))
    if isinstance(lam, FiniteAtomsLambda):
        # pick the atom responsible for the event, then the binomial count
        wb = np.asarray(coalescent_weight(b, lam.x))
        wgt = lam.nu_w * wb
        i = rng.choice(len(wgt), p=wgt / wgt.sum())
        x = float(lam.x[i])
        if x >= 1.0:
            return b
        return _binom_cond_ge2(b, x, rng.random())
    return _sample_k_generic(lam, b, rng)


def _sample_k_generic(lam: LambdaMeasure, b: int, rng) -> int:
    cache = getattr(lam, "_k_tables", None)
    if cache is None:
        cache = {}
        lam._k_tables = cache
    if b not in cache:
        x, w = lam.nu_nodes()
        ks = np.arange(2, b + 1)
        lc = (special.gammaln(b + 1) - special.gammaln(ks + 1)
              - special.gammaln(b - ks + 1))
        lx, l1x = np.log(x), np.log1p(-x)
        logm = lc[:, None] + ks[:, None] * lx[None, :] + (b - ks)[:, None] * l1x[None, :]
        ak = (np.exp(logm) * w[None, :]).sum(axis=1)
        cache[b] = np.cumsum(ak) / ak.sum()
        if len(cache) > 512:
            cache.pop(next(iter(cache)))
    return 2 + int(np.searchsorted(cache[b], rng.random(), side="right"))


def simulate_to(lam: LambdaMeasure, state: BlockState, t_target: float,
                rng) -> BlockState:
    """Gillespie simulation of the block-size chain up to t_target.

    Merged blocks are chosen uniformly by partial Fisher-Yates with
    swap-remove, O(k) per event.
    """
    if t_target < state.clock:
        raise ValueError("t_target must be >= current clock")
    sizes = state.sizes
    t = state.clock
    if not lam.is_kingman:
        _rate_table(lam).ensure(max(len(sizes), 2))
    while len(sizes) >= 2:
        b = len(sizes)
        rate = total_rate(lam, b)
        t_next = t + rng.exponential() / rate
        if t_next > t_target:
            break
        t = t_next
        k = jump_size_sample(lam, b, rng)
        merged = 0
        m = b
        for _ in range(k):
            i = int(rng.random() * m)
            m -= 1
            merged += sizes[i]
            sizes[i] = sizes[m]
        del sizes[m:]
        sizes.append(merged)
    state.clock = t_target
    return state


def block_count_at(lam: LambdaMeasure, n: int, t: float, rng) -> int:
    """N^n_t: number of blocks at time t started from n singletons."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 1
    return simulate_to(lam, BlockState.singletons(n), t, rng).block_count


def frequencies(state: BlockState) -> EmpiricalMeasure:
    """Counting measure on block frequencies size_i / n0 (weight 1 each)."""
    pos = np.asarray(state.sizes, dtype=float) / state.n0
    return EmpiricalMeasure(pos, np.ones(len(pos)))


def fv_marginal_via_dual(state: BlockState, y: float, rng) -> float:
    """One draw of F_t(y) from the dual bridge representation.

    Each block gets an independent uniform label V_i; the bridge value is
    the total frequency of blocks with V_i <= y.
    """
    if not (0.0 <= y <= 1.0):
        raise ValueError("y must lie in [0,1]")
    if y == 1.0:
        return 1.0
    if y == 0.0:
        return 0.0
    labels = rng.random(len(state.sizes))
    sizes = np.asarray(state.sizes, dtype=float)
    return float(sizes[labels <= y].sum() / state.n0)
