"""Exact and Monte Carlo laws of the application statistics, plus distances.

These are the verification side of every end-to-end bound: the law of the
statistic W is computed exactly (transfer-matrix dynamic programming for
runs, exhaustive enumeration for small reliability grids, closed-form
mixtures, iterated convolution for sums) or by reproducible Monte Carlo,
and compared against the compound Poisson approximant via Kolmogorov and
total variation distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import DistributionTable
from .models import (
    GammaMixing,
    IndependentSumModel,
    MixedPoissonModel,
    ReliabilityModel,
    RunsModel,
    TwoPointMixing,
)

__all__ = [
    "DistanceReport",
    "BudgetExceededError",
    "runs_exact_pmf",
    "reliability_exact_pmf",
    "reliability_mc_pmf",
    "mixed_exact_pmf",
    "sums_exact_pmf",
    "distance",
]

RUNS_N_BUDGET = 2000
RELIABILITY_EXACT_N_BUDGET = 5
SUMS_CELL_BUDGET = 10_000_000
MC_MIN_SAMPLES = 10_000
MC_CHUNK = 1 << 17
MIXTURE_TAIL = 1e-12


class BudgetExceededError(RuntimeError):
    """Raised when an exact computation would exceed its resource budget."""


@dataclass(frozen=True)
class DistanceReport:
    """Kolmogorov and total variation distances between two tables.

    ``d_k`` is the exact sup of |cdf difference| over the covered support;
    ``certified_slack`` (the combined tail masses) bounds how much of either
    distance can hide beyond it, so d_k + certified_slack is a certified
    upper bound.  ``mc_stderr`` is the standard error of the cdf difference
    at argmax_y when Monte Carlo tables are involved, 0 for exact tables.
    """

    d_k: float
    d_tv: float
    argmax_y: int
    mc_stderr: float
    certified_slack: float

    def to_json(self) -> dict:
        return {
            "d_k": self.d_k,
            "d_tv": self.d_tv,
            "argmax_y": self.argmax_y,
            "mc_stderr": self.mc_stderr,
            "certified_slack": self.certified_slack,
        }


def runs_exact_pmf(m: RunsModel) -> DistributionTable:
    """Exact law of the circular 2-runs count by transfer-matrix DP.

    State: (first bit, current bit), each holding a probability vector
    indexed by the run count accumulated so far.  Positions 2..n contribute
    the pair (i-1, i); the cycle closes with the pair (n, 1).  O(n^2) time.
    """
    if m.n > RUNS_N_BUDGET:
        raise BudgetExceededError(f"runs n = {m.n} exceeds budget {RUNS_N_BUDGET}")
    n, p = m.n, m.p
    prob = (1.0 - p, p)
    # dp[b1][cur][c] = P(first bit b1, bit_i = cur, count of pairs so far = c)
    dp = [[np.zeros(n + 1) for _ in range(2)] for _ in range(2)]
    for b in range(2):
        dp[b][b][0] = prob[b]
    for _ in range(2, n + 1):
        new = [[np.zeros(n + 1) for _ in range(2)] for _ in range(2)]
        for b1 in range(2):
            for prev in range(2):
                vec = dp[b1][prev]
                for cur in range(2):
                    w = prob[cur] * vec
                    if prev == 1 and cur == 1:
                        new[b1][cur][1:] += w[:-1]
                    else:
                        new[b1][cur] += w
        dp = new
    pmf = np.zeros(n + 1)
    for b1 in range(2):
        for last in range(2):
            vec = dp[b1][last]
            if b1 == 1 and last == 1:
                pmf[1:] += vec[:-1]
            else:
                pmf += vec
    return DistributionTable(pmf=pmf, tail_mass=0.0)


def _count_subgrids(grids: np.ndarray, k: int) -> np.ndarray:
    """Count all-failed k x k subgrids in each n x n boolean grid.

    ``grids`` has shape (m, n, n); returns shape (m,).  Uses 2-D prefix sums
    so every window sum is four lookups.
    """
    S = np.zeros((grids.shape[0], grids.shape[1] + 1, grids.shape[2] + 1), dtype=np.int32)
    S[:, 1:, 1:] = np.cumsum(np.cumsum(grids, axis=1), axis=2)
    win = (
        S[:, k:, k:]
        - S[:, :-k, k:]
        - S[:, k:, :-k]
        + S[:, :-k, :-k]
    )
    return np.count_nonzero(win == k * k, axis=(1, 2))


def reliability_exact_pmf(m: ReliabilityModel) -> DistributionTable:
    """Exact law of the subgrid count by exhaustive enumeration of the 2^(n^2)
    failure patterns, processed in chunks."""
    if m.n > RELIABILITY_EXACT_N_BUDGET:
        raise BudgetExceededError(
            f"reliability n = {m.n} exceeds exhaustive budget "
            f"{RELIABILITY_EXACT_N_BUDGET}; use reliability_mc_pmf"
        )
    n, k, q = m.n, m.k, m.q
    cells = n * n
    total = 1 << cells
    max_count = (n - k + 1) ** 2
    # weight of a pattern depends only on its number of failed cells
    ones_weight = np.array(
        [q**o * (1.0 - q) ** (cells - o) for o in range(cells + 1)]
    )
    bit_pos = np.arange(cells, dtype=np.int64)
    pmf = np.zeros(max_count + 1)
    for start in range(0, total, MC_CHUNK):
        idx = np.arange(start, min(start + MC_CHUNK, total), dtype=np.int64)
        bits = ((idx[:, None] >> bit_pos) & 1).astype(np.int8)
        grids = bits.reshape(-1, n, n)
        counts = _count_subgrids(grids, k)
        weights = ones_weight[bits.sum(axis=1)]
        pmf += np.bincount(counts, weights=weights, minlength=max_count + 1)
    return DistributionTable(pmf=pmf, tail_mass=0.0)


def reliability_mc_pmf(
    m: ReliabilityModel, samples: int, seed: int
) -> DistributionTable:
    """Monte Carlo law of the subgrid count, reproducible for a given seed.

    The seed stream is split into one substream per fixed-size chunk, so the
    result does not depend on how chunks are scheduled.  Per-bin binomial
    standard errors are attached to the table.
    """
    if samples < MC_MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MC_MIN_SAMPLES}")
    n, k, q = m.n, m.k, m.q
    max_count = (n - k + 1) ** 2
    n_chunks = (samples + MC_CHUNK - 1) // MC_CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    freq = np.zeros(max_count + 1)
    done = 0
    for child in children:
        rng = np.random.default_rng(child)
        take = min(MC_CHUNK, samples - done)
        grids = rng.random((take, n, n)) < q
        counts = _count_subgrids(grids.astype(np.int8), k)
        freq += np.bincount(counts, minlength=max_count + 1)
        done += take
    pmf = freq / samples
    stderr = np.sqrt(pmf * (1.0 - pmf) / samples)
    return DistributionTable(
        pmf=pmf, tail_mass=0.0, stderr=stderr, mc_samples=samples
    )


def _poisson_mixture_table(
    weights: list[float], intensities: list[float]
) -> DistributionTable:
    """Weighted mixture of Poisson pmfs with an exact sf tail."""
    hi = max(
        int(stats.poisson.ppf(1.0 - MIXTURE_TAIL / 4.0, lam)) for lam in intensities
    )
    x_max = hi + 10
    while True:
        tail = sum(
            w * stats.poisson.sf(x_max, lam) for w, lam in zip(weights, intensities)
        )
        if tail <= MIXTURE_TAIL:
            break
        x_max *= 2
    x = np.arange(x_max + 1)
    pmf = np.zeros(x_max + 1)
    for w, lam in zip(weights, intensities):
        pmf += w * stats.poisson.pmf(x, lam)
    return DistributionTable(pmf=pmf, tail_mass=float(tail))


def mixed_exact_pmf(m: MixedPoissonModel) -> DistributionTable:
    """Exact law of W ~ Poisson(xi): a two-atom Poisson mixture for two-point
    mixing, the conjugate negative binomial for gamma mixing."""
    mix = m.mixing
    if isinstance(mix, TwoPointMixing):
        return _poisson_mixture_table([mix.w, 1.0 - mix.w], [mix.a, mix.b])
    assert isinstance(mix, GammaMixing)
    r, s = mix.shape, mix.scale
    succ = 1.0 / (1.0 + s)
    x_max = int(stats.nbinom.ppf(1.0 - MIXTURE_TAIL / 4.0, r, succ)) + 10
    while stats.nbinom.sf(x_max, r, succ) > MIXTURE_TAIL:
        x_max *= 2
    x = np.arange(x_max + 1)
    pmf = stats.nbinom.pmf(x, r, succ)
    tail = float(stats.nbinom.sf(x_max, r, succ))
    return DistributionTable(pmf=pmf, tail_mass=tail)


def sums_exact_pmf(m: IndependentSumModel) -> DistributionTable:
    """Exact law of W = sum Z_i by iterated convolution of the component pmfs."""
    cost = 0
    length = 1
    for comp in m.components:
        cost += length * len(comp)
        length += len(comp) - 1
        if cost > SUMS_CELL_BUDGET:
            raise BudgetExceededError(
                f"convolution cost exceeds {SUMS_CELL_BUDGET} cells"
            )
    pmf = np.array([1.0])
    for comp in m.components:
        pmf = np.convolve(pmf, np.asarray(comp, dtype=float))
    return DistributionTable(pmf=pmf, tail_mass=0.0)


def distance(a: DistributionTable, b: DistributionTable) -> DistanceReport:
    """Kolmogorov and total variation distances between two tables.

    d_k is the exact sup of the |cdf difference| over the union support
    (identical tables give exactly 0); the combined tail masses are reported
    as certified_slack, to be added by callers who need a one-sided
    certificate.  d_tv is half the l1 pmf distance plus the slack, capped
    at 1.
    """
    hi = max(a.x_max, b.x_max)
    pa = np.zeros(hi + 1)
    pb = np.zeros(hi + 1)
    pa[: a.x_max + 1] = a.pmf
    pb[: b.x_max + 1] = b.pmf
    diff = np.abs(np.cumsum(pa) - np.cumsum(pb))
    argmax_y = int(np.argmax(diff))
    d_k = float(diff[argmax_y])
    slack = a.tail_mass + b.tail_mass
    d_tv = min(1.0, 0.5 * float(np.abs(pa - pb).sum()) + slack)
    stderr2 = 0.0
    for t in (a, b):
        if t.mc_samples is not None:
            F = float(np.cumsum(t.pmf)[min(argmax_y, t.x_max)])
            stderr2 += F * (1.0 - F) / t.mc_samples
    return DistanceReport(
        d_k=d_k,
        d_tv=d_tv,
        argmax_y=argmax_y,
        mc_stderr=math.sqrt(stderr2),
        certified_slack=slack,
    )
