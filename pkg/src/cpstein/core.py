"""Compound Poisson laws with finite cluster-size support.

A compound Poisson random variable U ~ CP(lambda, mu) is the sum of N
i.i.d. cluster sizes drawn from mu, with N ~ Poisson(lambda).  Throughout
this package the primitive parameterization is the rate sequence
``lambda_j = lambda * mu_j`` for cluster sizes j = 1..J: every formula of
interest is stated directly in the rates or in their factorial-moment sums

    theta_k = sum_j j*(j-1)*...*(j-k) * lambda_j      (k+1 factors),

so the (lambda, mu) view is provided only as derived accessors.

The module computes theta vectors, the exact pmf of U via the standard
one-step recursion with a Chernoff-certified truncation, and reproducible
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "CompoundPoissonParams",
    "ThetaVector",
    "DistributionTable",
    "TruncationCapError",
    "theta",
    "cp_pmf",
    "cp_sample",
    "monotone_condition",
]

DEFAULT_MASS_TARGET = 1.0 - 1e-12
DEFAULT_X_CAP = 1_000_000


class TruncationCapError(RuntimeError):
    """Raised when the pmf support cannot cover the mass target within the cap."""


@dataclass(frozen=True)
class CompoundPoissonParams:
    """Rates (lambda_1, ..., lambda_J) of a compound Poisson law.

    ``rates[j-1]`` is the rate of clusters of size j.  All rates must be
    nonnegative and at least one must be positive.
    """

    rates: tuple[float, ...]

    def __init__(self, rates: Sequence[float]):
        rates = tuple(float(r) for r in rates)
        if len(rates) == 0:
            raise ValueError("rates must be nonempty")
        for r in rates:
            if not math.isfinite(r) or r < 0.0:
                raise ValueError("every rate must be finite and nonnegative")
        if not any(r > 0.0 for r in rates):
            raise ValueError("at least one rate must be positive")
        object.__setattr__(self, "rates", rates)

    @property
    def max_cluster_size(self) -> int:
        """J, the largest cluster size carried (including trailing zero rates)."""
        return len(self.rates)

    @property
    def total_rate(self) -> float:
        """lambda = sum_j lambda_j, the cluster-arrival intensity."""
        return math.fsum(self.rates)

    @property
    def severity(self) -> tuple[float, ...]:
        """mu_j = lambda_j / lambda, the cluster-size distribution."""
        lam = self.total_rate
        return tuple(r / lam for r in self.rates)

    def rate(self, j: int) -> float:
        """lambda_j, zero for j outside 1..J."""
        if 1 <= j <= len(self.rates):
            return self.rates[j - 1]
        return 0.0

    def to_json(self) -> dict:
        return {"rates": list(self.rates)}

    @classmethod
    def from_json(cls, obj: dict) -> "CompoundPoissonParams":
        return cls(obj["rates"])


@dataclass(frozen=True)
class ThetaVector:
    """Factorial-moment sums theta_0..theta_K of a rate sequence."""

    values: tuple[float, ...]

    def __init__(self, values: Sequence[float]):
        values = tuple(float(v) for v in values)
        if len(values) == 0:
            raise ValueError("theta vector must contain at least theta_0")
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        """K, the highest order carried."""
        return len(self.values) - 1

    def __getitem__(self, k: int) -> float:
        if not 0 <= k <= self.order:
            raise IndexError(f"theta order {k} not computed (have 0..{self.order})")
        return self.values[k]

    def require(self, k: int) -> None:
        if self.order < k:
            raise ValueError("theta order insufficient")


def theta(params: CompoundPoissonParams, K: int) -> ThetaVector:
    """Compute theta_k = sum_j j(j-1)...(j-k) lambda_j for k = 0..K.

    The falling factorial has k+1 factors, so theta_k = 0 whenever k >= J
    (every product term contains a zero factor).
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    values = []
    for k in range(K + 1):
        total = 0.0
        for j, lam_j in enumerate(params.rates, start=1):
            if j <= k:
                continue  # falling factorial hits the factor (j - j) = 0
            ff = 1.0
            for i in range(k + 1):
                ff *= j - i
            total += ff * lam_j
        values.append(total)
    return ThetaVector(values)


def variance(params: CompoundPoissonParams) -> float:
    """Var(U) = sum_j j^2 lambda_j = theta_0 + theta_1."""
    return math.fsum(j * j * r for j, r in enumerate(params.rates, start=1))


@dataclass(frozen=True)
class DistributionTable:
    """pmf of an integer random variable on {0..X_max} plus certified tail mass.

    ``tail_mass`` is an upper bound on P(X > X_max).  ``stderr`` carries
    per-bin standard errors for Monte Carlo tables and is None for exact ones.
    """

    pmf: np.ndarray
    tail_mass: float
    stderr: np.ndarray | None = field(default=None, compare=False)
    mc_samples: int | None = field(default=None, compare=False)

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        object.__setattr__(self, "pmf", pmf)
        if pmf.ndim != 1 or pmf.size == 0:
            raise ValueError("pmf must be a nonempty 1-D array")
        if np.any(pmf < -1e-12) or np.any(pmf > 1.0 + 1e-12):
            raise ValueError("pmf entries must lie in [0, 1]")
        if self.tail_mass < 0.0:
            raise ValueError("tail_mass must be nonnegative")

    @property
    def x_max(self) -> int:
        return self.pmf.size - 1

    def cdf(self) -> np.ndarray:
        return np.minimum(np.cumsum(self.pmf), 1.0)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))

    def var(self) -> float:
        x = np.arange(self.pmf.size)
        m = self.mean()
        return float(np.dot((x - m) ** 2, self.pmf))

    def total_mass(self) -> float:
        return float(self.pmf.sum()) + self.tail_mass

    def to_json(self) -> dict:
        return {"pmf": self.pmf.tolist(), "tail_mass": self.tail_mass}

    @classmethod
    def from_json(cls, obj: dict) -> "DistributionTable":
        return cls(np.asarray(obj["pmf"], dtype=float), float(obj["tail_mass"]))


def chernoff_tail(params: CompoundPoissonParams, x: float) -> float:
    """Exponential-moment bound on P(U > x).

    Minimizes exp(-s*x + sum_j lambda_j (e^{s j} - 1)) over a fixed grid of
    s values.  The exponents are formed first and a single exp is taken of
    their minimum, so the evaluation never overflows.
    """
    J = params.max_cluster_size
    s = np.geomspace(1e-2, 40.0 / J, 80)
    j = np.arange(1, J + 1, dtype=float)
    lam = np.asarray(params.rates)
    cgf = np.expm1(np.outer(s, j)) @ lam  # sum_j lambda_j (e^{s j} - 1)
    exponents = -s * x + cgf
    return float(min(1.0, math.exp(np.min(exponents))))


def cp_pmf(
    params: CompoundPoissonParams,
    mass_target: float = DEFAULT_MASS_TARGET,
    x_cap: int = DEFAULT_X_CAP,
) -> DistributionTable:
    """Exact pmf of U ~ CP via the one-step recursion.

    P(U=0) = e^{-lambda} and, for n >= 1,

        P(U=n) = (1/n) sum_{j <= min(n, J)} j lambda_j P(U=n-j).

    The support {0..X_max} is grown until the Chernoff tail bound at X_max
    drops to 1 - mass_target; the recorded tail_mass is the exact residual
    1 - sum(pmf) (clipped at 0), which the Chernoff bound certifies.
    """
    if not 0.0 < mass_target < 1.0:
        raise ValueError("mass_target must lie in (0, 1)")
    lam = params.total_rate
    th = theta(params, 1)
    sd = math.sqrt(th[0] + th[1])
    x_max = max(16, int(math.ceil(th[0] + 10.0 * sd)) + 10 * params.max_cluster_size)
    while chernoff_tail(params, x_max) > 1.0 - mass_target:
        x_max *= 2
    if x_max > x_cap:
        raise TruncationCapError("truncation cap exceeded")

    J = params.max_cluster_size
    jlam = [j * params.rates[j - 1] for j in range(1, J + 1)]
    p = np.zeros(x_max + 1)
    p[0] = math.exp(-lam)
    for n in range(1, x_max + 1):
        acc = 0.0
        for j in range(1, min(n, J) + 1):
            acc += jlam[j - 1] * p[n - j]
        p[n] = acc / n
    tail = max(0.0, 1.0 - float(p.sum()))
    return DistributionTable(pmf=p, tail_mass=tail)


def cp_sample(
    params: CompoundPoissonParams, seed: int, size: int | None = None
) -> int | np.ndarray:
    """Draw from CP(lambda, mu), reproducibly for a given seed.

    Uses the superposition form U = sum_j j * N_j with independent
    N_j ~ Poisson(lambda_j), which has the same law as drawing N ~
    Poisson(lambda) cluster counts and then N sizes from mu.
    """
    rng = np.random.default_rng(seed)
    n = 1 if size is None else int(size)
    out = np.zeros(n, dtype=np.int64)
    for j, lam_j in enumerate(params.rates, start=1):
        if lam_j > 0.0:
            out += j * rng.poisson(lam_j, size=n)
    if size is None:
        return int(out[0])
    return out


def monotone_condition(params: CompoundPoissonParams) -> bool:
    """True iff j lambda_j >= (j+1) lambda_{j+1} for all j (lambda_{J+1} = 0)."""
    for j in range(1, params.max_cluster_size + 1):
        if j * params.rate(j) < (j + 1) * params.rate(j + 1):
            return False
    return True
