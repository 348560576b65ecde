"""Application models approximated by compound Poisson laws.

Four statistics with known compound Poisson approximants and explicit
Kolmogorov-distance bounds d_K <= (coefficient) * M1:

* 2-runs: W = sum_i xi_i xi_{i+1} over a circular Bernoulli(p) sequence of
  length n, counting adjacent success pairs.
* 2-D consecutive k-out-of-n:F reliability: W counts the k x k all-failed
  subgrids of an n x n grid whose components fail independently with
  probability q.
* mixed Poisson: W ~ Poisson(xi) with a positive random intensity xi.
* independent integer-valued summands: W = Z_1 + ... + Z_n.

Each model exposes its approximant's rates, the closed-form delta where one
exists, and the end-to-end distance bound taking a Stein factor M1 as input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import integrate, stats

from .core import CompoundPoissonParams, ThetaVector

__all__ = [
    "RunsModel",
    "ReliabilityModel",
    "TwoPointMixing",
    "GammaMixing",
    "MixedPoissonModel",
    "IndependentSumModel",
    "runs_cp_params",
    "runs_dk_bound",
    "reliability_cp_params",
    "reliability_delta",
    "reliability_dk_bound",
    "mixed_cp_params",
    "mixed_dk_bound",
    "sums_cp_params",
    "regime_classify",
    "cp_params_for",
    "model_from_json",
]


@dataclass(frozen=True)
class RunsModel:
    """Circular 2-runs statistic: n Bernoulli(p) bits, indices modulo n."""

    n: int
    p: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def to_json(self) -> dict:
        return {"model": "runs", "n": self.n, "p": self.p}


@dataclass(frozen=True)
class ReliabilityModel:
    """k x k all-failed subgrid count on an n x n grid, failure probability q."""

    n: int
    k: int
    q: float

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.n < self.k:
            raise ValueError("n must be >= k")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")

    @property
    def psi(self) -> float:
        """Probability q^(k^2) that a fixed k x k subgrid is all-failed."""
        return self.q ** (self.k * self.k)

    def to_json(self) -> dict:
        return {"model": "reliability", "n": self.n, "k": self.k, "q": self.q}


@dataclass(frozen=True)
class TwoPointMixing:
    """Mixing law: xi = a with probability w, b with probability 1-w."""

    a: float
    b: float
    w: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("mixing values must be positive")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("weight must lie in [0, 1]")

    @property
    def nu(self) -> float:
        return self.w * self.a + (1.0 - self.w) * self.b

    @property
    def sigma2(self) -> float:
        nu = self.nu
        return self.w * (self.a - nu) ** 2 + (1.0 - self.w) * (self.b - nu) ** 2

    def abs3(self) -> float:
        """E|xi - nu|^3, in closed form."""
        nu = self.nu
        return self.w * abs(self.a - nu) ** 3 + (1.0 - self.w) * abs(self.b - nu) ** 3


@dataclass(frozen=True)
class GammaMixing:
    """Mixing law: xi ~ Gamma(shape, scale)."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.scale > 0.0):
            raise ValueError("shape and scale must be positive")

    @property
    def nu(self) -> float:
        return self.shape * self.scale

    @property
    def sigma2(self) -> float:
        return self.shape * self.scale**2

    def abs3(self) -> float:
        """E|xi - nu|^3 by adaptive quadrature split at nu (integrand kink)."""
        nu = self.nu
        dist = stats.gamma(self.shape, scale=self.scale)

        def integrand(x):
            return abs(x - nu) ** 3 * dist.pdf(x)

        left, _ = integrate.quad(integrand, 0.0, nu, epsabs=1e-10, epsrel=1e-12)
        right, _ = integrate.quad(integrand, nu, math.inf, epsabs=1e-10, epsrel=1e-12)
        return left + right


Mixing = Union[TwoPointMixing, GammaMixing]


@dataclass(frozen=True)
class MixedPoissonModel:
    """W ~ Poisson(xi) with random intensity xi from the given mixing law."""

    mixing: Mixing

    @property
    def nu(self) -> float:
        return self.mixing.nu

    @property
    def sigma2(self) -> float:
        return self.mixing.sigma2

    def abs3(self) -> float:
        return self.mixing.abs3()

    def to_json(self) -> dict:
        m = self.mixing
        if isinstance(m, TwoPointMixing):
            return {"model": "mixed", "two_point": [m.a, m.b, m.w]}
        return {"model": "mixed", "gamma": [m.shape, m.scale]}


@dataclass(frozen=True)
class IndependentSumModel:
    """W = Z_1 + ... + Z_n with independent integer-valued components."""

    components: tuple[tuple[float, ...], ...]
    _moments: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __init__(self, components: Sequence[Sequence[float]]):
        comps = []
        for pmf in components:
            arr = tuple(float(v) for v in pmf)
            if len(arr) == 0 or any(v < 0.0 for v in arr):
                raise ValueError("component pmfs must be nonempty and nonnegative")
            if abs(math.fsum(arr) - 1.0) > 1e-9:
                raise ValueError("component pmf must sum to 1")
            comps.append(arr)
        if not comps:
            raise ValueError("at least one component required")
        object.__setattr__(self, "components", tuple(comps))
        ew = 0.0
        vw = 0.0
        for pmf in comps:
            x = np.arange(len(pmf))
            w = np.asarray(pmf)
            m = float(x @ w)
            ew += m
            vw += float(((x - m) ** 2) @ w)
        object.__setattr__(self, "_moments", (ew, vw))

    @property
    def ew(self) -> float:
        return self._moments[0]

    @property
    def var_w(self) -> float:
        return self._moments[1]

    def to_json(self) -> dict:
        return {"model": "sums", "components": [list(c) for c in self.components]}


def runs_cp_params(m: RunsModel) -> CompoundPoissonParams:
    """Approximant rates lambda_1 = n p^2 (1-p)^2, lambda_2 = n p^3 (1-p),
    lambda_3 = n p^4 / 3; the resulting theta vector is
    (n p^2, 2 n p^3, 2 n p^4, 0)."""
    n, p = m.n, m.p
    return CompoundPoissonParams(
        (
            n * p**2 * (1.0 - p) ** 2,
            n * p**3 * (1.0 - p),
            n * p**4 / 3.0,
        )
    )


def runs_dk_bound(m: RunsModel, m1: float) -> float:
    """Kolmogorov bound d_K(W, U) <= 3 * M1 * n * p^4."""
    if not math.isfinite(m1):
        raise ValueError("m1 must be finite")
    return 3.0 * m1 * m.n * m.p**4


def _binom_pmf(ell: int, m: int, y: float) -> float:
    if not 0 <= ell <= m:
        return 0.0
    return math.comb(m, ell) * y**ell * (1.0 - y) ** (m - ell)


def reliability_cp_params(m: ReliabilityModel) -> CompoundPoissonParams:
    """Approximant rates for the subgrid count, j = 1..5:

        lambda_j = (1/j) psi [4 pi_1(j) + 4 u pi_2(j) + u^2 pi_3(j)],

    with u = n-k-1 and pi_i(j) = P(Bin(i+1, q^k) = j-1).  Requires n > k+1
    so the u factors are positive.
    """
    if m.n <= m.k + 1:
        raise ValueError("n must exceed k+1")
    u = m.n - m.k - 1
    y = m.q**m.k
    psi = m.psi
    rates = []
    for j in range(1, 6):
        pi1 = _binom_pmf(j - 1, 2, y)
        pi2 = _binom_pmf(j - 1, 3, y)
        pi3 = _binom_pmf(j - 1, 4, y)
        rates.append(psi / j * (4.0 * pi1 + 4.0 * u * pi2 + u * u * pi3))
    return CompoundPoissonParams(rates)


def reliability_delta(m: ReliabilityModel) -> float:
    """Closed-form order-3 delta: psi [4 a(y) + 4 u b(y) + u^2 c(y)] at y = q^k,
    with a(y) = (1-2y)^2, b(y) = (1-2y)^3, c(y) = (1-4y)(1-4y+8y^2)."""
    u = m.n - m.k - 1
    y = m.q**m.k
    a = (1.0 - 2.0 * y) ** 2
    b = (1.0 - 2.0 * y) ** 3
    c = (1.0 - 4.0 * y) * (1.0 - 4.0 * y + 8.0 * y * y)
    return m.psi * (4.0 * a + 4.0 * u * b + u * u * c)


def reliability_dk_bound(m: ReliabilityModel, m1: float) -> float:
    """Kolmogorov bound
    d_K <= M1 (n-k+1)^2 psi [(4k^2+12k-3) psi
          + 4 sum_{r,s=1}^{k-1} q^{k^2-rs} + 4 sum_{s=1}^{k-2} q^{k^2-ks}]."""
    if not math.isfinite(m1):
        raise ValueError("m1 must be finite")
    n, k, q = m.n, m.k, m.q
    psi = m.psi
    bracket = (4.0 * k * k + 12.0 * k - 3.0) * psi
    for r in range(1, k):
        for s in range(1, k):
            bracket += 4.0 * q ** (k * k - r * s)
    for s in range(1, k - 1):
        bracket += 4.0 * q ** (k * k - k * s)
    return m1 * (n - k + 1) ** 2 * psi * bracket


def mixed_cp_params(m: MixedPoissonModel) -> CompoundPoissonParams:
    """Approximant rates lambda_1 = nu - sigma^2, lambda_2 = sigma^2 / 2."""
    nu, s2 = m.nu, m.sigma2
    if not nu > s2:
        raise ValueError("approximant undefined (lambda_1 < 0)")
    return CompoundPoissonParams((nu - s2, s2 / 2.0))


def mixed_dk_bound(m: MixedPoissonModel, m1: float) -> float:
    """Kolmogorov bound d_K(W, U) <= 1.2 * M1 * E|xi - nu|^3."""
    if not math.isfinite(m1):
        raise ValueError("m1 must be finite")
    return 1.2 * m1 * m.abs3()


def sums_cp_params(m: IndependentSumModel) -> CompoundPoissonParams:
    """Approximant rates lambda_1 = 2 EW - Var W, lambda_2 = (Var W - EW)/2.

    The derived identities theta_0 = EW and theta_1 = Var W - EW hold, so the
    approximant matches W's mean and variance.
    """
    ew, vw = m.ew, m.var_w
    lam2 = (vw - ew) / 2.0
    lam1 = 2.0 * ew - vw
    if lam2 < 0.0:
        raise ValueError(f"Var(W) >= E(W) violated: Var(W) = {vw:g} < E(W) = {ew:g}")
    if lam1 < 0.0:
        raise ValueError(
            f"E(W) >= Var(W)/2 violated: E(W) = {ew:g} < Var(W)/2 = {vw / 2.0:g}"
        )
    return CompoundPoissonParams((lam1, lam2))


def regime_classify(th: ThetaVector) -> str:
    """First applicable of BX99_OK, COR3_OK, THM4_OK, GENERAL_ONLY, in that
    order of preference (narrative sharpness; the numeric minimum of the
    bounds themselves is taken by ``best_bound``)."""
    th.require(3)
    if th[0] - 2.0 * th[1] > 0.0:
        return "BX99_OK"
    if th[2] < 2.0 * th[1]:
        delta = th[0] - 2.0 * th[1] + 2.0 * th[2] - (4.0 / 3.0) * th[3]
        if delta > 0.0:
            return "COR3_OK"
    if 2.0 * th[1] - th[0] > 0.0:
        return "THM4_OK"
    return "GENERAL_ONLY"


Model = Union[RunsModel, ReliabilityModel, MixedPoissonModel, IndependentSumModel]


def cp_params_for(model: Model) -> CompoundPoissonParams:
    """Dispatch a model to its compound Poisson approximant."""
    if isinstance(model, RunsModel):
        return runs_cp_params(model)
    if isinstance(model, ReliabilityModel):
        return reliability_cp_params(model)
    if isinstance(model, MixedPoissonModel):
        return mixed_cp_params(model)
    if isinstance(model, IndependentSumModel):
        return sums_cp_params(model)
    raise TypeError(f"unknown model type {type(model).__name__}")


def model_from_json(obj: dict) -> Model:
    """Rebuild a model from its tagged JSON form."""
    tag = obj.get("model")
    if tag == "runs":
        return RunsModel(n=int(obj["n"]), p=float(obj["p"]))
    if tag == "reliability":
        return ReliabilityModel(n=int(obj["n"]), k=int(obj["k"]), q=float(obj["q"]))
    if tag == "mixed":
        if "two_point" in obj:
            a, b, w = obj["two_point"]
            return MixedPoissonModel(TwoPointMixing(float(a), float(b), float(w)))
        r, s = obj["gamma"]
        return MixedPoissonModel(GammaMixing(float(r), float(s)))
    if tag == "sums":
        return IndependentSumModel(obj["components"])
    raise ValueError(f"unknown model tag {tag!r}")
