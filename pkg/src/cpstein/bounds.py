"""Stein-factor bounds for compound Poisson approximation.

A Stein factor (or "magic factor") is an upper bound on the sup norm of the
solution f_h of the compound Poisson Stein equation (M_0), or of its first
difference (M_1), uniformly over Kolmogorov test functions h = I(. <= y).
This module implements the classical bounds (general exponential, monotone
rates, the theta_0 - 2 theta_1 > 0 condition) and the criterion-function
route: with

    g_k(phi, p) = (1/(cos phi - 1)) sum_{j=1}^k Re[(e^{i phi}-1)^j]/j!
                  * (1-(1-p)^j)/p * theta_{j-1}  -  (2^k/k!) theta_k,

positivity of delta_k = inf over (phi, p) in (-pi, pi] x [0, 1] of g_k yields

    M_0 <= 2 sqrt(2/delta_k),   M_1 <= (1/(2 delta_k)) (1 + log+(pi delta_k)).

Closed forms for the infimum are used where the classical positivity
conditions pin it down; a dense deterministic grid search with local zoom
refinement covers every other case.  Note that the order-3 closed form is
the value of g_3 at (pi, 0); it equals the true infimum only when
theta_2 <= (2/5) theta_1 (for larger theta_2 the phi-slice at p = 0 has an
interior minimum at cos phi* = 1/4 - theta_1/(2 theta_2)).  ``delta_k``
keeps the closed-form shortcut under the classical condition
theta_2 < 2 theta_1, matching the published criterion; ``delta_k_grid``
always computes the numerical infimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CompoundPoissonParams, ThetaVector, monotone_condition, theta

__all__ = [
    "SteinFactorBound",
    "GkEvaluation",
    "DeltaResult",
    "log_plus",
    "g_k_eval",
    "g_k_grid",
    "delta_k",
    "delta_k_grid",
    "bound_general",
    "bound_monotone",
    "bound_bx99",
    "bound_thm2",
    "bound_cor3",
    "bound_lemma_c",
    "bound_thm4",
    "evaluate_all",
    "best_bound",
]

INF = float("inf")

GRID_PHI_POINTS = 2049
GRID_P_POINTS = 513
GRID_REL_TOL = 1e-8


@dataclass(frozen=True)
class SteinFactorBound:
    """An (M0, M1) Stein-factor pair with method tag and applicability."""

    m0: float
    m1: float
    method: str
    applicable: bool
    condition_note: str = ""

    def __post_init__(self):
        if not self.applicable and not (self.m0 == INF and self.m1 == INF):
            raise ValueError("inapplicable bounds must carry infinite factors")
        if self.applicable and not (self.m0 > 0.0 and self.m1 > 0.0):
            raise ValueError("applicable bounds must be positive")

    def to_json(self) -> dict:
        def enc(x: float):
            return "inf" if math.isinf(x) else x

        return {
            "m0": enc(self.m0),
            "m1": enc(self.m1),
            "method": self.method,
            "applicable": self.applicable,
            "note": self.condition_note,
        }


@dataclass(frozen=True)
class GkEvaluation:
    """One evaluation of the criterion function g_k."""

    phi: float
    p: float
    value: float


@dataclass(frozen=True)
class DeltaResult:
    """delta_k = inf g_k, with the argmin and whether a closed form was used."""

    k: int
    delta: float
    argmin: tuple[float, float]
    certified: bool


def log_plus(x: float) -> float:
    """Positive part of the natural logarithm; 0 for arguments <= 0."""
    if x <= 0.0:
        return 0.0
    return max(math.log(x), 0.0)


def _ratio_columns(k: int, phis: np.ndarray) -> np.ndarray:
    """Columns j = 1..k of Re[(e^{i phi} - 1)^j] / (cos phi - 1).

    Uses the half-angle factorization e^{i phi} - 1 = 2 i sin(phi/2)
    e^{i phi/2}, under which the ratio collapses to the cancellation-free
    product

        -2^{j-1} sin(phi/2)^{j-2} cos(j (phi + pi) / 2).

    The j = 1 column is identically 1, j = 2 is 2 cos phi, and the phi -> 0
    limits (0 for j >= 3) emerge without a special case.  The ratio is even
    in phi and is evaluated at |phi|.
    """
    aphi = np.abs(phis)
    s = np.sin(aphi / 2.0)
    cols = np.empty((phis.size, k))
    cols[:, 0] = 1.0
    if k >= 2:
        cols[:, 1] = 2.0 * np.cos(aphi)
    spow = np.ones_like(s)
    for j in range(3, k + 1):
        spow = spow * s
        cols[:, j - 1] = -(2.0 ** (j - 1)) * spow * np.cos(j * (aphi + np.pi) / 2.0)
    return cols


def _q_rows(k: int, ps: np.ndarray) -> np.ndarray:
    """Rows j = 1..k of (1 - (1-p)^j) / p, via the stable geometric sum.

    (1-(1-p)^j)/p = sum_{i=0}^{j-1} (1-p)^i, which evaluates to j at p = 0
    without a special case and avoids cancellation for small p.
    """
    omp = 1.0 - ps
    rows = np.empty((k, ps.size))
    power = np.ones_like(ps)
    acc = np.zeros_like(ps)
    for j in range(1, k + 1):
        acc = acc + power
        rows[j - 1] = acc
        power = power * omp
    return rows


def g_k_grid(th: ThetaVector, k: int, phis: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """Evaluate g_k on the grid phis x ps; returns shape (len(phis), len(ps))."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if th.order < k:
        raise ValueError("theta order insufficient")
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    R = _ratio_columns(k, phis)
    Q = _q_rows(k, ps)
    coef = np.array([th[j - 1] / math.factorial(j) for j in range(1, k + 1)])
    const = (2.0**k / math.factorial(k)) * th[k]
    return (R * coef) @ Q - const


def g_k_eval(th: ThetaVector, k: int, phi: float, p: float) -> GkEvaluation:
    """Evaluate g_k at a single (phi, p).

    phi must lie in (-pi, pi] and p in [0, 1].  Evaluation goes through
    |phi|, so the symmetry g_k(-phi, p) = g_k(phi, p) holds exactly.
    """
    if not -math.pi <= phi <= math.pi:
        raise ValueError("phi must lie in (-pi, pi]")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    value = g_k_grid(th, k, np.array([abs(phi)]), np.array([p]))[0, 0]
    return GkEvaluation(phi=phi, p=p, value=float(value))


def delta_k_grid(
    th: ThetaVector,
    k: int,
    n_phi: int = GRID_PHI_POINTS,
    n_p: int = GRID_P_POINTS,
    rel_tol: float = GRID_REL_TOL,
) -> DeltaResult:
    """Numerical infimum of g_k over (phi, p) by dense grid search plus zoom.

    The phi grid covers [0, pi] (g_k is even in phi); each zoom step regrids
    a 33 x 33 box around the current argmin until the minimum stops improving
    by more than rel_tol in relative terms.  Deterministic: fixed grids,
    first-index tie-breaking.
    """
    phis = np.linspace(0.0, math.pi, n_phi)
    ps = np.linspace(0.0, 1.0, n_p)
    G = g_k_grid(th, k, phis, ps)
    i, j = np.unravel_index(np.argmin(G), G.shape)
    best = float(G[i, j])
    phi_star, p_star = float(phis[i]), float(ps[j])
    dphi = phis[1] - phis[0]
    dp = ps[1] - ps[0]
    for _ in range(80):
        lo_phi, hi_phi = max(0.0, phi_star - dphi), min(math.pi, phi_star + dphi)
        lo_p, hi_p = max(0.0, p_star - dp), min(1.0, p_star + dp)
        sub_phis = np.linspace(lo_phi, hi_phi, 33)
        sub_ps = np.linspace(lo_p, hi_p, 33)
        S = g_k_grid(th, k, sub_phis, sub_ps)
        si, sj = np.unravel_index(np.argmin(S), S.shape)
        cand = float(S[si, sj])
        improved = best - cand
        if cand < best:
            best = cand
            phi_star, p_star = float(sub_phis[si]), float(sub_ps[sj])
        dphi = (hi_phi - lo_phi) / 16.0
        dp = (hi_p - lo_p) / 16.0
        if improved <= rel_tol * max(1.0, abs(best)):
            break
    return DeltaResult(k=k, delta=best, argmin=(phi_star, p_star), certified=False)


def delta_k(th: ThetaVector, k: int) -> DeltaResult:
    """delta_k = inf g_k, via closed form where available.

    k=1: g_1 is constant, delta = theta_0 - 2 theta_1.  k=2: the closed form
    theta_0 + cos phi (2-p) theta_1 - 2 theta_2 is minimized over the four
    corners of the domain.  k=3 with theta_2 < 2 theta_1: the classical value
    theta_0 - 2 theta_1 + 2 theta_2 - (4/3) theta_3 at (pi, 0).  Everything
    else falls through to the dense grid search.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if th.order < k:
        raise ValueError("theta order insufficient")
    if k == 1:
        return DeltaResult(
            k=1, delta=th[0] - 2.0 * th[1], argmin=(math.pi, 0.0), certified=True
        )
    if k == 2:
        corners = [(math.pi, 0.0), (math.pi, 1.0), (0.0, 0.0), (0.0, 1.0)]
        vals = [
            th[0] + math.cos(phi) * (2.0 - p) * th[1] - 2.0 * th[2]
            for phi, p in corners
        ]
        idx = min(range(4), key=vals.__getitem__)
        return DeltaResult(k=2, delta=vals[idx], argmin=corners[idx], certified=True)
    if k == 3 and th[2] < 2.0 * th[1]:
        delta = th[0] - 2.0 * th[1] + 2.0 * th[2] - (4.0 / 3.0) * th[3]
        return DeltaResult(k=3, delta=delta, argmin=(math.pi, 0.0), certified=True)
    return delta_k_grid(th, k)


def _inapplicable(method: str, note: str) -> SteinFactorBound:
    return SteinFactorBound(INF, INF, method, False, note)


def _factors_from_delta(delta: float) -> tuple[float, float]:
    """M0/M1 from a positive delta: 2 sqrt(2/delta), (1/(2 delta))(1+log+(pi delta))."""
    m0 = 2.0 * math.sqrt(2.0 / delta)
    m1 = (1.0 / (2.0 * delta)) * (1.0 + log_plus(math.pi * delta))
    return m0, m1


def bound_general(params: CompoundPoissonParams) -> SteinFactorBound:
    """The always-applicable exponential bound m0 = m1 = min{1, 1/lambda_1} e^lambda."""
    lam1 = params.rate(1)
    factor = 1.0 if lam1 == 0.0 else min(1.0, 1.0 / lam1)
    try:
        value = factor * math.exp(params.total_rate)
    except OverflowError:
        value = INF
    return SteinFactorBound(value, value, "GENERAL", True, "always applicable")


def bound_monotone(params: CompoundPoissonParams) -> SteinFactorBound:
    """Bound under the monotone-rates condition j lambda_j >= (j+1) lambda_{j+1}."""
    if not monotone_condition(params):
        return _inapplicable("MONOTONE", "rate sequence j*lambda_j not nonincreasing")
    lam1 = params.rate(1)
    m0 = min(1.0, math.sqrt(2.0 / (math.e * lam1)))
    m1 = min(0.5, 1.0 / (lam1 + 1.0))
    return SteinFactorBound(m0, m1, "MONOTONE", True, "j*lambda_j nonincreasing")


def bound_bx99(th: ThetaVector) -> SteinFactorBound:
    """Bound under theta_0 - 2 theta_1 > 0: m0 = sqrt(theta_0)/(theta_0-2 theta_1)."""
    th.require(1)
    gap = th[0] - 2.0 * th[1]
    if not gap > 0.0:
        return _inapplicable("BX99", f"theta_0 - 2*theta_1 = {gap:g} <= 0")
    m0 = math.sqrt(th[0]) / gap
    m1 = 1.0 / gap
    return SteinFactorBound(m0, m1, "BX99", True, f"theta_0 - 2*theta_1 = {gap:g} > 0")


def bound_thm2(th: ThetaVector, k: int) -> SteinFactorBound:
    """Criterion-function bound at order k, applicable iff delta_k > 0."""
    method = f"THM2({k})"
    dr = delta_k(th, k)
    if not dr.delta > 0.0:
        return _inapplicable(method, f"delta_{k} = {dr.delta:g} <= 0")
    m0, m1 = _factors_from_delta(dr.delta)
    route = "closed form" if dr.certified else "grid infimum"
    return SteinFactorBound(m0, m1, method, True, f"delta_{k} = {dr.delta:g} ({route})")


def bound_cor3(th: ThetaVector) -> SteinFactorBound:
    """Order-3 bound with the closed-form delta under theta_2 < 2 theta_1.

    Falls back to the order-3 grid route when theta_2 >= 2 theta_1, where no
    closed form is available.
    """
    th.require(3)
    if not th[2] < 2.0 * th[1]:
        return bound_thm2(th, 3)
    delta = th[0] - 2.0 * th[1] + 2.0 * th[2] - (4.0 / 3.0) * th[3]
    if not delta > 0.0:
        return _inapplicable("COR3", f"delta = {delta:g} <= 0")
    m0, m1 = _factors_from_delta(delta)
    return SteinFactorBound(m0, m1, "COR3", True, f"delta = {delta:g} (closed form)")


def _exp_three_halves(gamma: float) -> float:
    try:
        return math.exp(1.5 * gamma)
    except OverflowError:
        return INF


def _scaled_margin_factors(gamma: float, c: float) -> tuple[float, float, float]:
    """delta = gamma/(2 c sqrt(pi)) and its M0/M1; shared so that the
    c = exp(1.5 gamma) specialization is bitwise identical to the generic call."""
    delta = gamma / (2.0 * c * math.sqrt(math.pi))
    m0, m1 = _factors_from_delta(delta)
    return delta, m0, m1


def bound_lemma_c(th: ThetaVector, c: float) -> SteinFactorBound:
    """Free-parameter bound: for c > 1 and theta_1/theta_0 in
    (1/2, 1/2 + log c/(3 theta_0)], delta = (2 theta_1 - theta_0)/(2 c sqrt(pi)).

    The upper endpoint is checked in the exponentiated form
    exp(1.5 (2 theta_1 - theta_0)) <= c, which is exact when c is supplied
    as exp(1.5 gamma) and equivalent over the reals by monotonicity.
    """
    th.require(1)
    if not c > 1.0:
        raise ValueError("c must exceed 1")
    if not th[0] > 0.0:
        raise ValueError("theta_0 must be positive")
    method = f"LEMMA_C({c:.6g})"
    gamma = 2.0 * th[1] - th[0]
    if not gamma > 0.0:
        return _inapplicable(method, f"theta_1/theta_0 = {th[1] / th[0]:g} <= 1/2")
    if not _exp_three_halves(gamma) <= c:
        return _inapplicable(
            method, f"theta_1/theta_0 = {th[1] / th[0]:g} above interval endpoint"
        )
    delta, m0, m1 = _scaled_margin_factors(gamma, c)
    if not delta > 0.0:
        return _inapplicable(method, "delta underflowed to 0")
    return SteinFactorBound(m0, m1, method, True, f"delta = {delta:g}")


def bound_thm4(th: ThetaVector) -> SteinFactorBound:
    """Overdispersed-regime bound: for 2 theta_1 > theta_0,
    delta = gamma/(2 sqrt(pi) e^{1.5 gamma}) with gamma = 2 theta_1 - theta_0."""
    th.require(1)
    gamma = 2.0 * th[1] - th[0]
    if not gamma > 0.0:
        return _inapplicable("THM4", f"2*theta_1 - theta_0 = {gamma:g} <= 0")
    c = _exp_three_halves(gamma)
    delta, m0, m1 = _scaled_margin_factors(gamma, c)
    if not delta > 0.0:
        return _inapplicable("THM4", "delta underflowed to 0")
    return SteinFactorBound(m0, m1, "THM4", True, f"delta = {delta:g}")


def evaluate_all(
    params: CompoundPoissonParams, thm2_orders: tuple[int, ...] = ()
) -> list[SteinFactorBound]:
    """Evaluate the five named bounds (plus optional THM2 orders) for params."""
    K = max((3, *thm2_orders))
    th = theta(params, K)
    out = [
        bound_general(params),
        bound_monotone(params),
        bound_bx99(th),
        bound_cor3(th),
        bound_thm4(th),
    ]
    for k in thm2_orders:
        out.append(bound_thm2(th, k))
    return out


def best_bound(
    params: CompoundPoissonParams,
    th: ThetaVector | None = None,
    thm2_orders: tuple[int, ...] = (),
) -> SteinFactorBound:
    """Componentwise minimum of all applicable bounds, for m0 and m1 separately.

    The winning method for each component is recorded in the condition note;
    the method tag is the m1 winner's.
    """
    if th is None:
        bounds = evaluate_all(params, thm2_orders)
    else:
        bounds = [
            bound_general(params),
            bound_monotone(params),
            bound_bx99(th),
            bound_cor3(th),
            bound_thm4(th),
        ] + [bound_thm2(th, k) for k in thm2_orders]
    best_m0 = min(bounds, key=lambda b: b.m0)
    best_m1 = min(bounds, key=lambda b: b.m1)
    note = f"m0: {best_m0.method}, m1: {best_m1.method}"
    return SteinFactorBound(
        best_m0.m0, best_m1.m1, best_m1.method, True, note
    )
