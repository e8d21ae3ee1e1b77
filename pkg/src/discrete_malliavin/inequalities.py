"""Entropy, logarithmic Sobolev bounds and deviation inequalities.

Bounds written in exponent form take ``G`` and bound ``Ent[e^G]``; the
others take a strictly positive ``F`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGradient, NonPositiveInput, ProbabilityOutOfRange
from .malliavin import flip_difference, gradient_all
from .space import RandomVariable, expectation, new_space, x_rv

FIGURE1_F_PLUS = 1.0
FIGURE1_F_MINUS = 3.5
# below this K the Poisson-type bound is replaced by its Gaussian limit
K_LIMIT = 1e-12


def _require_positive(F: RandomVariable) -> None:
    m = float(np.min(F.values))
    if not m > 0.0:
        raise NonPositiveInput(f"expected a strictly positive random variable, min is {m}")


def entropy(F: RandomVariable) -> float:
    """``E[F log F] - E[F] log E[F]``."""
    _require_positive(F)
    mean = expectation(F)
    return expectation(F * F.apply(np.log)) - mean * math.log(mean)


def _psi(x: np.ndarray) -> np.ndarray:
    """``x e^x - e^x + 1``, written to stay accurate near 0."""
    return x * np.exp(x) - np.expm1(x)


def _nabla_table(G: RandomVariable) -> np.ndarray:
    sp = G.space
    return np.array(
        [-(x_rv(sp, k).values * flip_difference(G, k).values) for k in range(sp.n_bits)]
    ).reshape(sp.n_bits, sp.size)


def lsi_modified_rhs(F: RandomVariable) -> float:
    """``E[||DF||^2 / F]``."""
    _require_positive(F)
    return expectation(gradient_all(F).squared_norm() / F)


def lsi_l1_rhs(F: RandomVariable) -> float:
    """``E[sum_k D_k F D_k log F]``."""
    _require_positive(F)
    dF = gradient_all(F).table
    dlog = gradient_all(F.apply(np.log)).table
    return expectation(RandomVariable(F.space, np.sum(dF * dlog, axis=0)))


def _exp_weighted(G: RandomVariable, weights: np.ndarray, arg: np.ndarray) -> float:
    inner = np.sum(weights * _psi(arg), axis=0)
    return expectation(RandomVariable(G.space, np.exp(G.values) * inner))


def lsi_optimal_rhs(G: RandomVariable) -> float:
    """``E[e^G sum_k p_k q_k psi(|nabla_k G|)]`` bounding ``Ent[e^G]``."""
    sp = G.space
    pq = (sp.p_array * sp.q_array)[:, None]
    return _exp_weighted(G, pq, np.abs(_nabla_table(G)))


def lsi_sharp_rhs(G: RandomVariable) -> float:
    """``E[e^G sum_k p_k q_k psi(nabla_k G)]`` with the signed gradient."""
    sp = G.space
    pq = (sp.p_array * sp.q_array)[:, None]
    return _exp_weighted(G, pq, _nabla_table(G))


def lsi_weighted_rhs(G: RandomVariable) -> float:
    """``E[e^G sum_k sqrt(p_k q_k) |Y_k| psi(nabla_k G)]``."""
    sp = G.space
    w = sp.sqrt_pq[:, None] * np.abs(sp.y_table)
    return _exp_weighted(G, w, _nabla_table(G))


def lsi_unweighted_rhs(G: RandomVariable) -> float:
    """``E[e^G sum_k psi(nabla_k G)]``."""
    return _exp_weighted(G, np.ones((G.space.n_bits, 1)), _nabla_table(G))


def one_dim_sharp_residual(p, t, a):
    """Right minus left side of the one-variable sharp inequality.

    Evaluated in terms of ``d = t - a`` with the common factor ``e^a`` pulled
    out, so that the exact zero at ``t = a`` is reproduced without
    cancellation.  Accepts scalars or broadcastable arrays.
    """
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise ProbabilityOutOfRange("p must lie strictly between 0 and 1")
    t_arr = np.asarray(t, dtype=np.float64)
    a_arr = np.asarray(a, dtype=np.float64)
    q_arr = 1.0 - p_arr
    d = t_arr - a_arr
    em1 = np.expm1(d)
    de = d * np.exp(d)
    m = 1.0 + p_arr * em1
    rhs = p_arr * q_arr * (q_arr * (de - em1) + p_arr * (em1 - d))
    lhs = p_arr * de - m * np.log1p(p_arr * em1)
    out = np.exp(a_arr) * (rhs - lhs)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LsiReport:
    entropy: float
    rhs_modified: float
    rhs_l1: float
    rhs_optimal: float
    rhs_sharp: float

    def to_json(self) -> dict:
        return dict(self.__dict__)

    def ordering_holds(self, slack: float = 1e-12) -> bool:
        e = self.entropy
        return (
            e >= -slack
            and e <= self.rhs_sharp + slack
            and e <= self.rhs_l1 + slack
            and e <= self.rhs_modified + slack
            and self.rhs_sharp <= self.rhs_optimal + slack
            and self.rhs_sharp <= self.rhs_modified + slack
        )


def lsi_report(F: RandomVariable) -> LsiReport:
    _require_positive(F)
    G = F.apply(np.log)
    return LsiReport(
        entropy=entropy(F),
        rhs_modified=lsi_modified_rhs(F),
        rhs_l1=lsi_l1_rhs(F),
        rhs_optimal=lsi_optimal_rhs(G),
        rhs_sharp=lsi_sharp_rhs(G),
    )


def figure1_rows(step: float = 0.01) -> list[tuple[float, LsiReport]]:
    """Entropy and the four bounds for the two-point function ``f(1) = 1``, ``f(-1) = 3.5``."""
    count = int(round(1.0 / step)) - 1
    rows = []
    for i in range(1, count + 1):
        p = round(i * step, 12)
        sp = new_space(0, [p])
        F = RandomVariable(sp, [FIGURE1_F_MINUS, FIGURE1_F_PLUS])
        rows.append((p, lsi_report(F)))
    return rows


def _g(u: float) -> float:
    """``(1 + u) log(1 + u) - u``; series for small ``u`` avoids cancellation."""
    if u < 1e-3:
        return u * u * (0.5 - u * (1.0 / 6.0 - u * (1.0 / 12.0 - u / 20.0)))
    return (1.0 + u) * math.log1p(u) - u


def flip_bound(F: RandomVariable) -> float:
    """``max_{k, omega} |F_k^+ - F_k^-|``."""
    return max(float(np.max(np.abs(flip_difference(F, k).values))) for k in range(F.space.n_bits))


def gradient_sup_sq(F: RandomVariable) -> float:
    """``||DF||^2_{L^inf(Omega, l2)} = max_omega sum_k (D_k F)^2``."""
    return float(np.max(gradient_all(F).squared_norm().values))


def gaussian_constant_sq(F: RandomVariable) -> float:
    """``max_omega sum_k |D_k F| ||D_k F||_inf / (2 min(p_k, q_k))``."""
    sp = F.space
    d = np.abs(gradient_all(F).table)
    weight = d.max(axis=1) / (2.0 * np.minimum(sp.p_array, sp.q_array))
    return float(np.max(np.sum(weight[:, None] * d, axis=0)))


def deviation_bound_poisson_type(
    F: RandomVariable, x: float, K: float | None = None, grad_sq: float | None = None
) -> float:
    """``exp(-(b/K^2) g(x K / b))`` with ``b = ||DF||^2_{L^inf(Omega, l2)}``.

    ``K`` and ``grad_sq`` default to their exact values by enumeration.
    """
    if x <= 0:
        return 1.0
    K = flip_bound(F) if K is None else float(K)
    b = gradient_sup_sq(F) if grad_sq is None else float(grad_sq)
    if b <= 0.0:
        raise DegenerateGradient("gradient vanishes identically; the bound is undefined for x > 0")
    if K <= K_LIMIT:
        return math.exp(-x * x / (2.0 * b))
    return math.exp(-(b / (K * K)) * _g(x * K / b))


def deviation_bound_poisson_weak(
    F: RandomVariable, x: float, K: float | None = None, grad_sq: float | None = None
) -> float:
    """The weaker form ``exp(-(x / 2K) log(1 + x K / b))``."""
    if x <= 0:
        return 1.0
    K = flip_bound(F) if K is None else float(K)
    b = gradient_sup_sq(F) if grad_sq is None else float(grad_sq)
    if b <= 0.0:
        raise DegenerateGradient("gradient vanishes identically; the bound is undefined for x > 0")
    if K <= K_LIMIT:
        return math.exp(-x * x / (2.0 * b))
    return math.exp(-(x / (2.0 * K)) * math.log1p(x * K / b))


def deviation_bound_gaussian(F: RandomVariable, x: float, K_sq: float | None = None) -> float:
    """``exp(-x^2 / (2 K^2))``; ``K_sq`` defaults to :func:`gaussian_constant_sq`."""
    if x <= 0:
        return 1.0
    K_sq = gaussian_constant_sq(F) if K_sq is None else float(K_sq)
    if K_sq <= 0.0:
        raise DegenerateGradient("gradient vanishes identically; the bound is undefined for x > 0")
    return math.exp(-x * x / (2.0 * K_sq))


def exact_tail(F: RandomVariable, x: float) -> float:
    """``P(F - E[F] >= x)`` by enumeration."""
    centred = F.values - expectation(F)
    mask = centred >= x
    return float(np.sum(np.where(mask, F.space.probabilities, 0.0)))


@dataclass(frozen=True)
class DeviationReport:
    kind: str
    x: list[float]
    bound: list[float]
    exact: list[float]
    params: dict = field(default_factory=dict)

    def dominates(self, slack: float = 1e-12) -> bool:
        return all(b >= e - slack for b, e in zip(self.bound, self.exact))

    def to_json(self) -> dict:
        return {"kind": self.kind, "x": self.x, "bound": self.bound, "exact": self.exact, "params": self.params}


def deviation_report(F: RandomVariable, xs, kind: str = "poisson") -> DeviationReport:
    """Evaluate one bound family and the exact tail on the grid ``xs``."""
    xs = [float(x) for x in xs]
    if kind == "poisson":
        K, b = flip_bound(F), gradient_sup_sq(F)
        bounds = [deviation_bound_poisson_type(F, x, K, b) for x in xs]
        params = {"K": K, "grad_sq": b}
    elif kind == "gaussian":
        K_sq = gaussian_constant_sq(F)
        bounds = [deviation_bound_gaussian(F, x, K_sq) for x in xs]
        params = {"K_sq": K_sq}
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    return DeviationReport(kind, xs, bounds, [exact_tail(F, x) for x in xs], params)
