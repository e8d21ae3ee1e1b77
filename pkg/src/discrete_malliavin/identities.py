"""Clark representation, covariance identities and related inequalities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NotAMartingale, OrderMismatch
from .malliavin import gradient, gradient_all, resolvent
from .space import (
    ProcessRV,
    RandomVariable,
    _check_same_space,
    _check_time,
    conditional_expectation,
    expectation,
    variance,
)

MARTINGALE_TOL = 1e-10


@dataclass(frozen=True)
class ClarkDecomposition:
    """``F = mean + sum_k integrand_k Y_k`` with a predictable integrand."""

    mean: float
    integrand: ProcessRV

    def reconstruct(self) -> RandomVariable:
        u = self.integrand
        return RandomVariable(u.space, self.mean + np.sum(u.table * u.space.y_table, axis=0))


def _predictable_projection(F: RandomVariable, start: int = 0) -> np.ndarray:
    """Rows ``E[D_k F | F_{k-1}]`` for ``k >= start``; earlier rows are zero."""
    sp = F.space
    table = np.zeros((sp.n_bits, sp.size))
    for k in range(start, sp.n_bits):
        dk = gradient(F, k)
        table[k] = conditional_expectation(dk, k - 1).values
    return table


def clark(F: RandomVariable) -> ClarkDecomposition:
    integrand = ProcessRV(F.space, _predictable_projection(F), "predictable")
    return ClarkDecomposition(expectation(F), integrand)


def clark_from(F: RandomVariable, a: int) -> tuple[RandomVariable, ProcessRV]:
    """``(E[F | F_a], u)`` with ``F = E[F | F_a] + sum_{k > a} u_k Y_k``."""
    _check_time(F.space, a)
    head = conditional_expectation(F, a)
    tail = ProcessRV(F.space, _predictable_projection(F, a + 1), "predictable")
    return head, tail


def clark_energy_sides(F: RandomVariable, a: int) -> tuple[float, float]:
    """``(E[F^2], E[E[F|F_a]^2] + E[sum_{k>a} u_k^2])``."""
    head, tail = clark_from(F, a)
    lhs = expectation(F * F)
    rhs = expectation(head * head) + expectation(RandomVariable(F.space, np.sum(tail.table**2, axis=0)))
    return lhs, rhs


def martingale_representation(M: Sequence[RandomVariable], tol: float = MARTINGALE_TOL) -> ProcessRV:
    """Predictable ``u`` with ``M_n = M_{-1} + sum_{k<=n} u_k Y_k``.

    ``M`` lists ``M_{-1}, M_0, ..., M_N``; the martingale property is checked
    with absolute tolerance ``tol`` scaled by the largest value.
    """
    M = list(M)
    if not M:
        raise NotAMartingale("empty sequence")
    sp = M[0].space
    if len(M) != sp.N + 2:
        raise NotAMartingale(f"expected {sp.N + 2} values M_-1..M_N, got {len(M)}")
    for m in M:
        _check_same_space(sp, m.space)
    check_martingale(M, tol)
    table = np.zeros((sp.n_bits, sp.size))
    for k in range(sp.n_bits):
        table[k] = conditional_expectation(gradient(M[k + 1], k), k - 1).values
    return ProcessRV(sp, table, "predictable")


def check_martingale(M: Sequence[RandomVariable], tol: float = MARTINGALE_TOL) -> None:
    """Raise :class:`NotAMartingale` unless ``M_n`` is adapted and ``E[M_{n+1}|F_n] = M_n``."""
    scale = max(1.0, max(m.sup_norm() for m in M))
    for n, m in enumerate(M, start=-1):
        cond = conditional_expectation(m, n)
        if np.max(np.abs(cond.values - m.values)) > tol * scale:
            raise NotAMartingale(f"M_{n} is not F_{n}-measurable")
        if n >= 0:
            prev = conditional_expectation(m, n - 1)
            if np.max(np.abs(prev.values - M[n].values)) > tol * scale:
                raise NotAMartingale(f"E[M_{n} | F_{n - 1}] differs from M_{n - 1}")


def poincare_sides(F: RandomVariable) -> tuple[float, float]:
    """``(Var F, E||DF||^2)``; the first never exceeds the second."""
    return variance(F), expectation(gradient_all(F).squared_norm())


def covariance_direct(F: RandomVariable, G: RandomVariable) -> float:
    _check_same_space(F.space, G.space)
    return expectation((F - expectation(F)) * (G - expectation(G)))


def covariance_clark(F: RandomVariable, G: RandomVariable) -> float:
    """``E[sum_k E[D_k G | F_{k-1}] D_k F]``."""
    _check_same_space(F.space, G.space)
    proj = _predictable_projection(G)
    dF = gradient_all(F).table
    return expectation(RandomVariable(F.space, np.sum(proj * dF, axis=0)))


def covariance_semigroup(F: RandomVariable, G: RandomVariable) -> float:
    """``E[sum_k D_k F (I + L)^{-1} D_k G]``, the time integral against ``e^{-t} P_t`` done in closed form."""
    _check_same_space(F.space, G.space)
    dF, dG = gradient_all(F), gradient_all(G)
    total = np.zeros(F.space.size)
    for k in range(F.space.n_bits):
        total += dF.table[k] * resolvent(dG[k]).values
    return expectation(RandomVariable(F.space, total))


def iterated_gradients(F: RandomVariable, order: int) -> dict[tuple[int, ...], np.ndarray]:
    """``D_{k_d} ... D_{k_1} F`` for every increasing tuple of length ``order``."""
    sp = F.space
    level: dict[tuple[int, ...], np.ndarray] = {(): F.values}
    for _ in range(order):
        nxt = {}
        for key, vals in level.items():
            start = key[-1] + 1 if key else 0
            for k in range(start, sp.n_bits):
                nxt[key + (k,)] = kernels.finite_difference(vals, k, float(sp.sqrt_pq[k]))
        level = nxt
    return level


def covariance_iterated(F: RandomVariable, G: RandomVariable, n: int) -> float:
    """Alternating expansion of ``Cov(F, G)`` in iterated gradients, truncated at order ``n``.

    Orders ``d = 1..n`` contribute ``(-1)^(d+1) E[sum D..F D..G]`` over
    increasing tuples; the order ``n+1`` remainder pairs ``D..F`` with the
    conditional expectation of ``D..G`` given the past of the last index.
    """
    if n < 0:
        raise OrderMismatch("n must be non-negative")
    _check_same_space(F.space, G.space)
    sp = F.space
    total = 0.0
    for d in range(1, n + 1):
        gF, gG = iterated_gradients(F, d), iterated_gradients(G, d)
        acc = np.zeros(sp.size)
        for key, vals in gF.items():
            acc += vals * gG[key]
        total += (-1) ** (d + 1) * expectation(RandomVariable(sp, acc))
    gF, gG = iterated_gradients(F, n + 1), iterated_gradients(G, n + 1)
    acc = np.zeros(sp.size)
    for key, vals in gF.items():
        last = key[-1]
        proj = conditional_expectation(RandomVariable(sp, gG[key]), last - 1)
        acc += vals * proj.values
    total += (-1) ** n * expectation(RandomVariable(sp, acc))
    return total


def gradient_energy(F: RandomVariable, order: int) -> float:
    """``(1/k!) E||D^k F||^2`` over the off-diagonal simplex, as a sum over increasing tuples."""
    acc = np.zeros(F.space.size)
    for vals in iterated_gradients(F, order).values():
        acc += vals * vals
    return expectation(RandomVariable(F.space, acc))


def variance_sandwich(F: RandomVariable, n: int) -> tuple[float, float]:
    """Partial alternating sums of gradient energies with ``2n`` and ``2n - 1`` terms."""
    if n < 1:
        raise OrderMismatch("n must be at least 1")
    terms = [gradient_energy(F, k) for k in range(1, 2 * n + 1)]
    signed = [(-1) ** k * t for k, t in enumerate(terms)]
    return float(sum(signed)), float(sum(signed[:-1]))


def is_nondecreasing(F: RandomVariable, atol: float = 1e-12) -> bool:
    """Sufficient test: every ``D_k F`` is non-negative up to ``atol``."""
    return bool(np.all(gradient_all(F).table >= -atol))


def fkg_check(F: RandomVariable, G: RandomVariable) -> tuple[bool, bool, float]:
    """``(F non-decreasing, G non-decreasing, Cov(F, G))``."""
    return is_nondecreasing(F), is_nondecreasing(G), covariance_direct(F, G)


def clark_sign_condition(F: RandomVariable, G: RandomVariable, atol: float = 1e-12) -> bool:
    """``E[D_k F | F_{k-1}] E[D_k G | F_{k-1}] >= 0`` for all ``k``; implies ``Cov(F, G) >= 0``."""
    _check_same_space(F.space, G.space)
    return bool(np.all(_predictable_projection(F) * _predictable_projection(G) >= -atol))

