"""Gradient, divergence, Ornstein-Uhlenbeck operator and semigroup.

The gradient is the scaled finite difference
``D_k F = sqrt(p_k q_k) (F(omega with X_k=+1) - F(omega with X_k=-1))``.
The divergence, the number operator ``L`` and the semigroup ``P_t`` are
evaluated in the Walsh domain; :func:`divergence_pointwise` and
:func:`semigroup_kernel` are value-domain routes kept as independent checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .chaos import ChaosExpansion, walsh_decompose, walsh_reconstruct
from .errors import NegativeTime
from .space import (
    BernoulliSpace,
    ProcessRV,
    RandomVariable,
    _check_index,
    _frozen,
    expectation,
    x_rv,
)

# exp(-40) < 5e-18, below double resolution relative to O(1) coefficients
SEMIGROUP_SATURATION = 40.0


@dataclass(frozen=True)
class GradientField:
    """All gradient columns ``(D_0 F, ..., D_N F)`` as an ``(N+1, 2**(N+1))`` table."""

    space: BernoulliSpace
    table: np.ndarray

    @property
    def columns(self) -> list[RandomVariable]:
        return [RandomVariable(self.space, row) for row in self.table]

    def __getitem__(self, k: int) -> RandomVariable:
        return RandomVariable(self.space, self.table[k])

    def squared_norm(self) -> RandomVariable:
        """Pointwise ``||DF||^2_{l2} = sum_k (D_k F)^2``."""
        return RandomVariable(self.space, np.sum(self.table**2, axis=0))

    def as_process(self) -> ProcessRV:
        return ProcessRV(self.space, self.table)


def gradient(F: RandomVariable, k: int) -> RandomVariable:
    sp = F.space
    _check_index(sp, k)
    return RandomVariable(sp, kernels.finite_difference(F.values, k, float(sp.sqrt_pq[k])))


def gradient_all(F: RandomVariable) -> GradientField:
    sp = F.space
    table = np.empty((sp.n_bits, sp.size))
    for k in range(sp.n_bits):
        table[k] = kernels.finite_difference(F.values, k, float(sp.sqrt_pq[k]))
    return GradientField(sp, _frozen(table))


def flip_difference(F: RandomVariable, k: int) -> RandomVariable:
    """Unscaled ``F_k^+ - F_k^-``, broadcast over both values of ``X_k``."""
    _check_index(F.space, k)
    return RandomVariable(F.space, kernels.finite_difference(F.values, k, 1.0))


def nabla(F: RandomVariable, k: int) -> RandomVariable:
    """``nabla_k F = X_k (F_k^- - F_k^+)``."""
    return -(x_rv(F.space, k) * flip_difference(F, k))


def product_rule_check(F: RandomVariable, G: RandomVariable, k: int) -> float:
    """Largest pointwise residual of the product rule for ``D_k``."""
    sp = F.space
    s = float(sp.sqrt_pq[_k(sp, k)])
    dF, dG = gradient(F, k), gradient(G, k)
    residual = gradient(F * G, k) - F * dG - G * dF + (x_rv(sp, k) / s) * dF * dG
    return residual.sup_norm()


def _k(space: BernoulliSpace, k: int) -> int:
    _check_index(space, k)
    return k


def exp_gradient_formula(F: RandomVariable, k: int) -> RandomVariable:
    """Closed form ``X_k sqrt(pq) e^F (1 - exp(-X_k D_k F / sqrt(pq)))`` of ``D_k e^F``."""
    sp = F.space
    s = float(sp.sqrt_pq[_k(sp, k)])
    X = x_rv(sp, k)
    return X * s * F.apply(np.exp) * (1.0 - (-(X * gradient(F, k)) / s).apply(np.exp))


def _walsh_shift_sum(u: ProcessRV) -> np.ndarray:
    """Walsh coefficients of the divergence of ``u``.

    Entry ``k`` contributes its coefficient on ``Y_A`` (``k`` not in ``A``) to
    ``Y_{A + k}``; components with ``k`` already in ``A`` are dropped.
    """
    sp = u.space
    out = np.zeros(sp.size)
    for k in range(sp.n_bits):
        c = kernels.walsh_forward(u.table[k], sp.p_array, sp.q_array, sp.sqrt_pq)
        out.reshape(-1, 2, 1 << k)[:, 1, :] += c.reshape(-1, 2, 1 << k)[:, 0, :]
    return out


def divergence(u: ProcessRV) -> RandomVariable:
    """Skorohod integral ``delta(u)``, the adjoint of the gradient."""
    return walsh_reconstruct(ChaosExpansion(u.space, _walsh_shift_sum(u)))


def _diagonal_gradients(u: ProcessRV) -> np.ndarray:
    sp = u.space
    return np.array(
        [kernels.finite_difference(u.table[k], k, float(sp.sqrt_pq[k])) for k in range(sp.n_bits)]
    ).reshape(sp.n_bits, sp.size)


def divergence_pointwise(u: ProcessRV) -> RandomVariable:
    """``sum u_k Y_k - sum D_k u_k - delta(phi D u)`` evaluated in the value domain.

    The inner process ``v_k = phi_k D_k u_k`` does not depend on ``X_k``, so its
    own diagonal corrections vanish and one level of recursion suffices.
    """
    sp = u.space
    diag = _diagonal_gradients(u)
    stochastic = np.sum(u.table * sp.y_table, axis=0)
    inner = sp.phi[:, None] * diag
    correction = np.sum(inner * sp.y_table, axis=0)
    return RandomVariable(sp, stochastic - np.sum(diag, axis=0) - correction)


def skorohod_isometry_sides(u: ProcessRV) -> tuple[float, float]:
    """``(E[delta(u)^2], E||u||^2 + E[sum_{k!=l} D_k u_l D_l u_k - sum_k (D_k u_k)^2])``."""
    sp = u.space
    d = divergence(u)
    lhs = expectation(d * d)
    n = sp.n_bits
    grads = np.empty((n, n, sp.size))  # grads[k, l] = D_k u_l
    for k in range(n):
        s = float(sp.sqrt_pq[k])
        for l in range(n):
            grads[k, l] = kernels.finite_difference(u.table[l], k, s)
    cross = np.einsum("klw,lkw->w", grads, grads)
    diag_sq = np.einsum("kkw->w", grads * grads)
    integrand = np.sum(u.table**2, axis=0) + (cross - diag_sq) - diag_sq
    rhs = expectation(RandomVariable(sp, integrand))
    return lhs, rhs


def _spectral(F: RandomVariable, multiplier: np.ndarray) -> RandomVariable:
    """Multiply each Walsh coefficient by ``multiplier[|A|]``."""
    e = walsh_decompose(F)
    scaled = e.coeffs * multiplier[F.space.popcounts]
    return walsh_reconstruct(ChaosExpansion(F.space, scaled))


def ou_operator(F: RandomVariable) -> RandomVariable:
    """``L F``: chaos of order ``n`` is multiplied by ``n``."""
    return _spectral(F, np.arange(F.space.n_bits + 1, dtype=np.float64))


def ou_operator_pointwise(F: RandomVariable) -> RandomVariable:
    """``sum_k Y_k D_k F``, the value-domain form of ``L F``."""
    g = gradient_all(F)
    return RandomVariable(F.space, np.sum(F.space.y_table * g.table, axis=0))


def _check_t(t: float) -> float:
    t = float(t)
    if not t >= 0.0:
        raise NegativeTime(f"semigroup time must be >= 0, got {t}")
    return t


def semigroup(F: RandomVariable, t: float) -> RandomVariable:
    """``P_t F``: chaos of order ``n`` is damped by ``exp(-n t)``."""
    t = _check_t(t)
    if t >= SEMIGROUP_SATURATION:
        return RandomVariable.constant(F.space, expectation(F))
    return _spectral(F, np.exp(-t * np.arange(F.space.n_bits + 1, dtype=np.float64)))


def semigroup_kernel(F: RandomVariable, t: float) -> RandomVariable:
    """``P_t F(w) = sum_o F(o) q_t(w, o) P(o)`` with the product density kernel.

    Costs ``O(4**(N+1))``; intended for moderate horizons.
    """
    t = _check_t(t)
    sp = F.space
    decay = math.exp(-t)
    return RandomVariable(
        sp, kernels.kernel_apply(F.values, sp.probabilities, sp.y_table, decay)
    )


def kernel_density(space: BernoulliSpace, t: float) -> np.ndarray:
    """Dense matrix ``q_t(w, o) = prod_i (1 + e^{-t} Y_i(o) Y_i(w))`` (rows ``w``)."""
    t = _check_t(t)
    decay = math.exp(-t)
    dens = np.ones((space.size, space.size))
    for i in range(space.n_bits):
        y = space.y_table[i]
        dens *= 1.0 + decay * np.outer(y, y)
    return dens


def resolvent(F: RandomVariable) -> RandomVariable:
    """``(I + L)^{-1} F = int_0^inf e^{-t} P_t F dt``: order ``n`` scaled by ``1/(1+n)``."""
    return _spectral(F, 1.0 / (1.0 + np.arange(F.space.n_bits + 1, dtype=np.float64)))


def semigroup_process(u: ProcessRV, t: float) -> ProcessRV:
    t = _check_t(t)
    return ProcessRV(u.space, [semigroup(e, t) for e in u.entries])


def semigroup_process_contraction_check(u: ProcessRV, t: float) -> tuple[float, float]:
    """``(sup_w ||P_t u||_{l2}(w), sup_w ||u||_{l2}(w))``; the first never exceeds the second."""
    pu = semigroup_process(u, t)
    lhs = float(np.sqrt(np.max(np.sum(pu.table**2, axis=0))))
    rhs = float(np.sqrt(np.max(np.sum(u.table**2, axis=0))))
    return lhs, rhs
