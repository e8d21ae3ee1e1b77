"""Walsh/chaos algebra on a Bernoulli space.

The canonical form of a random variable here is its vector of Walsh
coefficients ``a_A = E[F Y_A]`` indexed by subset bit masks ``A``.  Because
``E[Y_k**2] = 1`` the products ``Y_A`` form an orthonormal basis, and the
multiple integral ``J_n(f_n)`` of a symmetric kernel is the part of the
expansion supported on subsets of size ``n`` with ``a_A = n! f_n(A)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, NonConstantP, OrderMismatch
from .space import (
    BernoulliSpace,
    RandomVariable,
    _check_time,
    _frozen,
    s_rv,
)


def subset_to_mask(subset) -> int:
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    mask = 0
    for k in subset:
        if k < 0:
            raise IndexOutOfRange(f"negative coordinate {k}")
        mask |= 1 << int(k)
    return mask


def mask_to_subset(mask: int) -> tuple[int, ...]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


@dataclass(frozen=True)
class SymmetricKernel:
    """Symmetric function of ``order`` variables, stored on increasing tuples.

    Diagonal values never enter a multiple integral, so only strictly
    increasing index tuples are kept.  Order 0 holds the scalar under ``()``.
    """

    order: int
    entries: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0:
            raise OrderMismatch("kernel order must be non-negative")
        clean = {}
        for key, value in self.entries.items():
            key = tuple(int(k) for k in key)
            if len(key) != self.order:
                raise OrderMismatch(f"key {key} has length {len(key)}, kernel order is {self.order}")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise OrderMismatch(f"key {key} is not strictly increasing")
            if not math.isfinite(value):
                raise ValueError(f"kernel value at {key} is not finite")
            clean[key] = float(value)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def scalar(cls, c: float) -> "SymmetricKernel":
        return cls(0, {(): float(c)})

    @classmethod
    def indicator_cube(cls, order: int, N: int) -> "SymmetricKernel":
        """The constant kernel ``1`` on ``[0, N]**order``."""
        return cls(order, {t: 1.0 for t in itertools.combinations(range(N + 1), order)})

    def __call__(self, *indices) -> float:
        if len(set(indices)) < len(indices):
            return 0.0
        return self.entries.get(tuple(sorted(indices)), 0.0)


def symmetrize(raw: Mapping[tuple, float], n: int) -> SymmetricKernel:
    """Average ``raw`` over the ``n!`` permutations of its arguments.

    Only off-diagonal tuples are kept; entries with repeated indices are dropped.
    """
    if n < 1:
        raise OrderMismatch("symmetrize needs n >= 1")
    acc: dict[tuple, float] = {}
    for key, value in raw.items():
        if len(key) != n:
            raise OrderMismatch(f"key {key} does not have {n} indices")
        if len(set(key)) < n:
            continue
        sk = tuple(sorted(int(k) for k in key))
        acc[sk] = acc.get(sk, 0.0) + float(value)
    norm = math.factorial(n)
    return SymmetricKernel(n, {k: v / norm for k, v in acc.items()})


def multiple_integral(space: BernoulliSpace, f: SymmetricKernel) -> RandomVariable:
    """``J_n(f_n) = n! sum_{k_1 < ... < k_n} f_n(k_1, ..., k_n) Y_{k_1} ... Y_{k_n}``.

    An order above ``N + 1`` has no off-diagonal tuples inside ``[0, N]`` and
    yields the zero variable.
    """
    n = f.order
    if n == 0:
        return RandomVariable.constant(space, f.entries.get((), 0.0))
    values = np.zeros(space.size)
    if n > space.n_bits:
        return RandomVariable(space, values)
    for key, c in f.entries.items():
        if key[-1] > space.N:
            raise IndexOutOfRange(f"kernel index {key[-1]} exceeds N={space.N}")
        term = np.full(space.size, c)
        for k in key:
            term *= space.y_table[k]
        values += term
    return RandomVariable(space, math.factorial(n) * values)


class ChaosExpansion:
    """Walsh coefficients ``a_A`` of a random variable, ``F = sum_A a_A Y_A``."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: BernoulliSpace, coeffs):
        arr = np.array(coeffs, dtype=np.float64)
        if arr.shape != (space.size,):
            raise IndexOutOfRange(f"expected {space.size} coefficients, got shape {arr.shape}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coeffs", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("ChaosExpansion is immutable")

    @classmethod
    def from_mapping(cls, space: BernoulliSpace, mapping: Mapping) -> "ChaosExpansion":
        arr = np.zeros(space.size)
        for subset, value in mapping.items():
            mask = subset_to_mask(subset)
            if mask >= space.size:
                raise IndexOutOfRange(f"subset {mask_to_subset(mask)} not inside [0, {space.N}]")
            arr[mask] += float(value)
        return cls(space, arr)

    def __getitem__(self, subset) -> float:
        mask = subset_to_mask(subset)
        if mask >= self.space.size:
            raise IndexOutOfRange(f"subset {mask_to_subset(mask)} not inside [0, {self.space.N}]")
        return float(self.coeffs[mask])

    def as_dict(self, atol: float = 0.0) -> dict[tuple[int, ...], float]:
        """Non-negligible coefficients keyed by increasing index tuples."""
        return {
            mask_to_subset(m): float(self.coeffs[m])
            for m in np.flatnonzero(np.abs(self.coeffs) > atol)
        }

    def orders(self) -> np.ndarray:
        return self.space.popcounts

    def to_json(self, atol: float = 0.0) -> dict:
        """``{"coeffs": [{"subset": [...], "value": x}, ...]}`` sorted by size then subset."""
        items = sorted(self.as_dict(atol).items(), key=lambda kv: (len(kv[0]), kv[0]))
        return {"coeffs": [{"subset": list(s), "value": v} for s, v in items]}

    @classmethod
    def from_json(cls, space: BernoulliSpace, doc: dict) -> "ChaosExpansion":
        try:
            entries = doc["coeffs"]
            mapping: dict[int, float] = {}
            for item in entries:
                mask = subset_to_mask(item["subset"])
                mapping[mask] = mapping.get(mask, 0.0) + float(item["value"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed chaos document: {exc}") from exc
        return cls.from_mapping(space, mapping)

    def __repr__(self):
        return f"ChaosExpansion(N={self.space.N}, nonzero={len(self.as_dict())})"


def walsh_decompose(F: RandomVariable) -> ChaosExpansion:
    """Coefficients ``a_A = E[F Y_A]`` for every subset ``A`` (fast transform)."""
    sp = F.space
    return ChaosExpansion(sp, kernels.walsh_forward(F.values, sp.p_array, sp.q_array, sp.sqrt_pq))


def walsh_reconstruct(e: ChaosExpansion) -> RandomVariable:
    sp = e.space
    return RandomVariable(sp, kernels.walsh_inverse(e.coeffs, sp.y_minus, sp.y_plus))


def chaos_truncate(e: ChaosExpansion, n: int) -> ChaosExpansion:
    """Keep subsets of ``{0, ..., n}``; the expansion of ``E[F | F_n]``."""
    _check_time(e.space, n)
    out = np.zeros(e.space.size)
    keep = 1 << (n + 1)
    out[:keep] = e.coeffs[:keep]
    return ChaosExpansion(e.space, out)


def kernel_of_order(e: ChaosExpansion, n: int) -> SymmetricKernel:
    """The kernel ``f_n`` with ``J_n(f_n)`` equal to the order-``n`` part of ``e``."""
    if n < 0:
        raise OrderMismatch("order must be non-negative")
    if n > e.space.n_bits:
        return SymmetricKernel(n, {})
    masks = np.flatnonzero((e.space.popcounts == n) & (e.coeffs != 0.0))
    fact = math.factorial(n)
    return SymmetricKernel(n, {mask_to_subset(int(m)): e.coeffs[m] / fact for m in masks})


def expansion_from_kernels(space: BernoulliSpace, kernel_list: Iterable[SymmetricKernel]):
    """Inverse of :func:`kernel_of_order`: ``E[F] + sum_n J_n(f_n)`` in Walsh form."""
    arr = np.zeros(space.size)
    seen = set()
    for f in kernel_list:
        if f.order in seen:
            raise OrderMismatch(f"two kernels of order {f.order}")
        seen.add(f.order)
        fact = math.factorial(f.order)
        for key, value in f.entries.items():
            mask = subset_to_mask(key)
            if mask >= space.size:
                raise IndexOutOfRange(f"kernel index {key} exceeds N={space.N}")
            arr[mask] += fact * value
    return ChaosExpansion(space, arr)


@dataclass(frozen=True)
class KrawtchoukTable:
    """``J_n(1_[0,N]^n)`` together with the polynomial it induces in ``S_N``."""

    order: int
    variable: RandomVariable
    values: np.ndarray  # K(s) for s = 0..N+1
    s_measurable: bool
    degree: int


def _finite_difference_degree(values: np.ndarray, atol: float) -> int:
    """Smallest ``d`` with vanishing ``(d+1)``-th forward differences, ``-1`` for zero."""
    diffs = np.asarray(values, dtype=np.float64)
    if np.all(np.abs(diffs) <= atol):
        return -1
    d = 0
    while diffs.size > 1:
        nxt = np.diff(diffs)
        if np.all(np.abs(nxt) <= atol * 2 ** (d + 1)):
            return d
        diffs = nxt
        d += 1
    return d


def krawtchouk_check(space: BernoulliSpace, n: int, atol: float = 1e-12) -> KrawtchoukTable:
    """Evaluate ``J_n`` of the constant kernel and tabulate it against ``S_N``.

    The table entry for ``s`` is the common value of ``J_n`` on outcomes with
    ``S_N = s``; ``s_measurable`` reports whether those values agree within
    ``atol`` (scaled by the sup norm) and ``degree`` is the degree of the
    induced polynomial, read off from finite differences.
    """
    if not space.has_constant_p():
        raise NonConstantP("the Krawtchouk relation needs a constant success probability")
    if n < 1:
        raise OrderMismatch("order must be at least 1")
    K = multiple_integral(space, SymmetricKernel.indicator_cube(n, space.N))
    S = s_rv(space, space.N).values.astype(np.int64)
    scale = max(1.0, K.sup_norm())
    table = np.empty(space.N + 2)
    measurable = True
    for s in range(space.N + 2):
        vals = K.values[S == s]
        table[s] = vals[0]
        if np.max(np.abs(vals - vals[0])) > atol * scale:
            measurable = False
    degree = _finite_difference_degree(table, atol * scale)
    return KrawtchoukTable(n, K, _frozen(table), measurable, degree)
