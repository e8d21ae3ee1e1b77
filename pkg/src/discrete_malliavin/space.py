"""Finite Bernoulli sample space, random variables and the elementary integral.

The sample space is ``{-1, 1}**(N + 1)`` under the product measure with
``P(X_k = 1) = p_k``.  An outcome is encoded as an integer whose bit ``k``
holds ``Z_k = (1 + X_k) / 2`` (least significant bit is time 0), so a random
variable is simply a table of ``2**(N + 1)`` floats.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from os import PathLike
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    HorizonTooLarge,
    IndexOutOfRange,
    NotAdapted,
    NotPredictable,
    ProbabilityOutOfRange,
    SpaceMismatch,
    TimeIndexOutOfRange,
)

MAX_HORIZON = 24
PROBABILITY_GUARD = 1e-9
MEASURABILITY_RTOL = 1e-12

PROCESS_TAGS = ("unrestricted", "adapted", "predictable")


@dataclass(frozen=True)
class BernoulliSpace:
    """Product Bernoulli measure on ``{-1, 1}**(N + 1)``.

    Build instances with :func:`new_space`, which validates the inputs.
    """

    N: int
    p: tuple

    @property
    def n_bits(self) -> int:
        return self.N + 1

    @property
    def size(self) -> int:
        return 1 << (self.N + 1)

    @cached_property
    def p_array(self) -> np.ndarray:
        return _frozen(np.array(self.p, dtype=np.float64))

    @cached_property
    def q_array(self) -> np.ndarray:
        return _frozen(1.0 - self.p_array)

    @cached_property
    def sqrt_pq(self) -> np.ndarray:
        return _frozen(np.sqrt(self.p_array * self.q_array))

    @cached_property
    def phi(self) -> np.ndarray:
        """Structure coefficients ``(q_k - p_k) / sqrt(p_k q_k)``."""
        return _frozen((self.q_array - self.p_array) / self.sqrt_pq)

    @cached_property
    def y_plus(self) -> np.ndarray:
        return _frozen(np.sqrt(self.q_array / self.p_array))

    @cached_property
    def y_minus(self) -> np.ndarray:
        return _frozen(-np.sqrt(self.p_array / self.q_array))

    @cached_property
    def probabilities(self) -> np.ndarray:
        """``P({omega})`` for every outcome index, in ascending index order."""
        probs = np.ones(1)
        for k in range(self.n_bits):
            probs = np.concatenate((probs * self.q_array[k], probs * self.p_array[k]))
        return _frozen(probs)

    @cached_property
    def y_table(self) -> np.ndarray:
        """Array of shape ``(N + 1, 2**(N + 1))`` holding ``Y_k(omega)``."""
        idx = np.arange(self.size)
        rows = [
            np.where((idx >> k) & 1, self.y_plus[k], self.y_minus[k]) for k in range(self.n_bits)
        ]
        return _frozen(np.array(rows, dtype=np.float64).reshape(self.n_bits, self.size))

    @cached_property
    def popcounts(self) -> np.ndarray:
        """Number of set bits of every index; the chaos order of a Walsh mask."""
        counts = np.zeros(1, dtype=np.int64)
        for _ in range(self.n_bits):
            counts = np.concatenate((counts, counts + 1))
        return _frozen(counts)

    def sign_table(self) -> np.ndarray:
        """Array of shape ``(2**(N + 1), N + 1)`` with ``X_k(omega)`` in ``{-1, 1}``."""
        idx = np.arange(self.size)[:, None]
        bits = (idx >> np.arange(self.n_bits)[None, :]) & 1
        return (2 * bits - 1).astype(np.int8)

    def has_constant_p(self) -> bool:
        return bool(np.all(self.p_array == self.p_array[0]))

    def to_json(self) -> dict:
        return {"N": self.N, "p": list(self.p)}


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def new_space(N: int, p, max_horizon: int = MAX_HORIZON) -> BernoulliSpace:
    """Validate ``N`` and ``p`` and return the corresponding space.

    ``p`` may be a scalar (same success probability at every time) or a
    sequence of length ``N + 1``.
    """
    if int(N) != N or N < 0:
        raise IndexOutOfRange(f"horizon must be a non-negative integer, got {N!r}")
    N = int(N)
    if N > max_horizon:
        raise HorizonTooLarge(f"N={N} exceeds the configured cap {max_horizon}")
    p_seq = np.asarray(p, dtype=np.float64)
    if p_seq.ndim == 0:
        p_seq = np.full(N + 1, float(p_seq))
    if p_seq.shape != (N + 1,):
        raise ProbabilityOutOfRange(f"expected {N + 1} probabilities, got {p_seq.size}")
    bad = ~((p_seq >= PROBABILITY_GUARD) & (p_seq <= 1.0 - PROBABILITY_GUARD))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ProbabilityOutOfRange(
            f"p[{k}]={p_seq[k]!r} outside [{PROBABILITY_GUARD}, {1 - PROBABILITY_GUARD}]"
        )
    return BernoulliSpace(N, tuple(float(x) for x in p_seq))


def space_from_json(doc: dict, max_horizon: int = MAX_HORIZON) -> BernoulliSpace:
    if not isinstance(doc, dict) or "N" not in doc or "p" not in doc:
        raise ValueError('space document must look like {"N": int, "p": [...]}')
    return new_space(doc["N"], doc["p"], max_horizon=max_horizon)


def load_space(path: str | PathLike, max_horizon: int = MAX_HORIZON) -> BernoulliSpace:
    with open(path) as fh:
        return space_from_json(json.load(fh), max_horizon=max_horizon)


class RandomVariable:
    """A real function on the sample space, stored as a read-only value table."""

    __slots__ = ("space", "values")
    __array_ufunc__ = None  # numpy scalars defer to our reflected operators

    def __init__(self, space: BernoulliSpace, values):
        arr = np.array(values, dtype=np.float64)
        if arr.shape == ():
            arr = np.full(space.size, float(arr))
        if arr.shape != (space.size,):
            raise IndexOutOfRange(
                f"value table has shape {arr.shape}, expected ({space.size},) for N={space.N}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("RandomVariable is immutable")

    @classmethod
    def constant(cls, space: BernoulliSpace, c: float) -> "RandomVariable":
        return cls(space, np.full(space.size, float(c)))

    @classmethod
    def from_function(cls, space: BernoulliSpace, fn: Callable[[np.ndarray], np.ndarray]):
        """Evaluate ``fn`` on the ``(2**(N+1), N+1)`` table of signs ``X_k``."""
        return cls(space, fn(space.sign_table()))

    def apply(self, fn: Callable[[np.ndarray], np.ndarray]) -> "RandomVariable":
        return RandomVariable(self.space, fn(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, omega):
        return self.values[omega]

    def __repr__(self):
        return f"RandomVariable(N={self.space.N}, values={np.array2string(self.values, threshold=8)})"

    def _other(self, other):
        if isinstance(other, RandomVariable):
            _check_same_space(self.space, other.space)
            return other.values
        return other

    def __add__(self, other):
        return RandomVariable(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RandomVariable(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return RandomVariable(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return RandomVariable(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RandomVariable(self.space, self.values / self._other(other))

    def __rtruediv__(self, other):
        return RandomVariable(self.space, self._other(other) / self.values)

    def __pow__(self, exponent):
        return RandomVariable(self.space, self.values ** self._other(exponent))

    def __neg__(self):
        return RandomVariable(self.space, -self.values)

    def __abs__(self):
        return RandomVariable(self.space, np.abs(self.values))


def _check_same_space(a: BernoulliSpace, b: BernoulliSpace) -> None:
    if a is not b and a != b:
        raise SpaceMismatch("random variables live on different spaces")


def _scale_tol(values: np.ndarray) -> float:
    return MEASURABILITY_RTOL * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


class ProcessRV:
    """A finite sequence ``u_0, ..., u_N`` of random variables on one space.

    ``tag`` records the claimed measurability (``unrestricted``, ``adapted``
    or ``predictable``); claims are verified on construction by testing
    independence of the relevant bits.
    """

    __slots__ = ("space", "table", "tag")

    def __init__(self, space: BernoulliSpace, entries, tag: str = "unrestricted"):
        if tag not in PROCESS_TAGS:
            raise ValueError(f"unknown measurability tag {tag!r}")
        if isinstance(entries, np.ndarray):
            table = np.array(entries, dtype=np.float64)
        else:
            rows = []
            for e in entries:
                if isinstance(e, RandomVariable):
                    _check_same_space(space, e.space)
                    rows.append(e.values)
                else:
                    rows.append(np.broadcast_to(np.asarray(e, dtype=np.float64), (space.size,)))
            table = np.array(rows, dtype=np.float64).reshape(len(rows), space.size)
        if table.shape != (space.n_bits, space.size):
            raise IndexOutOfRange(
                f"process table has shape {table.shape}, expected {(space.n_bits, space.size)}"
            )
        table.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "tag", tag)
        if tag == "predictable" and not is_predictable(table):
            raise NotPredictable("an entry u_k depends on X_k or a later coordinate")
        if tag == "adapted" and not is_adapted(table):
            raise NotAdapted("an entry u_k depends on a coordinate after time k")

    def __setattr__(self, name, value):
        raise AttributeError("ProcessRV is immutable")

    @classmethod
    def zeros(cls, space: BernoulliSpace, tag: str = "predictable") -> "ProcessRV":
        return cls(space, np.zeros((space.n_bits, space.size)), tag)

    @property
    def entries(self) -> list[RandomVariable]:
        return [RandomVariable(self.space, row) for row in self.table]

    def __getitem__(self, k: int) -> RandomVariable:
        return RandomVariable(self.space, self.table[k])

    def __len__(self):
        return self.table.shape[0]

    def __repr__(self):
        return f"ProcessRV(N={self.space.N}, tag={self.tag!r})"


# processes fed to the divergence carry no measurability restriction
SkorohodProcess = ProcessRV


def is_predictable(table: np.ndarray) -> bool:
    """True when row ``k`` does not depend on bits ``k..N`` (row 0 constant)."""
    tol = _scale_tol(table)
    return all(kernels.independent_of_bits_from(table[k], k, tol) for k in range(table.shape[0]))


def is_adapted(table: np.ndarray) -> bool:
    tol = _scale_tol(table)
    return all(
        kernels.independent_of_bits_from(table[k], k + 1, tol) for k in range(table.shape[0])
    )


def is_measurable(F: RandomVariable, n: int) -> bool:
    """True when ``F`` depends only on ``X_0, ..., X_n`` (``n = -1``: constant)."""
    _check_time(F.space, n)
    return kernels.independent_of_bits_from(F.values, n + 1, _scale_tol(F.values))


def _check_time(space: BernoulliSpace, n: int) -> None:
    if not -1 <= n <= space.N:
        raise TimeIndexOutOfRange(f"time index {n} outside [-1, {space.N}]")


def _check_index(space: BernoulliSpace, k: int) -> None:
    if not 0 <= k <= space.N:
        raise IndexOutOfRange(f"coordinate {k} outside [0, {space.N}]")


def outcome_index(space: BernoulliSpace, signs: Sequence[int]) -> int:
    """Encode ``(X_0, ..., X_N)`` with entries in ``{-1, 1}`` as an outcome index."""
    if len(signs) != space.n_bits or any(s not in (-1, 1) for s in signs):
        raise IndexOutOfRange(f"expected {space.n_bits} signs in {{-1, 1}}")
    return sum(1 << k for k, s in enumerate(signs) if s == 1)


def outcome_signs(space: BernoulliSpace, omega: int) -> tuple[int, ...]:
    _check_outcome(space, omega)
    return tuple(1 if (omega >> k) & 1 else -1 for k in range(space.n_bits))


def _check_outcome(space: BernoulliSpace, omega: int) -> None:
    if not 0 <= omega < space.size:
        raise IndexOutOfRange(f"outcome index {omega} outside [0, {space.size})")


def outcome_probability(space: BernoulliSpace, omega: int) -> float:
    _check_outcome(space, omega)
    prob = 1.0
    for k in range(space.n_bits):
        prob *= space.p[k] if (omega >> k) & 1 else 1.0 - space.p[k]
    return prob


def expectation(F: RandomVariable) -> float:
    """``sum_omega F(omega) P(omega)`` accumulated in ascending outcome order."""
    return kernels.weighted_sum(F.values, F.space.probabilities)


def conditional_expectation(F: RandomVariable, n: int) -> RandomVariable:
    """``E[F | F_n]``; ``n = -1`` is the trivial sigma-field."""
    space = F.space
    _check_time(space, n)
    low = kernels.marginalize_high(F.values, space.p_array, space.q_array, n + 1)
    return RandomVariable(space, np.tile(low, space.size // low.shape[0]))


def x_rv(space: BernoulliSpace, k: int) -> RandomVariable:
    _check_index(space, k)
    bits = (np.arange(space.size) >> k) & 1
    return RandomVariable(space, 2.0 * bits - 1.0)


def z_rv(space: BernoulliSpace, k: int) -> RandomVariable:
    _check_index(space, k)
    return RandomVariable(space, ((np.arange(space.size) >> k) & 1).astype(np.float64))


def y_rv(space: BernoulliSpace, k: int) -> RandomVariable:
    _check_index(space, k)
    return RandomVariable(space, space.y_table[k])


def s_rv(space: BernoulliSpace, n: int) -> RandomVariable:
    """Random walk ``S_n = Z_0 + ... + Z_n``; ``S_{-1} = 0``."""
    _check_time(space, n)
    idx = np.arange(space.size)
    total = np.zeros(space.size)
    for k in range(n + 1):
        total += (idx >> k) & 1
    return RandomVariable(space, total)


def y_product(space: BernoulliSpace, subset: Iterable[int]) -> RandomVariable:
    """``Y_A = prod_{k in A} Y_k`` (the constant 1 for the empty set)."""
    values = np.ones(space.size)
    for k in subset:
        _check_index(space, k)
        values = values * space.y_table[k]
    return RandomVariable(space, values)


def integral(u: ProcessRV) -> RandomVariable:
    """Discrete stochastic integral ``J(u) = sum_k u_k Y_k`` of a predictable ``u``."""
    if not is_predictable(u.table):
        raise NotPredictable("J(u) requires a predictable integrand")
    return RandomVariable(u.space, np.sum(u.table * u.space.y_table, axis=0))


def integral_partial(u: ProcessRV, k: int) -> RandomVariable:
    """``J(u 1_[0,k])``, which equals ``E[J(u) | F_k]``."""
    _check_time(u.space, k)
    if not is_predictable(u.table):
        raise NotPredictable("J(u) requires a predictable integrand")
    if k < 0:
        return RandomVariable.constant(u.space, 0.0)
    return RandomVariable(u.space, np.sum(u.table[: k + 1] * u.space.y_table[: k + 1], axis=0))


def variance(F: RandomVariable) -> float:
    centred = F - expectation(F)
    return expectation(centred * centred)


def l2_norm(F: RandomVariable) -> float:
    return math.sqrt(expectation(F * F))
