"""Cox-Ross-Rubinstein market, replication by the Clark formula, and the
discrete change of variable formula.

Time runs over ``-1, 0, ..., N``; index ``-1`` carries the deterministic
initial prices.  The Bernoulli space of a model is built directly under the
risk-neutral measure.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from os import PathLike
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ArbitrageViolation,
    InvalidPrice,
    InvalidStrike,
    NotAMartingale,
    UndefinedFunctionValue,
)
from .identities import check_martingale
from .malliavin import gradient
from .space import (
    BernoulliSpace,
    ProcessRV,
    RandomVariable,
    _check_time,
    conditional_expectation,
    expectation,
    new_space,
)

MODEL_CHECK_RTOL = 1e-12


@dataclass(frozen=True)
class CrrModel:
    N: int
    r: tuple
    a: tuple
    b: tuple
    S0: float
    A0: float
    space: BernoulliSpace

    @property
    def p_star(self) -> np.ndarray:
        return self.space.p_array

    @property
    def q_star(self) -> np.ndarray:
        return self.space.q_array

    def growth(self, start: int, stop: int) -> float:
        """``prod_{k=start}^{stop} (1 + r_k)``; empty products are 1."""
        out = 1.0
        for k in range(max(start, 0), stop + 1):
            out *= 1.0 + self.r[k]
        return out

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "r": list(self.r),
            "a": list(self.a),
            "b": list(self.b),
            "S0": self.S0,
            "A0": self.A0,
        }


def _as_tuple(x, n: int, name: str) -> tuple:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} entries, got {arr.shape[0] if arr.ndim else 1}")
    return tuple(float(v) for v in arr)


def build_model(N: int, r, a, b, S0: float = 1.0, A0: float = 1.0) -> CrrModel:
    """Validate ``-1 < a_k < r_k < b_k`` and positive initial prices."""
    if N < 0:
        raise ValueError("N must be non-negative")
    r_, a_, b_ = (_as_tuple(v, N + 1, name) for v, name in ((r, "r"), (a, "a"), (b, "b")))
    for k in range(N + 1):
        if not (-1.0 < a_[k] < r_[k] < b_[k]) or not all(map(math.isfinite, (a_[k], r_[k], b_[k]))):
            raise ArbitrageViolation(
                f"period {k}: need -1 < a < r < b, got a={a_[k]}, r={r_[k]}, b={b_[k]}"
            )
    for name, v in (("S0", S0), ("A0", A0)):
        if not (math.isfinite(v) and v > 0.0):
            raise InvalidPrice(f"{name} must be positive and finite, got {v}")
    p_star = [(r_[k] - a_[k]) / (b_[k] - a_[k]) for k in range(N + 1)]
    model = CrrModel(N, r_, a_, b_, float(S0), float(A0), new_space(N, p_star))
    _check_model(model)
    return model


def model_from_json(doc: dict) -> CrrModel:
    try:
        return build_model(int(doc["N"]), doc["r"], doc["a"], doc["b"], float(doc["S0"]), float(doc["A0"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc


def load_model(path: str | PathLike) -> CrrModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))


def _check_model(model: CrrModel) -> None:
    for n in range(-1, model.N):
        S = stock_price(model, n)
        nxt = conditional_expectation(stock_price(model, n + 1), n)
        target = (1.0 + model.r[n + 1]) * S.values
        if np.max(np.abs(nxt.values - target)) > MODEL_CHECK_RTOL * max(1.0, float(np.max(np.abs(target)))):
            raise ArbitrageViolation(f"stock price fails the risk-neutral drift at time {n + 1}")


def stock_price(model: CrrModel, n: int) -> RandomVariable:
    """``S_n``: multiply by ``1 + b_k`` on ``X_k = 1`` and ``1 + a_k`` on ``X_k = -1``."""
    sp = model.space
    _check_time(sp, n)
    idx = np.arange(sp.size)
    values = np.full(sp.size, model.S0)
    for k in range(n + 1):
        up = ((idx >> k) & 1).astype(bool)
        values *= np.where(up, 1.0 + model.b[k], 1.0 + model.a[k])
    return RandomVariable(sp, values)


def discounted_price(model: CrrModel, n: int) -> RandomVariable:
    return stock_price(model, n) / model.growth(0, n)


def bond_price(model: CrrModel, n: int) -> float:
    _check_time(model.space, n)
    return model.A0 * model.growth(0, n)


def price_claim(model: CrrModel, F: RandomVariable) -> float:
    """``E*[F] prod_{k=0}^N (1 + r_k)^{-1}``."""
    return expectation(F) / model.growth(0, model.N)


@dataclass(frozen=True)
class HedgingStrategy:
    """Holdings ``eta_n`` (stock) and ``zeta_n`` (bond) over ``(n-1, n]``.

    ``value[i]`` and ``discounted_value[i]`` hold ``V_{i-1}`` and its
    discounted version, so index 0 is time ``-1``.
    """

    eta: ProcessRV
    zeta: ProcessRV
    eta_init: float
    zeta_init: float
    value: tuple
    discounted_value: tuple

    def V(self, n: int) -> RandomVariable:
        return self.value[n + 1]


def hedge(model: CrrModel, F: RandomVariable) -> HedgingStrategy:
    sp = model.space
    if F.space != sp:
        raise ValueError("claim is not defined on the model's space")
    eta = np.empty((sp.n_bits, sp.size))
    zeta = np.empty((sp.n_bits, sp.size))
    for n in range(sp.n_bits):
        S_prev = stock_price(model, n - 1).values
        scale = S_prev * sp.sqrt_pq[n] * (model.b[n] - model.a[n])
        proj = conditional_expectation(gradient(F, n), n - 1).values
        eta[n] = proj / model.growth(n + 1, model.N) / scale
        cond = conditional_expectation(F, n).values / model.growth(n + 1, model.N)
        zeta[n] = (cond - eta[n] * stock_price(model, n).values) / bond_price(model, n)
    price = price_claim(model, F)
    values = [RandomVariable.constant(sp, price)]
    for n in range(sp.n_bits):
        values.append(RandomVariable(sp, zeta[n] * bond_price(model, n) + eta[n] * stock_price(model, n).values))
    discounted = [v / model.growth(0, n) for n, v in enumerate(values, start=-1)]
    return HedgingStrategy(
        eta=ProcessRV(sp, eta, "predictable"),
        zeta=ProcessRV(sp, zeta, "predictable"),
        eta_init=0.0,
        zeta_init=price / model.A0,
        value=tuple(values),
        discounted_value=tuple(discounted),
    )


def replication_error(model: CrrModel, strategy: HedgingStrategy, F: RandomVariable) -> float:
    return float(np.max(np.abs(strategy.V(model.N).values - F.values)))


def self_financing_error(model: CrrModel, strategy: HedgingStrategy) -> float:
    """``max |A_n (zeta_{n+1} - zeta_n) + S_n (eta_{n+1} - eta_n)|`` for ``n = -1..N-1``."""
    sp = model.space
    eta = np.vstack([np.full(sp.size, strategy.eta_init), strategy.eta.table])
    zeta = np.vstack([np.full(sp.size, strategy.zeta_init), strategy.zeta.table])
    worst = 0.0
    for n in range(-1, model.N):
        i = n + 1
        res = bond_price(model, n) * (zeta[i + 1] - zeta[i]) + stock_price(model, n).values * (eta[i + 1] - eta[i])
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def gains_decomposition_error(model: CrrModel, strategy: HedgingStrategy) -> float:
    """Largest gap between ``V_n`` and ``V_{-1} prod(1+r) + sum_i eta_i S_{i-1} sqrt(pq)(b-a) Y_i prod_{k>i}(1+r)``."""
    sp = model.space
    v_init = strategy.value[0].values[0]
    worst = 0.0
    for n in range(sp.n_bits):
        total = v_init * model.growth(0, n)
        for i in range(n + 1):
            gain = (
                strategy.eta.table[i]
                * stock_price(model, i - 1).values
                * sp.sqrt_pq[i]
                * (model.b[i] - model.a[i])
                * sp.y_table[i]
            )
            total = total + gain * model.growth(i + 1, n)
        worst = max(worst, float(np.max(np.abs(strategy.V(n).values - total))))
    return worst


def payoff_builder(model: CrrModel, kind: str, strike: float | None = None, table=None) -> RandomVariable:
    """European payoff on ``S_N``: ``call``, ``put`` or a ``custom`` value table."""
    sp = model.space
    if kind == "custom":
        if table is None:
            raise ValueError("custom payoff needs a value table")
        return RandomVariable(sp, table)
    if kind not in ("call", "put"):
        raise ValueError(f"unknown payoff kind {kind!r}")
    if strike is None or not math.isfinite(strike) or strike < 0.0:
        raise InvalidStrike(f"strike must be a finite non-negative number, got {strike}")
    S = stock_price(model, model.N).values
    diff = S - strike if kind == "call" else strike - S
    return RandomVariable(sp, np.maximum(diff, 0.0))


def _evaluate(f, x: np.ndarray, n: int) -> np.ndarray:
    try:
        if callable(f):
            out = np.asarray(f(x, n), dtype=np.float64)
            out = np.broadcast_to(out, x.shape)
        else:
            out = np.array([f[(float(v), n)] for v in x], dtype=np.float64)
    except (KeyError, ValueError, TypeError, ArithmeticError) as exc:
        raise UndefinedFunctionValue(f"f is undefined at time {n}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise UndefinedFunctionValue(f"f is not finite on some reachable value at time {n}")
    return out


def change_of_variable_check(
    M: Sequence[RandomVariable],
    f: Callable[[np.ndarray, int], np.ndarray] | Mapping,
) -> float:
    """Largest residual of the discrete Ito formula over all ``n`` and outcomes.

    ``M`` lists ``M_{-1}, ..., M_N``; ``f`` maps ``(x, n)`` to a real and
    may be a vectorised callable or a mapping keyed by ``(x, n)``.
    """
    M = list(M)
    if not M:
        raise NotAMartingale("empty sequence")
    sp = M[0].space
    if len(M) != sp.N + 2:
        raise NotAMartingale(f"expected {sp.N + 2} values M_-1..M_N, got {len(M)}")
    check_martingale(M)
    fv = [RandomVariable(sp, _evaluate(f, m.values, n)) for n, m in enumerate(M, start=-1)]
    start = fv[0]
    running = np.zeros(sp.size)
    worst = 0.0
    for k in range(sp.n_bits):
        cur, prev = fv[k + 1], fv[k]
        running += gradient(cur, k).values * sp.y_table[k]
        running += conditional_expectation(cur - prev, k - 1).values
        res = cur.values - start.values - running
        worst = max(worst, float(np.max(np.abs(res))))
    return worst
