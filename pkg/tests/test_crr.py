import numpy as np
import pytest

from discrete_malliavin.crr import (
    build_model,
    change_of_variable_check,
    discounted_price,
    gains_decomposition_error,
    hedge,
    model_from_json,
    payoff_builder,
    price_claim,
    replication_error,
    self_financing_error,
    stock_price,
)
from discrete_malliavin.errors import (
    ArbitrageViolation,
    InvalidPrice,
    InvalidStrike,
    NotAMartingale,
    TimeIndexOutOfRange,
    UndefinedFunctionValue,
)
from discrete_malliavin.space import (
    RandomVariable,
    conditional_expectation,
    expectation,
    is_predictable,
    new_space,
    y_rv,
)

import oracles
from conftest import random_rv, random_space


def one_period():
    return build_model(0, 0.0, -0.5, 0.5, 1.0, 1.0)


def random_model(rng, N):
    a = rng.uniform(-0.3, -0.01, N + 1)
    b = rng.uniform(0.02, 0.4, N + 1)
    r = a + rng.uniform(0.1, 0.9, N + 1) * (b - a)
    return build_model(N, r, a, b, rng.uniform(50, 150), rng.uniform(0.5, 2))


def martingale_of(F):
    sp = F.space
    return [RandomVariable.constant(sp, expectation(F))] + [conditional_expectation(F, n) for n in range(sp.n_bits)]


def test_build_examples():
    assert one_period().p_star[0] == pytest.approx(0.5, abs=1e-15)
    m = build_model(3, 0.0, -0.2, 0.2)
    assert np.allclose(m.p_star, 0.5)
    assert np.allclose(m.p_star + m.q_star, 1.0)
    with pytest.raises(ArbitrageViolation):
        build_model(0, 0.1, 0.1, 0.5)
    with pytest.raises(ArbitrageViolation):
        build_model(1, 0.0, [-0.1, 0.2], 0.5)
    with pytest.raises(ArbitrageViolation):
        build_model(0, 0.0, -1.0, 0.5)
    with pytest.raises(InvalidPrice):
        build_model(0, 0.0, -0.5, 0.5, S0=0.0)
    with pytest.raises(InvalidPrice):
        build_model(0, 0.0, -0.5, 0.5, A0=-1.0)


def test_model_json_round_trip(rng):
    m = random_model(rng, 3)
    again = model_from_json(m.to_json())
    assert again.to_json() == m.to_json()
    with pytest.raises(ValueError):
        model_from_json({"N": 1})


def test_stock_price_examples(rng):
    m = one_period()
    assert sorted(stock_price(m, 0).values) == [0.5, 1.5]
    assert np.all(stock_price(m, -1).values == 1.0)
    with pytest.raises(TimeIndexOutOfRange):
        stock_price(m, 1)
    m = random_model(rng, 6)
    assert expectation(discounted_price(m, m.N)) == pytest.approx(m.S0, rel=1e-13)
    for n in range(-1, m.N):
        nxt = conditional_expectation(discounted_price(m, n + 1), n).values
        assert np.allclose(nxt, discounted_price(m, n).values, rtol=1e-13)


def test_price_examples(rng):
    m = one_period()
    assert price_claim(m, payoff_builder(m, "call", 1.0)) == pytest.approx(0.25, abs=1e-15)
    m = random_model(rng, 4)
    c = RandomVariable.constant(m.space, 3.0)
    assert price_claim(m, c) == pytest.approx(3.0 / m.growth(0, m.N), rel=1e-14)
    assert price_claim(m, stock_price(m, m.N)) == pytest.approx(m.S0, rel=1e-13)


def test_one_period_hedge():
    m = one_period()
    s = hedge(m, payoff_builder(m, "call", 1.0))
    assert s.eta.table[0] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert s.zeta.table[0] == pytest.approx([-0.25, -0.25], abs=1e-12)
    assert s.zeta_init == pytest.approx(0.25, abs=1e-12)
    assert s.eta_init == 0.0
    assert s.V(-1).values[0] == pytest.approx(0.25, abs=1e-12)


def test_hedge_matches_tree_oracle(rng):
    for N in (0, 1, 3, 5):
        m = random_model(rng, N)
        F = random_rv(rng, m.space, 10.0)
        s = hedge(m, F)
        price, eta, zeta = oracles.crr_backward(N, m.r, m.a, m.b, m.S0, m.A0, list(F.values))
        assert price_claim(m, F) == pytest.approx(price, rel=1e-12, abs=1e-12)
        for idx, w in enumerate(oracles.outcomes(N)):
            for n in range(N + 1):
                assert s.eta.table[n, idx] == pytest.approx(eta[n][w[:n]], rel=1e-10, abs=1e-12)
                assert s.zeta.table[n, idx] == pytest.approx(zeta[n][w[:n]], rel=1e-10, abs=1e-12)


def test_constant_claim_is_cash_only(rng):
    m = random_model(rng, 4)
    s = hedge(m, RandomVariable.constant(m.space, 2.0))
    assert np.max(np.abs(s.eta.table)) <= 1e-12
    for n in range(-1, m.N + 1):
        assert np.allclose(s.V(n).values, 2.0 / m.growth(n + 1, m.N), rtol=1e-13)


def test_hedge_invariants_random(rng):
    for N in (2, 6, 10):
        m = random_model(rng, N)
        F = random_rv(rng, m.space, 5.0)
        s = hedge(m, F)
        assert is_predictable(s.eta.table) and is_predictable(s.zeta.table)
        assert replication_error(m, s, F) <= 1e-10 * max(1.0, F.sup_norm())
        assert self_financing_error(m, s) <= 1e-10 * max(1.0, F.sup_norm())
        assert gains_decomposition_error(m, s) <= 1e-10 * max(1.0, F.sup_norm())
        for n in range(N + 1):
            target = conditional_expectation(F, n).values / m.growth(0, m.N)
            assert np.allclose(s.discounted_value[n + 1].values, target, rtol=1e-11, atol=1e-12)
        for n in range(-1, N):
            fwd = conditional_expectation(s.discounted_value[n + 2], n).values
            assert np.allclose(fwd, s.discounted_value[n + 1].values, rtol=1e-11, atol=1e-12)


def test_value_uses_next_holdings(rng):
    m = random_model(rng, 4)
    s = hedge(m, payoff_builder(m, "put", m.S0))
    for n in range(0, m.N):
        alt = s.zeta.table[n + 1] * m.A0 * m.growth(0, n) + s.eta.table[n + 1] * stock_price(m, n).values
        assert np.allclose(alt, s.V(n).values, rtol=1e-11, atol=1e-11)


def test_ten_period_call():
    m = build_model(10, 0.01, -0.1, 0.15, 100.0, 1.0)
    F = payoff_builder(m, "call", 100.0)
    s = hedge(m, F)
    assert replication_error(m, s, F) <= 1e-10
    assert self_financing_error(m, s) <= 1e-10
    assert s.eta.table.min() >= -1e-12


def test_no_short_selling_increasing_payoffs(rng):
    for _ in range(10):
        m = random_model(rng, 5)
        ST = stock_price(m, m.N).values
        h = np.sort(rng.normal(size=8))
        F = RandomVariable(m.space, np.interp(ST, np.linspace(ST.min(), ST.max(), 8), np.cumsum(np.abs(h))))
        assert hedge(m, F).eta.table.min() >= -1e-12


def test_payoff_examples(rng):
    m = one_period()
    assert sorted(payoff_builder(m, "call", 1.0).values) == [0.0, 0.5]
    m = random_model(rng, 5)
    ST = stock_price(m, m.N)
    assert np.array_equal(payoff_builder(m, "call", 0.0).values, ST.values)
    K = float(np.median(ST.values))
    diff = payoff_builder(m, "call", K) - payoff_builder(m, "put", K)
    assert np.allclose(diff.values, ST.values - K, atol=1e-12)
    for bad in (-1.0, float("nan"), None):
        with pytest.raises(InvalidStrike):
            payoff_builder(m, "call", bad)
    with pytest.raises(ValueError):
        payoff_builder(m, "digital", 1.0)
    custom = payoff_builder(m, "custom", table=np.arange(m.space.size, dtype=float))
    assert custom.values[3] == 3.0


def test_call_price_monotone_in_strike(rng):
    m = random_model(rng, 6)
    prices = [price_claim(m, payoff_builder(m, "call", K)) for K in np.linspace(0, 2 * m.S0, 25)]
    assert all(p >= 0 for p in prices)
    assert all(x >= y - 1e-12 for x, y in zip(prices, prices[1:]))


def test_change_of_variable_examples(rng):
    sp = new_space(4, 0.5)
    M = [RandomVariable.constant(sp, 0.0)]
    for k in range(sp.n_bits):
        M.append(M[-1] + y_rv(sp, k))
    assert change_of_variable_check(M, lambda x, n: x) <= 1e-12
    assert change_of_variable_check(M, lambda x, n: x * x) <= 1e-12
    # x^2 - (n + 1) is itself a martingale here
    assert change_of_variable_check(M, lambda x, n: x * x - (n + 1)) <= 1e-12


@pytest.mark.parametrize("f", [lambda x, n: x, lambda x, n: x**2, lambda x, n: x**3, lambda x, n: np.abs(x)])
def test_change_of_variable_random(rng, f):
    for N in range(0, 9):
        sp = random_space(rng, N)
        M = martingale_of(random_rv(rng, sp))
        scale = max(1.0, max(np.max(np.abs(f(m.values, 0))) for m in M))
        assert change_of_variable_check(M, f) <= 1e-10 * scale


def test_change_of_variable_table_input():
    sp = new_space(1, 0.5)
    M = [RandomVariable.constant(sp, 0.0)]
    for k in range(sp.n_bits):
        M.append(M[-1] + y_rv(sp, k))
    table = {(float(v), n): float(v) ** 2 for n, m in enumerate(M, start=-1) for v in m.values}
    assert change_of_variable_check(M, table) <= 1e-12
    del table[(0.0, -1)]
    with pytest.raises(UndefinedFunctionValue):
        change_of_variable_check(M, table)
    with np.errstate(divide="ignore", invalid="ignore"), pytest.raises(UndefinedFunctionValue):
        change_of_variable_check(M, lambda x, n: np.log(x + 2.0 - 2.0 * (n == 1)))


def test_change_of_variable_rejects_non_martingale(rng):
    sp = random_space(rng, 2)
    M = martingale_of(random_rv(rng, sp))
    with pytest.raises(NotAMartingale):
        change_of_variable_check(M[:-1], lambda x, n: x)
    M[2] = M[2] + 1.0
    with pytest.raises(NotAMartingale):
        change_of_variable_check(M, lambda x, n: x)
