import itertools
import json
import math

import numpy as np
import pytest

from discrete_malliavin.chaos import (
    ChaosExpansion,
    SymmetricKernel,
    chaos_truncate,
    expansion_from_kernels,
    kernel_of_order,
    krawtchouk_check,
    mask_to_subset,
    multiple_integral,
    subset_to_mask,
    symmetrize,
    walsh_decompose,
    walsh_reconstruct,
)
from discrete_malliavin.errors import IndexOutOfRange, NonConstantP, OrderMismatch
from discrete_malliavin.space import (
    RandomVariable,
    conditional_expectation,
    expectation,
    new_space,
    s_rv,
    x_rv,
    y_product,
    y_rv,
)

import oracles
from conftest import random_rv, random_space


def random_kernel(rng, order, N):
    return SymmetricKernel(order, {t: rng.normal() for t in itertools.combinations(range(N + 1), order)})


def test_mask_helpers():
    assert subset_to_mask((0, 2)) == 5
    assert mask_to_subset(5) == (0, 2)
    assert mask_to_subset(0) == ()


def test_kernel_validation():
    with pytest.raises(OrderMismatch):
        SymmetricKernel(2, {(1, 0): 1.0})
    with pytest.raises(OrderMismatch):
        SymmetricKernel(2, {(0,): 1.0})
    with pytest.raises(ValueError):
        SymmetricKernel(1, {(0,): float("nan")})
    f = SymmetricKernel(2, {(0, 1): 3.0})
    assert f(1, 0) == 3.0 and f(1, 1) == 0.0


def test_multiple_integral_examples():
    sp = new_space(2, [0.3, 0.6, 0.45])
    np.testing.assert_array_equal(multiple_integral(sp, SymmetricKernel(1, {(1,): 1.0})).values, y_rv(sp, 1).values)
    sym = symmetrize({(0, 1): 1.0, (1, 0): 1.0}, 2)
    sym = SymmetricKernel(2, {k: v / 2 for k, v in sym.entries.items()})
    np.testing.assert_allclose(multiple_integral(sp, sym).values, (y_rv(sp, 0) * y_rv(sp, 1)).values, atol=1e-15)
    assert np.all(multiple_integral(sp, SymmetricKernel.scalar(2.5)).values == 2.5)


def test_multiple_integral_above_dimension_is_zero():
    sp = new_space(1, 0.5)
    assert np.all(multiple_integral(sp, SymmetricKernel(3, {(0, 1, 2): 1.0})).values == 0.0)
    with pytest.raises(IndexOutOfRange):
        multiple_integral(sp, SymmetricKernel(1, {(2,): 1.0}))


def test_symmetrize_examples():
    assert symmetrize({(0, 1): 1.0}, 2).entries == {(0, 1): 0.5}
    assert symmetrize({(0, 1): 1.0, (1, 0): 1.0}, 2).entries == {(0, 1): 1.0}
    assert symmetrize({(0, 0): 4.0, (0, 1): 1.0}, 2).entries == {(0, 1): 0.5}
    already = {(0, 1): 2.0, (1, 0): 2.0}
    assert symmetrize(already, 2).entries == {(0, 1): 2.0}
    with pytest.raises(OrderMismatch):
        symmetrize({(0,): 1.0}, 0)


def test_mean_of_multiple_integrals_is_zero(rng):
    sp = random_space(rng, 4)
    for n in range(1, sp.n_bits + 1):
        assert abs(expectation(multiple_integral(sp, random_kernel(rng, n, sp.N)))) <= 1e-12


def test_multiple_integral_isometry(rng):
    sp = random_space(rng, 4)
    for n in range(1, 4):
        for m in range(1, 4):
            f, g = random_kernel(rng, n, sp.N), random_kernel(rng, m, sp.N)
            lhs = expectation(multiple_integral(sp, f) * multiple_integral(sp, g))
            if n == m:
                inner = sum(f.entries[t] * g.entries[t] for t in f.entries) * math.factorial(n)
                rhs = math.factorial(n) * inner
            else:
                rhs = 0.0
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_recurrence(rng):
    sp = random_space(rng, 4)
    for n in (2, 3):
        f = random_kernel(rng, n, sp.N)
        total = np.zeros(sp.size)
        for k in range(sp.n_bits):
            # f_n(*, k) restricted to [0, k-1]^(n-1)
            sub = {t[:-1]: v for t, v in f.entries.items() if t[-1] == k}
            inner = multiple_integral(sp, SymmetricKernel(n - 1, sub))
            total += sp.y_table[k] * inner.values
        lhs = multiple_integral(sp, f).values
        assert np.max(np.abs(lhs - n * total)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_orthonormal_basis(rng):
    sp = random_space(rng, 3)
    basis = [y_product(sp, mask_to_subset(m)) for m in range(sp.size)]
    gram = np.array([[expectation(a * b) for b in basis] for a in basis])
    assert np.max(np.abs(gram - np.eye(sp.size))) <= 1e-12


def test_dimension_count():
    sp = new_space(5, 0.5)
    for n in range(sp.N + 1):
        masks = np.arange(1 << (n + 1))
        counts = np.bincount(sp.popcounts[masks], minlength=n + 2)
        for l in range(n + 2):
            assert counts[l] == math.comb(n + 1, l)


def test_decompose_examples():
    sp = new_space(1, [0.5, 0.3])
    e = walsh_decompose(RandomVariable.constant(sp, 4.0))
    assert e[()] == 4.0 and e.as_dict(1e-15) == {(): 4.0}
    e = walsh_decompose(x_rv(sp, 0))
    assert e.as_dict(1e-15) == {(0,): 1.0}
    sp = new_space(0, [0.25])
    e = walsh_decompose(x_rv(sp, 0))
    assert e[()] == pytest.approx(-0.5, abs=1e-15)
    assert e[(0,)] == pytest.approx(2 * math.sqrt(0.1875), abs=1e-15)
    assert e[(0,)] == pytest.approx(0.866025, abs=1e-6)


def test_decompose_matches_oracle(rng):
    sp = random_space(rng, 3)
    F = random_rv(rng, sp)
    np.testing.assert_allclose(walsh_decompose(F).coeffs, oracles.walsh(sp.p, F.values), atol=1e-12)


def test_reconstruct_examples():
    sp = new_space(1, 0.5)
    assert np.all(walsh_reconstruct(ChaosExpansion(sp, np.zeros(4))).values == 0)
    sp = new_space(0, [0.5])
    e = ChaosExpansion.from_mapping(sp, {(): 1.0, (0,): 1.0})
    np.testing.assert_array_equal(walsh_reconstruct(e).values, [0.0, 2.0])


def test_round_trip(rng):
    for _ in range(100):
        sp = random_space(rng, int(rng.integers(0, 9)))
        F = random_rv(rng, sp)
        back = walsh_reconstruct(walsh_decompose(F))
        assert np.max(np.abs(back.values - F.values)) <= 1e-12 * max(1.0, F.sup_norm())


def test_truncate_examples():
    sp = new_space(1, 0.5)
    e = ChaosExpansion.from_mapping(sp, {(): 1, (0,): 2, (1,): 3, (0, 1): 4})
    assert chaos_truncate(e, 0).as_dict() == {(): 1.0, (0,): 2.0}
    assert chaos_truncate(e, 1).as_dict() == e.as_dict()
    assert chaos_truncate(e, -1).as_dict() == {(): 1.0}


def test_truncate_is_conditional_expectation(rng):
    sp = random_space(rng, 5)
    F = random_rv(rng, sp)
    e = walsh_decompose(F)
    for n in range(-1, sp.N + 1):
        expected = walsh_decompose(conditional_expectation(F, n)).coeffs
        assert np.max(np.abs(chaos_truncate(e, n).coeffs - expected)) <= 1e-13


def test_kernel_conversion():
    sp = new_space(2, 0.5)
    e = ChaosExpansion.from_mapping(sp, {(): 0.5, (1,): 3.0, (0, 1): 4.0})
    assert kernel_of_order(e, 1).entries == {(1,): 3.0}
    assert kernel_of_order(e, 2).entries == {(0, 1): 2.0}
    assert kernel_of_order(e, 0).entries == {(): 0.5}
    back = expansion_from_kernels(sp, [kernel_of_order(e, n) for n in range(4)])
    np.testing.assert_array_equal(back.coeffs, e.coeffs)
    with pytest.raises(OrderMismatch):
        expansion_from_kernels(sp, [SymmetricKernel.scalar(1), SymmetricKernel.scalar(2)])


def test_kernel_round_trip(rng):
    sp = random_space(rng, 4)
    e = walsh_decompose(random_rv(rng, sp))
    back = expansion_from_kernels(sp, [kernel_of_order(e, n) for n in range(sp.n_bits + 1)])
    assert np.max(np.abs(back.coeffs - e.coeffs)) <= 1e-14


def test_kernel_view_matches_multiple_integral(rng):
    sp = random_space(rng, 3)
    F = random_rv(rng, sp)
    e = walsh_decompose(F)
    total = sum(multiple_integral(sp, kernel_of_order(e, n)).values for n in range(sp.n_bits + 1))
    assert np.max(np.abs(total - F.values)) <= 1e-12


def test_json_round_trip():
    sp = new_space(2, 0.4)
    e = ChaosExpansion.from_mapping(sp, {(0, 2): 1.5, (): -1.0, (1,): 2.0})
    doc = e.to_json()
    assert [item["subset"] for item in doc["coeffs"]] == [[], [1], [0, 2]]
    back = ChaosExpansion.from_json(sp, json.loads(json.dumps(doc)))
    np.testing.assert_array_equal(back.coeffs, e.coeffs)
    with pytest.raises(ValueError):
        ChaosExpansion.from_json(sp, {"coeffs": [{"subset": [0]}]})
    with pytest.raises(IndexOutOfRange):
        ChaosExpansion.from_mapping(sp, {(3,): 1.0})


def test_krawtchouk_examples():
    t = krawtchouk_check(new_space(0, 0.5), 1)
    np.testing.assert_allclose(t.values, [-1.0, 1.0])
    sp = new_space(3, 0.3)
    t = krawtchouk_check(sp, 1)
    S = s_rv(sp, sp.N)
    expected = (S - (sp.N + 1) * 0.3) / math.sqrt(0.3 * 0.7)
    np.testing.assert_allclose(t.variable.values, expected.values, atol=1e-13)
    t = krawtchouk_check(sp, sp.N + 2)
    assert np.all(t.variable.values == 0.0) and t.degree == -1
    with pytest.raises(NonConstantP):
        krawtchouk_check(new_space(1, [0.3, 0.4]), 1)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.65])
def test_krawtchouk_measurability_and_degree(p):
    for N in range(0, 7):
        sp = new_space(N, p)
        for n in range(1, N + 2):
            t = krawtchouk_check(sp, n)
            assert t.s_measurable
            assert t.degree == n
