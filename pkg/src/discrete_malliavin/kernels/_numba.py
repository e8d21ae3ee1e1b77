"""Numba-compiled kernels; same signatures and semantics as ``_numpy``.

All loops are sequential so reductions run in ascending outcome order.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def walsh_forward(values, p, q, s):
    out = values.astype(np.float64)
    size = out.shape[0]
    for k in range(p.shape[0]):
        step = 1 << k
        pk = p[k]
        qk = q[k]
        sk = s[k]
        for base in range(0, size, 2 * step):
            for j in range(base, base + step):
                lo = out[j]
                hi = out[j + step]
                out[j] = qk * lo + pk * hi
                out[j + step] = sk * (hi - lo)
    return out


@njit(cache=True)
def walsh_inverse(coeffs, y_minus, y_plus):
    out = coeffs.astype(np.float64)
    size = out.shape[0]
    for k in range(y_minus.shape[0]):
        step = 1 << k
        ym = y_minus[k]
        yp = y_plus[k]
        for base in range(0, size, 2 * step):
            for j in range(base, base + step):
                a0 = out[j]
                a1 = out[j + step]
                out[j] = a0 + a1 * ym
                out[j + step] = a0 + a1 * yp
    return out


@njit(cache=True)
def _weighted_sum(values, weights):
    acc = 0.0
    for i in range(values.shape[0]):
        acc += values[i] * weights[i]
    return acc


def weighted_sum(values, weights):
    return float(_weighted_sum(values, weights))


@njit(cache=True)
def marginalize_high(values, p, q, keep_bits):
    v = values.astype(np.float64)
    size = v.shape[0]
    for k in range(p.shape[0] - 1, keep_bits - 1, -1):
        half = 1 << k
        pk = p[k]
        qk = q[k]
        for j in range(half):
            v[j] = qk * v[j] + pk * v[j + half]
        size = half
    return v[:size].copy()


@njit(cache=True)
def finite_difference(values, k, scale):
    size = values.shape[0]
    out = np.empty(size)
    step = 1 << k
    for base in range(0, size, 2 * step):
        for j in range(base, base + step):
            d = scale * (values[j + step] - values[j])
            out[j] = d
            out[j + step] = d
    return out


@njit(cache=True)
def _independent_of_bits_from(values, k, atol):
    width = 1 << k
    for i in range(width, values.shape[0]):
        if abs(values[i] - values[i % width]) > atol:
            return False
    return True


def independent_of_bits_from(values, k, atol):
    return bool(_independent_of_bits_from(values, k, atol))


@njit(cache=True)
def kernel_apply(values, probs, ytab, decay):
    n = ytab.shape[0]
    size = values.shape[0]
    out = np.empty(size)
    for w in range(size):
        acc = 0.0
        for o in range(size):
            dens = 1.0
            for i in range(n):
                dens *= 1.0 + decay * ytab[i, o] * ytab[i, w]
            acc += values[o] * probs[o] * dens
        out[w] = acc
    return out
