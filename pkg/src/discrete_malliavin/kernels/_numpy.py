"""Pure-numpy implementations of the hot kernels.

Bit ``k`` of an outcome index stores ``Z_k = (1 + X_k) / 2``; reshaping a table
of length ``2**n`` to ``(-1, 2, 2**k)`` puts the ``X_k = -1`` half in
``[:, 0, :]`` and the ``X_k = +1`` half in ``[:, 1, :]``.
"""
import numpy as np


def walsh_forward(values, p, q, s):
    out = np.array(values, dtype=np.float64, copy=True)
    for k in range(p.shape[0]):
        v = out.reshape(-1, 2, 1 << k)
        lo = v[:, 0, :].copy()
        hi = v[:, 1, :]
        v[:, 0, :] = q[k] * lo + p[k] * hi
        v[:, 1, :] = s[k] * (hi - lo)
    return out


def walsh_inverse(coeffs, y_minus, y_plus):
    out = np.array(coeffs, dtype=np.float64, copy=True)
    for k in range(y_minus.shape[0]):
        v = out.reshape(-1, 2, 1 << k)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :].copy()
        v[:, 0, :] = a0 + a1 * y_minus[k]
        v[:, 1, :] = a0 + a1 * y_plus[k]
    return out


def weighted_sum(values, weights):
    # cumsum accumulates left to right, i.e. in ascending outcome order
    return float(np.cumsum(values * weights)[-1])


def marginalize_high(values, p, q, keep_bits):
    v = np.asarray(values, dtype=np.float64)
    for k in range(p.shape[0] - 1, keep_bits - 1, -1):
        half = 1 << k
        v = q[k] * v[:half] + p[k] * v[half:]
    return np.array(v, copy=True)


def finite_difference(values, k, scale):
    v = np.asarray(values, dtype=np.float64).reshape(-1, 2, 1 << k)
    d = scale * (v[:, 1, :] - v[:, 0, :])
    return np.stack((d, d), axis=1).reshape(-1)


def independent_of_bits_from(values, k, atol):
    rows = np.asarray(values, dtype=np.float64).reshape(-1, 1 << k)
    return bool(np.all(np.abs(rows - rows[0]) <= atol))


def kernel_apply(values, probs, ytab, decay, block=256):
    size = values.shape[0]
    weighted = values * probs
    out = np.empty(size)
    for start in range(0, size, block):
        stop = min(start + block, size)
        dens = np.ones((stop - start, size))
        for i in range(ytab.shape[0]):
            dens *= 1.0 + decay * np.outer(ytab[i, start:stop], ytab[i])
        out[start:stop] = dens @ weighted
    return out
