"""Reference computations kept independent of the library code paths they check."""

import itertools
from functools import reduce

import mpmath
import numpy as np


def permutation_matrix(images, d):
    """Explicit ``d**k`` matrix of ``V_d(pi) = sum |i_{pi^-1(1)} .. i_{pi^-1(k)}><i_1 .. i_k|``."""
    k = len(images)
    inv = [0] * k
    for i, j in enumerate(images):
        inv[j] = i
    dim = d**k
    v = np.zeros((dim, dim))
    for idx in itertools.product(range(d), repeat=k):
        out = tuple(idx[inv[m]] for m in range(k))
        v[np.ravel_multi_index(out, (d,) * k), np.ravel_multi_index(idx, (d,) * k)] = 1.0
    return v


def dense_perm_trace(ops, images):
    d = ops[0].shape[0]
    big = reduce(np.kron, ops)
    return np.trace(big @ permutation_matrix(images, d))


def naive_matmul(a, b):
    """Triple loop in 50-digit arithmetic."""
    with mpmath.workdps(50):
        d = a.shape[0]
        out = np.empty((d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                acc = mpmath.mpc(0)
                for k in range(d):
                    acc += mpmath.mpc(a[i, k]) * mpmath.mpc(b[k, j])
                out[i, j] = complex(acc)
    return out


def expm_taylor(a, terms=60):
    """Matrix exponential by a scaled Taylor series, no eigendecomposition."""
    s = max(0, int(np.ceil(np.log2(max(np.linalg.norm(a, 1), 1e-300)))) + 1)
    b = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ b / n
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def gaussian_states(d, n, rng):
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def mc_mean_and_sem(values):
    values = np.asarray(values)
    return values.mean(), values.std(ddof=1) / np.sqrt(values.size)
