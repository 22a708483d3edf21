"""Symmetric-group sums for pure-state Haar moments.

For ``k`` operators ``A_0 .. A_{k-1}`` acting on ``C^d`` the average over
Haar-random pure states of ``<psi|A_0|psi> ... <psi|A_{k-1}|psi>`` equals

    sum_{pi in S_k} Tr((A_0 x ... x A_{k-1}) V_d(pi)) / (d (d+1) ... (d+k-1))

where ``V_d(pi)`` permutes tensor factors. Each term factorises over the
cycles of ``pi`` into traces of operator words, so nothing of size ``d**k``
is ever formed.

.. warning::
   The uniform ``1/rising-factorial`` weight is specific to this
   pure-state contraction (the symmetric projector). It is *not* a general
   Haar unitary moment ``E[U^{xk} O U^{dag xk}]``; that needs Weingarten
   weights, which this module does not implement.

Permutations use 0-based labels: ``images[i] == pi(i)``.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import DimensionMismatch, OutOfRange

MAX_K = 8


@dataclass(frozen=True)
class Permutation:
    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))) or not images:
            raise ValueError(f"{self.images!r} is not a bijection on 0..k-1")
        object.__setattr__(self, "images", images)

    @property
    def k(self):
        return len(self.images)

    @classmethod
    def identity(cls, k):
        return cls(tuple(range(k)))

    @classmethod
    def from_cycles(cls, k, cycles):
        images = list(range(k))
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a] = b
        return cls(tuple(images))

    def __call__(self, i):
        return self.images[i]

    def inverse(self):
        inv = [0] * self.k
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def compose(self, other):
        """``(self o other)(i) == self(other(i))``."""
        return Permutation(tuple(self.images[j] for j in other.images))

    def cycles(self):
        return cycle_decompose(self)

    def __str__(self):
        return "".join("(" + " ".join(str(i) for i in c) + ")" for c in cycle_decompose(self))


def cycle_decompose(p):
    """Disjoint cycles of ``p``, each listed as ``(l, p(l), p(p(l)), ...)``.

    Every cycle starts at its smallest element and cycles are ordered by
    that element; fixed points appear as 1-cycles.
    """
    seen = [False] * p.k
    cycles = []
    for start in range(p.k):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = p.images[i]
        cycles.append(tuple(cyc))
    return cycles


def _check_k(k):
    if not isinstance(k, (int, np.integer)) or k < 1 or k > MAX_K:
        raise OutOfRange(f"k must be in 1..{MAX_K}, got {k!r}")


@lru_cache(maxsize=None)
def _sk(k):
    return tuple(Permutation(p) for p in itertools.permutations(range(k)))


def enumerate_sk(k):
    """All ``k!`` permutations of ``0..k-1`` in lexicographic order of images."""
    _check_k(k)
    return list(_sk(k))


@lru_cache(maxsize=None)
def _words(p):
    # For Tr((A_0 x ... x A_{k-1}) V_d(p)) the operator word of a cycle
    # through l is A_l A_{p^-1(l)} A_{p^-2(l)} ..., i.e. the cycle walked
    # backwards. Checked against the explicit d**k permutation matrix.
    inv = p.inverse().images
    words = []
    for cyc in cycle_decompose(p):
        l = cyc[0]
        word = [l]
        j = inv[l]
        while j != l:
            word.append(j)
            j = inv[j]
        words.append(tuple(word))
    return tuple(words)


def _word_trace(ops, word):
    if len(word) == 1:
        return np.trace(ops[word[0]])
    return np.trace(reduce(np.matmul, (ops[i] for i in word)))


def _check_ops(ops, k=None):
    ops = [np.asarray(a, dtype=complex) for a in ops]
    if not ops:
        raise DimensionMismatch("need at least one operator")
    d = ops[0].shape[0]
    for a in ops:
        if a.ndim != 2 or a.shape != (d, d):
            raise DimensionMismatch(f"operators must all be {d}x{d}, got {a.shape}")
    if k is not None and len(ops) != k:
        raise DimensionMismatch(f"{len(ops)} operators for a permutation of {k} points")
    return ops, d


def perm_trace(ops, p):
    """``Tr((A_0 x ... x A_{k-1}) V_d(p))`` as a product of cycle-word traces."""
    ops, _ = _check_ops(ops, p.k)
    out = 1.0 + 0.0j
    for word in _words(p):
        out *= _word_trace(ops, word)
    return complex(out)


def rising_factorial(d, k):
    return math.prod(range(d, d + k))


def moment_contraction(ops, d=None):
    """Haar pure-state average of ``prod_m <psi|A_m|psi>``.

    Parameters
    ----------
    ops : sequence of (d, d) arrays
        The operators ``A_0 .. A_{k-1}``, ``1 <= k <= 8``.
    d : int, optional
        Expected dimension; checked against the operators when given.

    Returns
    -------
    complex
        Real (to rounding) whenever the product of expectation values is
        real for every state, e.g. for ``(U^dag, U)`` pairs.
    """
    ops, dim = _check_ops(ops)
    if d is not None and d != dim:
        raise DimensionMismatch(f"operators are {dim}x{dim}, expected d={d}")
    k = len(ops)
    _check_k(k)
    # The sum runs over all of S_k, so V(pi) versus V(pi)^dag = V(pi^-1)
    # only reorders the terms.
    total = 0.0 + 0.0j
    for p in _sk(k):
        term = 1.0 + 0.0j
        for word in _words(p):
            term *= _word_trace(ops, word)
        total += term
    return complex(total / rising_factorial(dim, k))
