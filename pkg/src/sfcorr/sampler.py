"""Seeded Haar sampling and Monte Carlo estimation of self-fidelity statistics.

Reproducibility contract: samples are generated in fixed-size chunks, chunk
``c`` draws from a Philox counter-based generator keyed by
``(seed, stream_id)`` with its counter offset by ``c``. A chunk's draws
therefore depend only on ``(seed, stream_id, c)``, and chunk statistics are
merged in a fixed binary tree over chunk indices, so results are
bit-identical for any number of worker threads.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import matcore
from .errors import DegenerateReadout, DimensionMismatch, OutOfRange
from .moments import TAU_VAR, CorrelationReport, Method

DEFAULT_CHUNK = 1 << 16
MIN_SAMPLES = 100
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) <= _MASK64:
                raise OutOfRange(f"{name} must fit in 64 unsigned bits, got {v}")

    def generator(self, chunk=0):
        """Fresh generator for substream ``chunk``; same arguments, same draws."""
        bitgen = np.random.Philox(key=int(self.seed) | (int(self.stream_id) << 64),
                                  counter=[0, 0, int(chunk) & _MASK64, 0])
        return np.random.Generator(bitgen)

    def substream(self, stream_id):
        return RngStream(self.seed, stream_id)


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def haar_states(d, n, rng):
    """``n`` Haar-random pure states of dimension ``d`` as rows of an ``(n, d)`` array."""
    gen = _as_generator(rng)
    z = gen.standard_normal((n, 2 * d)).view(np.complex128)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def haar_state(d, rng):
    if d < 1:
        raise OutOfRange("dimension must be positive")
    return haar_states(d, 1, rng)[0]


def haar_unitary(d, rng):
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    if d < 1:
        raise OutOfRange("dimension must be positive")
    return haar_unitaries(d, 1, rng)[0]


def haar_unitaries(d, n, rng):
    """Stack of ``n`` Haar-random ``d x d`` unitaries, shape ``(n, d, d)``."""
    gen = _as_generator(rng)
    z = gen.standard_normal((n, d, 2 * d)).view(np.complex128)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    # fix the column phases so the distribution is exactly Haar
    return q * (diag / np.abs(diag))[:, None, :]


class EnsembleKind(str, enum.Enum):
    HAAR = "haar"
    USER = "user"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind = EnsembleKind.HAAR
    n_samples: int = 100_000
    states: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = EnsembleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is EnsembleKind.USER:
            if self.states is None or len(self.states) == 0:
                raise ValueError("a user ensemble needs a nonempty list of states")
            states = [matcore.check_state(s) for s in self.states]
            if len({s.shape[0] for s in states}) != 1:
                raise DimensionMismatch("user states must share one dimension")
            states = np.array(states)
            object.__setattr__(self, "states", states)
            object.__setattr__(self, "n_samples", len(states))
        elif int(self.n_samples) < 1:
            raise OutOfRange("n_samples must be positive")

    @classmethod
    def haar(cls, n):
        return cls(EnsembleKind.HAAR, n)

    @classmethod
    def user(cls, states):
        return cls(EnsembleKind.USER, len(states), states)

    @property
    def dim(self):
        return None if self.states is None else self.states.shape[1]


class BivariateMoments:
    """Central co-moment sums ``S[p, q] = sum (x - mx)^p (y - my)^q`` for ``p + q <= 4``.

    Chunks are summarised exactly (two-pass over the chunk) and combined
    with :meth:`merge`, which shifts each side's sums to the pooled mean by
    the binomial expansion. That keeps the fourth-order sums needed for the
    correlation's standard error as stable as the variances.
    """

    ORDER = 4

    def __init__(self, n, mean, sums):
        self.n = n
        self.mean = mean
        self.sums = sums

    @classmethod
    def from_samples(cls, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = x.size
        mean = np.array([x.mean(), y.mean()])
        dx, dy = x - mean[0], y - mean[1]
        px = [np.ones_like(dx), dx]
        py = [np.ones_like(dy), dy]
        for _ in range(2, cls.ORDER + 1):
            px.append(px[-1] * dx)
            py.append(py[-1] * dy)
        sums = np.zeros((cls.ORDER + 1, cls.ORDER + 1))
        for p in range(cls.ORDER + 1):
            for q in range(cls.ORDER + 1 - p):
                sums[p, q] = n if p == q == 0 else float(np.dot(px[p], py[q]))
        sums[1, 0] = sums[0, 1] = 0.0
        return cls(n, mean, sums)

    def _shifted(self, mean):
        sx, sy = self.mean - mean
        out = np.zeros_like(self.sums)
        for p in range(self.ORDER + 1):
            for q in range(self.ORDER + 1 - p):
                acc = 0.0
                for i in range(p + 1):
                    for j in range(q + 1):
                        acc += (math.comb(p, i) * math.comb(q, j) * self.sums[i, j]
                                * sx ** (p - i) * sy ** (q - j))
                out[p, q] = acc
        return out

    def merge(self, other):
        n = self.n + other.n
        mean = (self.n * self.mean + other.n * other.mean) / n
        sums = self._shifted(mean) + other._shifted(mean)
        sums[0, 0] = n
        sums[1, 0] = sums[0, 1] = 0.0
        return BivariateMoments(n, mean, sums)

    @staticmethod
    def merge_tree(parts):
        """Pairwise merge in a fixed tree over the input order."""
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to merge")
        while len(parts) > 1:
            nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
            if len(parts) % 2:
                nxt.append(parts[-1])
            parts = nxt
        return parts[0]

    def central(self, p, q):
        """Population central moment ``E[(x - mx)^p (y - my)^q]``."""
        return self.sums[p, q] / self.n

    @property
    def var_x(self):
        return self.sums[2, 0] / (self.n - 1)

    @property
    def var_y(self):
        return self.sums[0, 2] / (self.n - 1)

    @property
    def cov(self):
        return self.sums[1, 1] / (self.n - 1)

    @property
    def pcc(self):
        return self.sums[1, 1] / math.sqrt(self.sums[2, 0] * self.sums[0, 2])

    def pcc_stderr(self):
        """Delta-method standard error of the sample correlation.

        Uses the variance of the influence function
        ``zx zy - rho (zx^2 + zy^2) / 2`` of standardised variables; an
        asymptotic approximation.
        """
        sx = math.sqrt(self.central(2, 0))
        sy = math.sqrt(self.central(0, 2))
        m = lambda p, q: self.central(p, q) / (sx**p * sy**q)  # noqa: E731
        rho = self.pcc
        v = (m(2, 2) - rho * (m(3, 1) + m(1, 3))
             + 0.25 * rho * rho * (m(4, 0) + 2.0 * m(2, 2) + m(0, 4)))
        return math.sqrt(max(v, 0.0) / self.n)


def _chunk_bounds(n, chunk_size):
    return [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]


def estimate_moments(func, d, ens, rng, chunk_size=DEFAULT_CHUNK, threads=1):
    """Evaluate ``func(states) -> (x, y)`` over the ensemble and merge the moments.

    ``func`` receives an ``(m, d)`` array of states per chunk.
    """
    if ens.kind is EnsembleKind.USER:
        if ens.dim != d:
            raise DimensionMismatch(f"ensemble dimension {ens.dim} != {d}")
        bounds = _chunk_bounds(ens.n_samples, chunk_size)

        def work(c):
            lo, hi = bounds[c]
            return BivariateMoments.from_samples(*func(ens.states[lo:hi]))
    else:
        bounds = _chunk_bounds(int(ens.n_samples), chunk_size)

        def work(c):
            lo, hi = bounds[c]
            return BivariateMoments.from_samples(*func(haar_states(d, hi - lo, rng.generator(c))))

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(bounds))))
    else:
        parts = [work(c) for c in range(len(bounds))]
    return BivariateMoments.merge_tree(parts)


def _check_pair(u1, u2):
    u1 = matcore.check_unitary(u1)
    u2 = matcore.check_unitary(u2)
    if u1.shape != u2.shape:
        raise DimensionMismatch(f"unitaries have shapes {u1.shape} and {u2.shape}")
    return u1, u2


def report_from_moments(mom, method=Method.MONTE_CARLO):
    for j, v in ((1, mom.var_x), (2, mom.var_y)):
        if v < TAU_VAR:
            raise DegenerateReadout(f"empirical variance of readout {j} is {v:.3e}")
    return CorrelationReport(
        mean1=float(mom.mean[0]), mean2=float(mom.mean[1]),
        var1=mom.var_x, var2=mom.var_y, cov=mom.cov, pcc=mom.pcc,
        method=method, stderr_pcc=mom.pcc_stderr(), n_samples=int(mom.n),
        stderr_mean1=math.sqrt(mom.var_x / mom.n),
        stderr_mean2=math.sqrt(mom.var_y / mom.n),
    )


def mc_stats(u1, u2, ens, rng, chunk_size=DEFAULT_CHUNK, threads=1):
    """Monte Carlo estimate of the self-fidelity statistics of ``(u1, u2)``."""
    u1, u2 = _check_pair(u1, u2)
    if ens.n_samples < MIN_SAMPLES:
        raise OutOfRange(f"need at least {MIN_SAMPLES} samples, got {ens.n_samples}")

    def readouts(states):
        return matcore.self_fidelities(u1, states), matcore.self_fidelities(u2, states)

    mom = estimate_moments(readouts, u1.shape[0], ens, rng, chunk_size, threads)
    return report_from_moments(mom)


def _eigvecs(u):
    _, v = np.linalg.eig(u)
    return (v / np.linalg.norm(v, axis=0)).T


class OverlapProbe(NamedTuple):
    max_overlap: float
    witness: np.ndarray
    min_sampled: float


def min_overlap_probe(u1, u2, n, rng, chunk_size=DEFAULT_CHUNK):
    """Search for states on which ``U1 psi`` and ``U2 psi`` fail to be orthogonal.

    Reports the largest ``|<psi|U2^dag U1|psi>|`` over ``n`` Haar samples
    and the eigenvectors of ``U2^dag U1`` (where it reaches ``1``), with the
    maximising state, and the smallest sampled value for reference.
    """
    u1, u2 = _check_pair(u1, u2)
    m = u2.conj().T @ u1
    d = m.shape[0]
    best, witness, low = -1.0, None, math.inf
    for c, (lo, hi) in enumerate(_chunk_bounds(int(n), chunk_size)):
        states = haar_states(d, hi - lo, rng.generator(c))
        ov = np.abs(np.einsum("ni,ni->n", states.conj(), states @ m.T))
        i = int(np.argmax(ov))
        low = min(low, float(ov.min()))
        if ov[i] > best:
            best, witness = float(ov[i]), states[i]
    for v in _eigvecs(m):
        ov = abs(np.vdot(v, m @ v))
        if ov > best:
            best, witness = float(ov), v
    return OverlapProbe(best, witness, low)


def complement_violation(u1, u2, n, rng, chunk_size=DEFAULT_CHUNK):
    """Largest ``|X1 + X2 - 1|`` over ``n`` Haar samples plus eigenstates.

    Besides the samples, the eigenvectors of ``U1``, ``U2`` and
    ``U2^dag U1`` are tried: the first two give ``X_j = 1``, the last
    include states where both readouts can vanish together.
    """
    u1, u2 = _check_pair(u1, u2)
    d = u1.shape[0]
    worst = 0.0
    blocks = [haar_states(d, hi - lo, rng.generator(c))
              for c, (lo, hi) in enumerate(_chunk_bounds(int(n), chunk_size))]
    blocks += [_eigvecs(u1), _eigvecs(u2), _eigvecs(u2.conj().T @ u1)]
    for states in blocks:
        s = matcore.self_fidelities(u1, states) + matcore.self_fidelities(u2, states)
        worst = max(worst, float(np.max(np.abs(s - 1.0))))
    return worst
