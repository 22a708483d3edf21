"""Loschmidt-echo regime: Hamiltonian drives ``U_j = exp(-i H_j t)``.

For small ``t`` the self-fidelity is ``1 - t^2 Var_psi(H) + O(t^4)``, so
the correlation of the two survival maps tends to the correlation of the
state-dependent energy variances ``Var_psi(H_1)`` and ``Var_psi(H_2)``.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matcore
from .errors import DegenerateReadout, DimensionMismatch, OutOfRange
from .moments import TAU_VAR, exact_stats
from .permtrace import moment_contraction
from .sampler import DEFAULT_CHUNK, EnsembleKind, estimate_moments, haar_states

SMALL_T = 0.5


@dataclass(frozen=True)
class EchoConfig:
    h1: np.ndarray
    h2: np.ndarray
    times: tuple

    def __post_init__(self):
        h1 = matcore.check_hermitian(self.h1)
        h2 = matcore.check_hermitian(self.h2)
        if h1.shape != h2.shape:
            raise DimensionMismatch(f"Hamiltonians have shapes {h1.shape} and {h2.shape}")
        times = tuple(float(t) for t in self.times)
        if not times or any(t <= 0 for t in times) or list(times) != sorted(set(times)):
            raise OutOfRange("times must be positive, distinct and sorted")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "times", times)

    @property
    def dim(self):
        return self.h1.shape[0]


@dataclass(frozen=True)
class GapRecord:
    t: float
    pcc_exact: float
    pcc_variance_limit: float

    @property
    def gap(self):
        return abs(self.pcc_exact - self.pcc_variance_limit)


@dataclass(frozen=True)
class ShortTimeReport:
    dims: int
    records: tuple

    def to_dict(self):
        return {
            "records": [{"t": r.t, "pcc_exact": r.pcc_exact,
                         "pcc_variance_limit": r.pcc_variance_limit, "gap": r.gap}
                        for r in self.records],
            "dims": self.dims,
        }


class ShortTimeRow(NamedTuple):
    t: float
    x_exact: float
    x_quadratic: float
    residual: float


class RigidityFit(NamedTuple):
    slope: float
    intercept: float
    residual_rms: float
    negative_slope_feasible: bool


def relative_echo(u1, u2, psi):
    """``|<psi|U2^dag U1|psi>|^2``."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    if u1.shape != u2.shape:
        raise DimensionMismatch(f"unitaries have shapes {u1.shape} and {u2.shape}")
    return matcore.self_fidelity(u2.conj().T @ u1, psi)


def _centered(h):
    h = np.asarray(h, dtype=complex)
    return h - (np.trace(h) / h.shape[0]) * np.eye(h.shape[0])


def hamiltonian_variances(h, states):
    """Energy variance ``<H^2> - <H>^2`` for each row of ``states``."""
    h = _centered(h)
    states = np.asarray(states, dtype=complex)
    if states.shape[-1] != h.shape[0]:
        raise DimensionMismatch(f"state dimension {states.shape[-1]} != {h.shape[0]}")
    hpsi = states @ h.T
    mean = np.einsum("ni,ni->n", states.conj(), hpsi).real
    dev = hpsi - mean[:, None] * states
    return np.einsum("ni,ni->n", dev.conj(), dev).real


def hamiltonian_variance(h, psi):
    return float(hamiltonian_variances(h, np.asarray(psi)[None, :])[0])


def short_time_check(h, psi, t_list):
    """Compare the exact survival probability with its quadratic approximation."""
    h = matcore.check_hermitian(h)
    psi = matcore.check_state(psi)
    var = hamiltonian_variance(h, psi)
    hnorm = np.linalg.norm(h, 2)
    rows = []
    for t in t_list:
        if (t * hnorm) ** 2 > 1.0:
            warnings.warn(f"t={t} lies outside the short-time regime (t*|H| > 1)", stacklevel=2)
        x = matcore.self_fidelity(matcore.evolve(h, t), psi)
        xq = 1.0 - t * t * var
        rows.append(ShortTimeRow(t, x, xq, abs(x - xq)))
    return rows


def _check_drives(h1, h2):
    h1 = matcore.check_hermitian(h1)
    h2 = matcore.check_hermitian(h2)
    if h1.shape != h2.shape:
        raise DimensionMismatch(f"Hamiltonians have shapes {h1.shape} and {h2.shape}")
    return h1, h2


def variance_moments(h1, h2, ens, rng, chunk_size=DEFAULT_CHUNK, threads=1):
    """Streaming moments of ``(Var_psi(H1), Var_psi(H2))`` over the ensemble."""
    h1, h2 = _check_drives(h1, h2)

    def readouts(states):
        return hamiltonian_variances(h1, states), hamiltonian_variances(h2, states)

    return estimate_moments(readouts, h1.shape[0], ens, rng, chunk_size, threads)


def _guard(var1, var2):
    for j, v in ((1, var1), (2, var2)):
        if v < TAU_VAR:
            raise DegenerateReadout(f"energy variance of H{j} does not fluctuate ({v:.3e}); trivial drive")


def variance_limit_pcc(h1, h2, ens, rng, chunk_size=DEFAULT_CHUNK, threads=1):
    """Sample correlation of ``Var_psi(H1)`` and ``Var_psi(H2)`` over the ensemble."""
    mom = variance_moments(h1, h2, ens, rng, chunk_size, threads)
    _guard(mom.var_x, mom.var_y)
    return mom.pcc


def variance_limit_pcc_exact(h1, h2):
    """Haar-exact correlation of the energy variances via S_k contractions (k <= 4)."""
    h1, h2 = _check_drives(h1, h2)
    h1, h2 = _centered(h1), _centered(h2)
    d = h1.shape[0]
    m = lambda *ops: moment_contraction(ops, d).real  # noqa: E731

    def mean(h):
        return np.trace(h @ h).real / d - m(h, h)

    def second(a, b):
        a2, b2 = a @ a, b @ b
        return m(a2, b2) - m(a2, b, b) - m(a, a, b2) + m(a, a, b, b)

    e1, e2 = mean(h1), mean(h2)
    var1 = second(h1, h1) - e1 * e1
    var2 = second(h2, h2) - e2 * e2
    _guard(var1, var2)
    cov = second(h1, h2) - e1 * e2
    return cov / math.sqrt(var1 * var2)


def short_time_pcc_gap(cfg, ens=None, rng=None, exact=True, chunk_size=DEFAULT_CHUNK, threads=1):
    """Distance between the finite-``t`` correlation and its ``t -> 0`` limit.

    With ``exact=True`` both sides are Haar averages computed in closed
    form. Otherwise both are Monte Carlo estimates over the same sampled
    states, so their difference is free of independent sampling noise.
    """
    if exact:
        limit = variance_limit_pcc_exact(cfg.h1, cfg.h2)
    else:
        if ens is None or rng is None:
            raise ValueError("Monte Carlo route needs an ensemble and an RngStream")
        limit = variance_limit_pcc(cfg.h1, cfg.h2, ens, rng, chunk_size, threads)
    records = []
    for t in cfg.times:
        u1, u2 = matcore.evolve(cfg.h1, t), matcore.evolve(cfg.h2, t)
        if exact:
            p = exact_stats(u1, u2).pcc
        else:
            def readouts(states, u1=u1, u2=u2):
                return matcore.self_fidelities(u1, states), matcore.self_fidelities(u2, states)

            mom = estimate_moments(readouts, cfg.dim, ens, rng, chunk_size, threads)
            if min(mom.var_x, mom.var_y) < TAU_VAR:
                raise DegenerateReadout(f"self-fidelity does not fluctuate at t={t}")
            p = mom.pcc
        records.append(GapRecord(t, float(p), float(limit)))
    return ShortTimeReport(dims=cfg.dim, records=tuple(records))


def affine_rigidity_fit(h1, h2, ens, rng, chunk_size=DEFAULT_CHUNK):
    """Least-squares fit ``Var_psi(H2) ~ a Var_psi(H1) + b`` over sampled states.

    ``negative_slope_feasible`` is set only for an exact (``rms < 1e-9``)
    fit with ``a < 0``, which nontrivial Hamiltonians never produce.
    """
    h1, h2 = _check_drives(h1, h2)
    d = h1.shape[0]
    if ens.kind is EnsembleKind.USER:
        states = ens.states
    else:
        n = int(ens.n_samples)
        states = np.concatenate([
            haar_states(d, min(chunk_size, n - lo), rng.generator(c))
            for c, lo in enumerate(range(0, n, chunk_size))
        ])
    v1 = hamiltonian_variances(h1, states)
    v2 = hamiltonian_variances(h2, states)
    _guard(float(np.var(v1)), float(np.var(v2)))
    design = np.column_stack([v1, np.ones_like(v1)])
    (a, b), *_ = np.linalg.lstsq(design, v2, rcond=None)
    rms = float(np.sqrt(np.mean((v2 - design @ np.array([a, b])) ** 2)))
    return RigidityFit(float(a), float(b), rms, bool(a < 0 and rms < 1e-9))
