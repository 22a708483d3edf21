"""Dense complex linear algebra for small operators and pure states.

Matrices and states are plain complex ``numpy`` arrays. The ``check_*``
helpers validate them at API boundaries and return the array unchanged
(as ``complex128``), so validated values flow through the rest of the
library without wrapper classes.
"""

import json
import math

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NotHermitian,
    NotNormalized,
    NotUnitary,
    ParseError,
)

TAU_NORM = 1e-12
TAU_CLAMP = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def tau_unitary(d):
    return 1e-10 * d


def tau_hermitian(d):
    return 1e-12 * d


def check_matrix(a):
    """Return ``a`` as a finite square complex128 array or raise."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def unitarity_residual(u):
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def hermiticity_residual(h):
    h = np.asarray(h)
    return float(np.linalg.norm(h - h.conj().T))


def check_unitary(u):
    u = check_matrix(u)
    res = unitarity_residual(u)
    if res > tau_unitary(u.shape[0]):
        raise NotUnitary(f"unitarity residual {res:.3e} exceeds {tau_unitary(u.shape[0]):.1e}")
    return u


def check_hermitian(h):
    h = check_matrix(h)
    res = hermiticity_residual(h)
    if res > tau_hermitian(h.shape[0]):
        raise NotHermitian(f"hermiticity residual {res:.3e} exceeds {tau_hermitian(h.shape[0]):.1e}")
    return h


def check_state(psi):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] < 1:
        raise DimensionMismatch(f"expected a state vector, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("state has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > TAU_NORM:
        raise NotNormalized(f"state norm {norm!r} differs from 1 by more than {TAU_NORM}")
    return psi


def _same_dim(a, b):
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dimension {a.shape[0]} != {b.shape[0]}")


def identity(d):
    return np.eye(d, dtype=complex)


def basis_state(d, k=0):
    psi = np.zeros(d, dtype=complex)
    psi[k] = 1.0
    return psi


def matmul(a, b):
    a = check_matrix(a)
    b = check_matrix(b)
    _same_dim(a, b)
    return a @ b


def trace(a):
    return complex(np.trace(a))


def adjoint(a):
    return np.asarray(a).conj().T


def herm_eig(h):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    evals : ndarray
        Real eigenvalues in ascending order.
    evecs : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    h = check_hermitian(h)
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return evals, evecs


def evolve(h, t):
    """Unitary propagator ``exp(-i h t)`` built from the eigendecomposition of ``h``."""
    evals, evecs = herm_eig(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def _clamp_unit(x):
    if x > 1.0:
        if x - 1.0 > TAU_CLAMP:
            raise ValueError(f"fidelity {x!r} overshoots 1; inputs not unitary/normalized")
        return 1.0
    if x < 0.0:
        return 0.0
    return x


def self_fidelity(u, psi):
    """Survival probability ``|<psi|u|psi>|^2`` of ``psi`` under ``u``."""
    u = np.asarray(u, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if u.shape[0] != psi.shape[0]:
        raise DimensionMismatch(f"operator dimension {u.shape[0]} != state dimension {psi.shape[0]}")
    amp = np.vdot(psi, u @ psi)
    return _clamp_unit(float(amp.real**2 + amp.imag**2))


def self_fidelities(u, states):
    """Vectorised :func:`self_fidelity` over the rows of ``states`` (shape ``(n, d)``)."""
    u = np.asarray(u, dtype=complex)
    states = np.asarray(states, dtype=complex)
    if u.shape[0] != states.shape[-1]:
        raise DimensionMismatch(f"operator dimension {u.shape[0]} != state dimension {states.shape[-1]}")
    amps = np.einsum("ni,ni->n", states.conj(), states @ u.T)
    x = amps.real**2 + amps.imag**2
    if x.size and x.max() - 1.0 > TAU_CLAMP:
        raise ValueError("fidelity overshoots 1; inputs not unitary/normalized")
    return np.clip(x, 0.0, 1.0)


# JSON wire format: {"dim": d, "data": [[re, im], ...]}, row-major for matrices.

def _decode_entries(obj, expected_len):
    if not isinstance(obj, dict) or "dim" not in obj or "data" not in obj:
        raise ParseError('expected an object with "dim" and "data"')
    d = obj["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError(f"invalid dim {d!r}")
    data = obj["data"]
    n = expected_len(d)
    if not isinstance(data, list) or len(data) != n:
        got = len(data) if isinstance(data, list) else type(data).__name__
        raise ParseError(f"expected {n} entries for dim {d}, got {got}")
    out = np.empty(n, dtype=complex)
    for i, pair in enumerate(data):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)):
            raise ParseError(f"entry {i} is not a [re, im] pair")
        re, im = float(pair[0]), float(pair[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ParseError(f"entry {i} is not finite")
        out[i] = complex(re, im)
    return d, out


def _loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def matrix_from_json(text):
    d, flat = _decode_entries(_loads(text), lambda d: d * d)
    return flat.reshape(d, d)


def state_from_json(text):
    return _decode_entries(_loads(text), lambda d: d)[1]


def _encode(flat, d):
    return {"dim": int(d), "data": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_to_json(a):
    a = check_matrix(a)
    return json.dumps(_encode(a.ravel(), a.shape[0]))


def state_to_json(psi):
    psi = np.asarray(psi, dtype=complex)
    return json.dumps(_encode(psi, psi.shape[0]))
