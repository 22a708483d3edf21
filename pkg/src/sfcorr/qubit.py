"""Single-qubit Ramsey model on the Bloch sphere.

A control ``(theta, n)`` is the rotation ``exp(-i theta/2 n.sigma)``. Its
self-fidelity on the pure state with Bloch vector ``r`` is the fringe
``1 - sin^2(theta/2) (1 - (n.r)^2)``: bright caps at ``+-n`` and a dark belt
on the great circle ``n.r = 0``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmall, InvalidAxis, OutOfRange
from .matcore import PAULIS

AXIS_TOL = 1e-12


def _unit(v, what="axis"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidAxis(f"{what} must be a finite 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > AXIS_TOL:
        raise InvalidAxis(f"{what} has norm {np.linalg.norm(v)!r}, expected 1")
    return v


def normalize_axis(v):
    """Scale a nonzero 3-vector to unit length."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
        raise InvalidAxis(f"cannot normalise axis {v!r}")
    return v / norm


@dataclass(frozen=True)
class RamseyControl:
    theta: float
    axis: tuple

    def __post_init__(self):
        theta = float(self.theta)
        if not (AXIS_TOL < theta < 2 * math.pi - AXIS_TOL):
            raise OutOfRange(f"theta must lie in (0, 2pi), got {theta!r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "axis", tuple(_unit(self.axis)))

    @property
    def amplitude(self):
        return math.sin(self.theta / 2) ** 2


@dataclass(frozen=True)
class BlochPoint:
    r: tuple

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(_unit(self.r, "Bloch vector")))

    @classmethod
    def from_angles(cls, polar, azimuth):
        s = math.sin(polar)
        return cls((s * math.cos(azimuth), s * math.sin(azimuth), math.cos(polar)))


def rotation_matrix(theta, axis):
    n = np.asarray(axis, dtype=float)
    ns = n[0] * PAULIS[0] + n[1] * PAULIS[1] + n[2] * PAULIS[2]
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * ns


def rotation(c):
    return rotation_matrix(c.theta, c.axis)


def state_of(p):
    """Pure state ``(cos(a/2), e^{i b} sin(a/2))`` for polar ``a``, azimuth ``b`` of ``p``."""
    x, y, z = p.r if isinstance(p, BlochPoint) else p
    polar = math.acos(max(-1.0, min(1.0, z)))
    azimuth = math.atan2(y, x)
    return np.array([math.cos(polar / 2), np.exp(1j * azimuth) * math.sin(polar / 2)])


def bloch_vector(psi):
    psi = np.asarray(psi)
    rho = np.outer(psi, psi.conj())
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def fringe(c, p):
    nr = float(np.dot(c.axis, p.r))
    return 1.0 - c.amplitude * (1.0 - nr * nr)


def closed_form_pcc(delta):
    """Correlation of two Ramsey fringes whose axes meet at angle ``delta``.

    Independent of both rotation angles; ranges over ``[-1/2, 1]``.
    """
    c = np.cos(delta)
    return (3.0 * c * c - 1.0) / 2.0


def axes_at_angle(delta):
    """Two unit axes in the x-z plane separated by ``delta``."""
    return (0.0, 0.0, 1.0), (math.sin(delta), 0.0, math.cos(delta))


def fringe_grid(c, n_polar, n_azimuth):
    """Fringe on a latitude-longitude grid.

    Rows ``(polar, azimuth, x, y, z, fidelity)``; both poles are included
    and the azimuth seam is duplicated (``0`` and ``2 pi``).
    """
    if n_polar < 2 or n_azimuth < 2:
        raise GridTooSmall("grid needs at least 2 points per direction")
    polar = np.linspace(0.0, math.pi, n_polar)
    azimuth = np.linspace(0.0, 2 * math.pi, n_azimuth)
    pp, aa = np.meshgrid(polar, azimuth, indexing="ij")
    x = np.sin(pp) * np.cos(aa)
    y = np.sin(pp) * np.sin(aa)
    z = np.cos(pp)
    # renormalise so rows are unit vectors to rounding
    norm = np.sqrt(x * x + y * y + z * z)
    x, y, z = x / norm, y / norm, z / norm
    n = c.axis
    nr = n[0] * x + n[1] * y + n[2] * z
    fid = 1.0 - c.amplitude * (1.0 - nr * nr)
    return np.column_stack([pp.ravel(), aa.ravel(), x.ravel(), y.ravel(), z.ravel(), fid.ravel()])


def pcc_sweep(n_points):
    """``(delta, pcc)`` rows for ``delta`` uniformly spanning ``[0, pi]``."""
    if n_points < 2:
        raise GridTooSmall("sweep needs at least 2 points")
    delta = np.linspace(0.0, math.pi, n_points)
    return np.column_stack([delta, closed_form_pcc(delta)])
