import numpy as np

from sfcorr.sampler import haar_unitary


def random_unitary(d, rng):
    return haar_unitary(d, rng)


def random_hermitian(d, rng, unit_norm=True):
    """GUE-style Hermitian matrix, scaled to unit spectral norm."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (z + z.conj().T) / 2
    return h / np.linalg.norm(h, 2) if unit_norm else h


def random_axis(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_state(d, rng):
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)
