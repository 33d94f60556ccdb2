import numpy as np
import pytest

from oblmp import BackgroundModel, OrthonormalSet, subtract_background


def random_orthonormal(rng, dim, m):
    """Random orthonormal columns via QR of a Gaussian matrix."""
    if m == 0:
        return np.zeros((dim, 0))
    q, _ = np.linalg.qr(rng.standard_normal((dim, m)))
    return q[:, :m]


def random_instance(rng, dim=None, n_atoms=None, m_bg=None, k=None,
                    max_gram_cond=1e6):
    """Random (atoms, background, signal, k) tuple for property suites.

    Resamples until the background-subtracted Gram of the first k atoms has
    condition below `max_gram_cond`, so recursive/closed-form comparisons
    are meaningful.
    """
    while True:
        d = dim if dim is not None else int(rng.integers(8, 51))
        n = n_atoms if n_atoms is not None else int(rng.integers(4, min(d, 12) + 1))
        kk = k if k is not None else int(rng.integers(1, min(n, 10) + 1))
        mm = m_bg if m_bg is not None else int(rng.integers(0, 4))
        if mm + kk >= d:
            continue
        atoms = rng.standard_normal((d, n))
        bg = BackgroundModel(OrthonormalSet(random_orthonormal(rng, d, mm)), mm)
        u = subtract_background(atoms[:, :kk], bg)
        gram = u.T @ u
        if np.linalg.cond(gram) > max_gram_cond:
            continue
        f = rng.standard_normal(d)
        return atoms, bg, f, kk


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
