"""Inner-product-space primitives.

Signals are represented as 1-d numpy arrays; collections of signals (bases,
dictionaries) as 2-d arrays with one signal per column.  The inner product is
the plain coordinate dot product with conjugation on the FIRST argument, so
that ``inner(c * f, g) == conj(c) * inner(f, g)``.  Everything here works for
real input and stays correct for complex input.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

DEFAULT_MGS_TOL = 1e-8


def inner(f, g):
    """Inner product <f, g>, conjugating the first argument.

    For sampled-function signals this is the unweighted coordinate dot
    product; a grid-step weight would only rescale every selection
    functional and projector by a common positive factor.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise DimensionMismatchError(
            f"inner product of signals with shapes {f.shape} and {g.shape}"
        )
    return np.vdot(f, g)


def norm(f):
    """Euclidean norm sqrt(<f, f>)."""
    return float(np.linalg.norm(f))


def mgs_orthonormalize(vectors, tol=DEFAULT_MGS_TOL, max_vectors=None):
    """Orthonormal basis of the numerically significant span of `vectors`.

    Modified Gram-Schmidt with one unconditional reorthogonalization pass.
    A candidate is discarded when its residual norm after both passes is
    at most ``tol * max(input column norms)``; this is the redundancy
    elimination used to turn a dependent spanning set into a basis.

    Parameters
    ----------
    vectors : ndarray, shape (dim, n)
        Input signals, one per column.  An empty sequence is allowed.
    tol : float
        Relative discard tolerance (> 0).
    max_vectors : int, optional
        Hard cap on the output size; candidates are processed in input
        order, so the cap keeps the first independent ones.

    Returns
    -------
    OrthonormalSet
        Basis with m <= n columns spanning the kept candidates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        return OrthonormalSet(np.zeros((vectors.shape[0] if vectors.ndim == 2 else 0, 0)), tol)
    if vectors.ndim != 2:
        raise ValueError("expected a 2-d array with one signal per column")

    dim, n = vectors.shape
    max_norm = float(np.max(np.linalg.norm(vectors, axis=0)))
    if max_norm == 0.0:
        return OrthonormalSet(np.zeros((dim, 0)), tol)
    threshold = tol * max_norm

    kept = []
    for j in range(n):
        if max_vectors is not None and len(kept) >= max_vectors:
            break
        r = vectors[:, j].copy()
        for _ in range(2):  # MGS sweep + one reorthogonalization pass
            for q in kept:
                r -= q * np.vdot(q, r)
        rnorm = np.linalg.norm(r)
        if rnorm > threshold:
            kept.append(r / rnorm)

    if not kept:
        return OrthonormalSet(np.zeros((dim, 0)), tol)
    return OrthonormalSet(np.column_stack(kept), tol)


@dataclass(frozen=True)
class OrthonormalSet:
    """A set of orthonormal signals, stored one per column.

    ``tol_used`` records the discard tolerance the set was built with.
    """

    vectors: np.ndarray
    tol_used: float = DEFAULT_MGS_TOL

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ValueError("vectors must be a 2-d array (dim x m)")
        object.__setattr__(self, "vectors", v)

    @property
    def size(self):
        return self.vectors.shape[1]

    @property
    def dim(self):
        return self.vectors.shape[0]

    def gram_deviation(self):
        """Entrywise max of |V^H V - I|; 0 for an empty set."""
        if self.size == 0:
            return 0.0
        g = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(g - np.eye(self.size))))


def orthogonal_project(basis, f):
    """Orthogonal projection of `f` onto the span of an OrthonormalSet.

    Returns sum_i psi_i <psi_i, f>; the zero signal for an empty basis.
    """
    f = np.asarray(f)
    v = basis.vectors
    if v.shape[1] == 0:
        return np.zeros_like(f)
    if v.shape[0] != f.shape[0]:
        raise DimensionMismatchError(
            f"projection basis has dim {v.shape[0]}, signal has dim {f.shape[0]}"
        )
    return v @ (v.conj().T @ f)
