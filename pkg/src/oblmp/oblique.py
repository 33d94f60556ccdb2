"""Oblique projectors built from recursively updated dual vectors.

Given a background subspace with orthonormal basis psi_1..psi_m and a set of
selected reconstruction atoms v_1..v_k, the oblique projector that fixes
span{v_i} and annihilates span{psi_i} is E f = sum_i v_i <w_i, f>, where the
duals w_i are biorthogonal to the background-subtracted atoms
u_i = v_i - P v_i.  The duals are maintained recursively: adding u_{k+1}
creates one new dual from the component of u_{k+1} orthogonal to the previous
ones and applies a rank-one correction to all existing duals.

`oracle_duals` / `oracle_oblique_projection` compute the same objects in
closed form through a dense Gram solve; they share no code with the recursion
and exist to cross-check it.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DependentAtomError, DimensionMismatchError, SingularGramError
from .linalg import OrthonormalSet, mgs_orthonormalize

# Gram condition number beyond which the closed-form path refuses to solve.
SINGULAR_COND_LIMIT = 1.0 / np.finfo(float).eps

# Relative threshold for rejecting a new atom as dependent on the selected ones.
DEPENDENT_ATOM_RTOL = 1e-10

# Fault-injection hook for the verification suite: flips the sign of the
# rank-one dual update so the biorthogonality check must fail.
_FAULT_FLIP_UPDATE_SIGN = False


@dataclass(frozen=True)
class BackgroundModel:
    """Orthonormal basis of the background subspace to be annihilated.

    ``source_count`` records how many (possibly dependent) spanning signals
    the basis was distilled from.
    """

    basis: OrthonormalSet
    source_count: int

    def __post_init__(self):
        if self.basis.size > self.source_count:
            raise ValueError("basis cannot be larger than its spanning set")

    @classmethod
    def from_sources(cls, sources, tol=1e-8, max_vectors=None):
        """Redundancy-eliminate a spanning set into a BackgroundModel."""
        sources = np.asarray(sources, dtype=float)
        n = sources.shape[1] if sources.ndim == 2 else 0
        return cls(mgs_orthonormalize(sources, tol=tol, max_vectors=max_vectors), n)

    @classmethod
    def empty(cls, dim):
        """Trivial background; pursuit then degenerates to plain OOMP."""
        return cls(OrthonormalSet(np.zeros((dim, 0))), 0)

    @property
    def size(self):
        return self.basis.size


def subtract_background(dict_atoms, bg):
    """Remove the background component from every atom.

    Returns u_l = v_l - sum_i psi_i <psi_i, v_l>, one column per input atom.
    """
    atoms = np.asarray(dict_atoms, dtype=float)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    psi = bg.basis.vectors
    if psi.shape[1] == 0:
        return atoms.copy()
    if psi.shape[0] != atoms.shape[0]:
        raise DimensionMismatchError(
            f"background dim {psi.shape[0]} vs atom dim {atoms.shape[0]}"
        )
    return atoms - psi @ (psi.conj().T @ atoms)


@dataclass(frozen=True)
class DualSet:
    """Selected atoms' measurement machinery after k greedy steps.

    Immutable value; `extend_duals` returns a new instance.  Columns of `q`
    are an orthonormal basis of span{u_sel}; columns of `w` are the duals,
    biorthogonal to the columns of `u_sel`.
    """

    selected_indices: tuple
    u_sel: np.ndarray
    q: np.ndarray
    w: np.ndarray

    @property
    def k(self):
        return self.u_sel.shape[1]

    @property
    def dim(self):
        return self.u_sel.shape[0]


def init_dual(u1, index=0):
    """Start a DualSet from the first background-subtracted atom.

    w_1 = u_1 / ||u_1||^2 so that <w_1, u_1> = 1.
    """
    u1 = np.asarray(u1, dtype=float)
    nrm2 = np.vdot(u1, u1).real
    if nrm2 == 0.0:
        raise DependentAtomError("first atom is zero after background subtraction")
    q1 = u1 / np.sqrt(nrm2)
    w1 = u1 / nrm2
    return DualSet((index,), u1[:, None].copy(), q1[:, None], w1[:, None])


def extend_duals(ds, u_new, index=None, dep_tol=None):
    """Extend a DualSet with one more background-subtracted atom.

    Forms q_{k+1} = u_{k+1} - P u_{k+1} (projection onto span{q_1..q_k},
    with one unconditional reorthogonalization pass), sets
    w_{k+1} = q_{k+1} / ||q_{k+1}||^2, and corrects the previous duals:

        w_i <- w_i - w_{k+1} <u_{k+1}, w_i>,   i = 1..k.

    Raises DependentAtomError when ||q_{k+1}|| falls below `dep_tol`
    (default: 1e-10 times the largest atom norm seen so far).
    """
    u_new = np.asarray(u_new, dtype=float)
    if u_new.shape[0] != ds.dim:
        raise DimensionMismatchError(
            f"atom dim {u_new.shape[0]} vs dual set dim {ds.dim}"
        )
    if index is None:
        index = ds.k

    q_raw = u_new.copy()
    for _ in range(2):  # orthogonalize + one reorthogonalization pass
        q_raw -= ds.q @ (ds.q.conj().T @ q_raw)
    qnorm = float(np.linalg.norm(q_raw))

    if dep_tol is None:
        scale = max(float(np.max(np.linalg.norm(ds.u_sel, axis=0))),
                    float(np.linalg.norm(u_new)))
        dep_tol = DEPENDENT_ATOM_RTOL * scale
    if qnorm <= dep_tol:
        raise DependentAtomError(
            f"atom {index} is numerically dependent on the selected ones "
            f"(residual norm {qnorm:.3e} <= {dep_tol:.3e})"
        )

    w_new = q_raw / (qnorm * qnorm)
    cross = u_new.conj() @ ds.w  # <u_new, w_i> for i = 1..k
    if _FAULT_FLIP_UPDATE_SIGN:
        cross = -cross
    w_updated = ds.w - w_new[:, None] * cross[None, :]

    return DualSet(
        ds.selected_indices + (index,),
        np.column_stack([ds.u_sel, u_new]),
        np.column_stack([ds.q, q_raw / qnorm]),
        np.column_stack([w_updated, w_new]),
    )


def apply_oblique(ds, recon_atoms, f):
    """Apply the oblique projector: sum_i v_i <w_i, f>.

    `recon_atoms` must hold the original reconstruction atoms matching
    ds.selected_indices, one per column.
    """
    recon_atoms = np.asarray(recon_atoms, dtype=float)
    if recon_atoms.ndim == 1:
        recon_atoms = recon_atoms[:, None]
    if recon_atoms.shape[1] != ds.k:
        raise DimensionMismatchError(
            f"{recon_atoms.shape[1]} reconstruction atoms for {ds.k} duals"
        )
    f = np.asarray(f, dtype=float)
    return recon_atoms @ (ds.w.conj().T @ f)


class OracleProjection(NamedTuple):
    projection: np.ndarray
    gram_condition: float


def _gram_condition(gram):
    try:
        return float(np.linalg.cond(gram))
    except np.linalg.LinAlgError:
        return float("inf")


def oracle_duals(u_sel):
    """Closed-form duals U (U^H U)^{-1}, via a pivoted dense solve.

    Independent of the recursive path; used to verify it.  Raises
    SingularGramError (with the condition estimate) when the Gram matrix is
    numerically singular.
    """
    u_sel = np.asarray(u_sel, dtype=float)
    gram = u_sel.conj().T @ u_sel
    cond = _gram_condition(gram)
    if not np.isfinite(cond) or cond > SINGULAR_COND_LIMIT:
        raise SingularGramError(
            f"Gram matrix numerically singular (cond ~ {cond:.3e})", cond
        )
    try:
        # W = U G^{-1}; G is Hermitian so solve against U^H and flip back.
        return np.linalg.solve(gram, u_sel.conj().T).conj().T
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(f"Gram solve failed: {exc}", cond) from exc


def oracle_oblique_projection(recon_atoms, bg, f):
    """Closed-form oblique projection V (U^H U)^{-1} U^H f.

    U holds the background-subtracted atoms.  Returns the projection along
    with the Gram condition number; raises SingularGramError when the
    selected atoms collapse onto the background.
    """
    recon_atoms = np.asarray(recon_atoms, dtype=float)
    if recon_atoms.ndim == 1:
        recon_atoms = recon_atoms[:, None]
    f = np.asarray(f, dtype=float)
    u = subtract_background(recon_atoms, bg)
    gram = u.conj().T @ u
    cond = _gram_condition(gram)
    if not np.isfinite(cond) or cond > SINGULAR_COND_LIMIT:
        raise SingularGramError(
            f"Gram matrix numerically singular (cond ~ {cond:.3e})", cond
        )
    try:
        coeffs = np.linalg.solve(gram, u.conj().T @ f)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(f"Gram solve failed: {exc}", cond) from exc
    return OracleProjection(recon_atoms @ coeffs, cond)
