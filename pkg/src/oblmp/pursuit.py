"""Greedy oblique matching pursuit over a dictionary of reconstruction atoms.

Each step keeps, for every unselected atom, the residual candidate gamma_l:
the background-subtracted atom orthogonalized against the directions already
selected.  The next atom maximizes |<gamma_l, f>| / ||gamma_l||^2, which is
exactly the absolute value of the coefficient the new dual would receive, and
equals the consistency error the new measurement would reveal.  Selection
stops when that value drops below a tolerance relative to its first-step
maximum, when the candidates are exhausted, or at an iteration cap.

With an empty background the whole construction reduces to optimized
orthogonal matching pursuit (OOMP): duals and coefficients follow the same
recursions, and the projector becomes orthogonal.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError
from .oblique import (
    BackgroundModel,
    DualSet,
    extend_duals,
    init_dual,
    subtract_background,
)

STOP_TOLERANCE = "tolerance_reached"
STOP_MAX_ITERS = "max_iters"
STOP_EXHAUSTED = "dictionary_exhausted"

# Relative floor below which |<gamma, f>| is considered pure roundoff.
VALUE_ZERO_RTOL = 1e-12

# Selection values within this relative window of the maximum count as tied;
# exact-equality ties do not survive file round-trips or reorthogonalization
# jitter, so the smallest-index rule operates on a tolerance band.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PursuitConfig:
    """Tuning knobs for a pursuit run.

    delta : stopping tolerance on the selection functional, relative to its
        value at the first step (so rescaling the signal does not change the
        iteration count).
    max_iters : iteration cap; defaults to (and is clamped at) the
        dictionary size.
    gamma_zero_tol : candidate exclusion threshold, relative to the largest
        background-subtracted atom norm.
    tie_break : only "smallest_index" is defined; selection values within a
        relative 1e-12 band of the maximum count as tied and go to the
        lowest atom index.
    check_propositions : record per-step invariant diagnostics (candidate
        duals orthogonal to selected atoms; full column rank of selected
        atoms against the background basis).
    """

    delta: float = 1e-8
    max_iters: int | None = None
    gamma_zero_tol: float = 1e-10
    tie_break: str = "smallest_index"
    check_propositions: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.gamma_zero_tol <= 0:
            raise ValueError("gamma_zero_tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tie_break != "smallest_index":
            raise ValueError(f"unknown tie_break rule: {self.tie_break!r}")


@dataclass
class PursuitState:
    """Mutable per-run state: duals so far plus the residual candidates."""

    duals: DualSet | None
    coeffs: np.ndarray
    gammas: np.ndarray          # one column per atom; live while remaining
    remaining: np.ndarray       # bool mask over atom indices
    gamma_zero_tol: float       # absolute exclusion threshold

    @property
    def k(self):
        return 0 if self.duals is None else self.duals.k


class Selection(NamedTuple):
    """Outcome of one argmax sweep.

    ``index`` is None when nothing is selectable: either no candidate
    survives the norm threshold (``n_live == 0``, dictionary exhausted) or
    every surviving candidate carries only roundoff-level signal content.
    """

    index: int | None
    value: float
    n_live: int


def select_next(state, f):
    """Pick the remaining candidate maximizing |<gamma_l, f>| / ||gamma_l||^2.

    Candidates with ||gamma_l|| at or below the exclusion threshold are
    skipped; ties go to the smallest index.
    """
    f = np.asarray(f, dtype=float)
    rem_idx = np.flatnonzero(state.remaining)
    if rem_idx.size == 0:
        return Selection(None, 0.0, 0)
    g = state.gammas[:, rem_idx]
    norms = np.linalg.norm(g, axis=0)
    live = norms > state.gamma_zero_tol
    n_live = int(np.count_nonzero(live))
    if n_live == 0:
        return Selection(None, 0.0, 0)

    rem_idx = rem_idx[live]
    g = g[:, live]
    norms = norms[live]
    corr = np.abs(g.conj().T @ f)
    alive = corr > VALUE_ZERO_RTOL * norms * np.linalg.norm(f)
    if not np.any(alive):
        return Selection(None, 0.0, n_live)
    values = np.where(alive, corr / (norms * norms), -np.inf)
    vmax = float(np.max(values))
    best = int(np.flatnonzero(values >= vmax * (1.0 - TIE_RTOL))[0])
    return Selection(int(rem_idx[best]), float(values[best]), n_live)


def update_coefficients(coeffs, w_new_value, ds_before, u_new):
    """Append the new coefficient and correct the previous ones.

    c_new = <w_new, f> is passed in as `w_new_value`; the existing
    coefficients change by c_i <- c_i - c_new <w_i, u_new>.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != ds_before.k:
        raise DimensionMismatchError(
            f"{coeffs.shape[0]} coefficients for {ds_before.k} duals"
        )
    cross = ds_before.w.conj().T @ np.asarray(u_new, dtype=float)
    return np.append(coeffs - w_new_value * cross, w_new_value)


def orthogonalize_candidates(state, q_new):
    """Sweep the new direction out of every remaining candidate.

    Subtracts q_new <q_new, gamma_l>, then runs one full reorthogonalization
    pass against all orthonormal directions collected so far.
    """
    rem = state.remaining
    if not np.any(rem):
        return state
    g = state.gammas[:, rem]
    g = g - q_new[:, None] * (q_new.conj() @ g)[None, :]
    q_all = state.duals.q
    g -= q_all @ (q_all.conj().T @ g)
    state.gammas[:, rem] = g
    return state


@dataclass
class SeparationResult:
    """Outcome of a pursuit run."""

    reconstruction: np.ndarray
    selected_indices: tuple
    coeffs: np.ndarray
    iterations: int
    stop_reason: str
    diagnostics: dict = field(default_factory=dict)


def oblmp(dict_atoms, bg, f, cfg=None):
    """Separate the dictionary-representable component of `f` from the
    background subspace.

    Runs the greedy selection loop until the functional falls below the
    relative tolerance, the iteration cap is hit, or no usable candidate
    remains.  The returned reconstruction is sum_i coeffs[i] * v_{l_i} and
    satisfies the consistency property <w_i, f - reconstruction> = 0 for
    every selected dual.

    Parameters
    ----------
    dict_atoms : ndarray, shape (dim, n_atoms)
        Candidate reconstruction atoms, one per column.
    bg : BackgroundModel
        Orthonormal basis of the subspace to annihilate (may be empty).
    f : ndarray, shape (dim,)
        Signal to separate.
    cfg : PursuitConfig, optional
    """
    atoms = np.asarray(dict_atoms, dtype=float)
    if atoms.ndim != 2 or atoms.shape[1] == 0:
        raise ValueError("dictionary must contain at least one atom")
    f = np.asarray(f, dtype=float)
    if f.shape[0] != atoms.shape[0]:
        raise DimensionMismatchError(
            f"signal dim {f.shape[0]} vs atom dim {atoms.shape[0]}"
        )
    if cfg is None:
        cfg = PursuitConfig()
    n_atoms = atoms.shape[1]
    max_iters = n_atoms if cfg.max_iters is None else min(cfg.max_iters, n_atoms)

    u = subtract_background(atoms, bg)
    u_norm_max = float(np.max(np.linalg.norm(u, axis=0)))
    gamma_zero_abs = cfg.gamma_zero_tol * u_norm_max

    state = PursuitState(
        duals=None,
        coeffs=np.zeros(0),
        gammas=u.copy(),
        remaining=np.ones(n_atoms, dtype=bool),
        gamma_zero_tol=gamma_zero_abs,
    )

    step_values = []
    delta_abs = None
    final_max_value = 0.0
    prop2_max = 0.0
    check = cfg.check_propositions

    while True:
        if state.k >= max_iters:
            stop_reason = STOP_MAX_ITERS
            break
        if check and state.k > 0:
            prop2_max = max(prop2_max, _candidate_orthogonality(state, atoms))
        sel = select_next(state, f)
        if sel.index is None:
            stop_reason = STOP_EXHAUSTED if sel.n_live == 0 else STOP_TOLERANCE
            break
        final_max_value = sel.value
        if delta_abs is None:
            delta_abs = cfg.delta * sel.value
        elif sel.value < delta_abs:
            stop_reason = STOP_TOLERANCE
            break

        u_new = u[:, sel.index]
        if state.duals is None:
            state.duals = init_dual(u_new, sel.index)
            state.coeffs = np.array([float(np.vdot(state.duals.w[:, 0], f))])
        else:
            ds_before = state.duals
            state.duals = extend_duals(
                ds_before, u_new, index=sel.index, dep_tol=gamma_zero_abs
            )
            c_new = float(np.vdot(state.duals.w[:, -1], f))
            state.coeffs = update_coefficients(state.coeffs, c_new, ds_before, u_new)
        state.remaining[sel.index] = False
        orthogonalize_candidates(state, state.duals.q[:, -1])
        step_values.append(sel.value)

    if state.duals is None:
        selected = ()
        coeffs = np.zeros(0)
        reconstruction = np.zeros_like(f)
    else:
        selected = state.duals.selected_indices
        coeffs = state.coeffs
        reconstruction = atoms[:, list(selected)] @ coeffs

    diagnostics = {
        "first_step_value": step_values[0] if step_values else 0.0,
        "final_max_value": final_max_value,
        "step_values": step_values,
        "delta_abs": delta_abs if delta_abs is not None else 0.0,
        "gamma_zero_tol": gamma_zero_abs,
    }
    if check:
        diagnostics["prop2_max_overlap"] = prop2_max
        diagnostics["prop3_sv_ratio"] = _selected_rank_margin(atoms, selected, bg)

    return SeparationResult(
        reconstruction=reconstruction,
        selected_indices=selected,
        coeffs=coeffs,
        iterations=len(selected),
        stop_reason=stop_reason,
        diagnostics=diagnostics,
    )


def oomp(dict_atoms, f, cfg=None):
    """Optimized orthogonal matching pursuit: pursuit with no background.

    The reconstruction equals the orthogonal projection of `f` onto the span
    of the selected atoms.
    """
    atoms = np.asarray(dict_atoms, dtype=float)
    return oblmp(atoms, BackgroundModel.empty(atoms.shape[0]), f, cfg)


def _candidate_orthogonality(state, atoms):
    """Max normalized |<gamma_l, v_sel>| over live candidates and selections."""
    rem_idx = np.flatnonzero(state.remaining)
    if rem_idx.size == 0:
        return 0.0
    g = state.gammas[:, rem_idx]
    gnorms = np.linalg.norm(g, axis=0)
    live = gnorms > state.gamma_zero_tol
    if not np.any(live):
        return 0.0
    g = g[:, live]
    gnorms = gnorms[live]
    v = atoms[:, list(state.duals.selected_indices)]
    vnorms = np.linalg.norm(v, axis=0)
    overlap = np.abs(g.conj().T @ v) / np.outer(gnorms, vnorms)
    return float(np.max(overlap))


def _selected_rank_margin(atoms, selected, bg):
    """Smallest/largest singular value of [V_sel | Psi]."""
    blocks = []
    if selected:
        blocks.append(atoms[:, list(selected)])
    if bg.size > 0:
        blocks.append(bg.basis.vectors)
    if not blocks:
        return 1.0
    sv = np.linalg.svd(np.column_stack(blocks), compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
