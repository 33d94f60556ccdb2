"""Generators for the spline-dictionary test setup.

Builds sampled cubic B-spline dictionaries on a uniform grid (the plain
basis, and a coherent variant with doubled support translated on the original
knot stride), the slowly-decaying power-law background family, and seeded
random test signals.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling grid on [a, b] with n_points samples."""

    a: float
    b: float
    n_points: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("grid requires b > a")
        if self.n_points < 2:
            raise ValueError("grid requires at least 2 points")

    @property
    def step(self):
        return (self.b - self.a) / (self.n_points - 1)

    def points(self):
        return np.linspace(self.a, self.b, self.n_points)


@dataclass(frozen=True)
class SplineSpec:
    """Knot geometry for a B-spline dictionary.

    ``support_scale`` 1 gives the basis (atoms on consecutive knots);
    2 gives atoms of twice the support, translated with the original
    knot stride, hence strongly overlapping neighbors.

    ``min_overlap_steps`` drops translates whose support overlaps the
    interval by less than that many knot steps; hard-truncated boundary
    translates degenerate into near-duplicate slivers.
    """

    knot_step: float
    degree: int = 3
    support_scale: int = 1
    min_overlap_steps: float = 0.0

    def __post_init__(self):
        if self.knot_step <= 0:
            raise ValueError("knot_step must be positive")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if self.support_scale not in (1, 2):
            raise ValueError("support_scale must be 1 or 2")
        if not 0 <= self.min_overlap_steps <= (self.degree + 1) * self.support_scale:
            raise ValueError("min_overlap_steps cannot exceed the support width")


def bspline_value(x, knots, i, degree):
    """Cox-de Boor recursion: i-th B-spline of `degree` on `knots` at x.

    Degree-zero pieces use half-open intervals [t_i, t_{i+1}).
    """
    x = np.asarray(x, dtype=float)
    if degree == 0:
        return np.where((knots[i] <= x) & (x < knots[i + 1]), 1.0, 0.0)
    out = np.zeros_like(x)
    left_den = knots[i + degree] - knots[i]
    if left_den > 0:
        out += (x - knots[i]) / left_den * bspline_value(x, knots, i, degree - 1)
    right_den = knots[i + degree + 1] - knots[i + 1]
    if right_den > 0:
        out += (knots[i + degree + 1] - x) / right_den * bspline_value(
            x, knots, i + 1, degree - 1
        )
    return out


@dataclass(frozen=True)
class Dictionary:
    """Ordered collection of sampled atoms (one per column) on a grid."""

    atoms: np.ndarray
    grid: GridSpec
    kind: str = "generic"
    meta: dict = field(default_factory=dict)

    @property
    def n_atoms(self):
        return self.atoms.shape[1]

    @property
    def dim(self):
        return self.atoms.shape[0]

    def coherence(self):
        """max_{i != j} |<a_i, a_j>| / (||a_i|| ||a_j||)."""
        a = self.atoms
        norms = np.linalg.norm(a, axis=0)
        g = np.abs(a.T @ a) / np.outer(norms, norms)
        np.fill_diagonal(g, 0.0)
        return float(np.max(g))


def bspline_dictionary(grid, spec):
    """Sampled B-spline atoms covering [a, b].

    Every atom is a degree-`spec.degree` B-spline with knot spacing
    ``knot_step * support_scale``, translated with stride ``knot_step``;
    atoms whose support does not meet (a, b) are dropped, and the grid
    truncates boundary atoms' tails.  For support_scale=1 on J = ceil((b-a)/
    knot_step) knot intervals this is the basis with J + degree atoms.
    """
    h = spec.knot_step
    span = h * spec.support_scale
    if span >= (grid.b - grid.a):
        raise ValueError("knot spacing must be smaller than the interval")

    x = grid.points()
    n_intervals = int(np.ceil((grid.b - grid.a) / h - 1e-9))
    i_min = -((spec.degree + 1) * spec.support_scale - 1)
    width = (spec.degree + 1) * span
    min_overlap = max(spec.min_overlap_steps * h, 1e-12 * h)
    local_knots = span * np.arange(spec.degree + 2)
    cols = []
    starts = []
    for i in range(i_min, n_intervals):
        start = grid.a + i * h
        overlap = min(start + width, grid.b) - max(start, grid.a)
        if overlap + 1e-12 * h < min_overlap:
            continue
        cols.append(bspline_value(x - start, local_knots, 0, spec.degree))
        starts.append(start)
    if not cols:
        raise ValueError("no translate meets the overlap requirement")

    return Dictionary(
        atoms=np.column_stack(cols),
        grid=grid,
        kind="bspline" if spec.support_scale == 1 else "bspline2x",
        meta={
            "knot_step": h,
            "degree": spec.degree,
            "support_scale": spec.support_scale,
            "n_intervals": n_intervals,
            "atom_starts": tuple(starts),
        },
    )


def background_family(grid, n=50, exponent_step=0.05):
    """Power-law family (x + 1)^(-exponent_step * i), i = 1..n, sampled on
    the grid.  Highly redundant: its numerical span is only a handful of
    dimensions."""
    if n < 1:
        raise ValueError("need at least one background function")
    x = grid.points()
    exponents = -exponent_step * np.arange(1, n + 1)
    return np.power.outer(x + 1.0, exponents)


class SparseSignal(NamedTuple):
    """A generated signal together with its ground truth."""

    signal: np.ndarray
    indices: np.ndarray
    coeffs: np.ndarray


def random_sparse_signal(dictionary, n_atoms, rng_seed, min_coeff=0.1,
                         unit_coeffs=False):
    """Random linear combination of `n_atoms` distinct dictionary atoms.

    Coefficients are standard normal, redrawn while |c| < min_coeff so no
    ground-truth atom is vacuous.  Deterministic for a given seed.
    ``unit_coeffs`` is a test hook forcing every coefficient to 1.
    """
    atoms = dictionary.atoms if isinstance(dictionary, Dictionary) else np.asarray(dictionary)
    n_total = atoms.shape[1]
    if n_atoms > n_total:
        raise ValueError(f"cannot pick {n_atoms} atoms from {n_total}")
    rng = np.random.default_rng(rng_seed)
    indices = np.sort(rng.choice(n_total, size=n_atoms, replace=False))
    if unit_coeffs:
        coeffs = np.ones(n_atoms)
    else:
        coeffs = rng.standard_normal(n_atoms)
        while True:
            small = np.abs(coeffs) < min_coeff
            if not small.any():
                break
            coeffs[small] = rng.standard_normal(int(small.sum()))
    return SparseSignal(atoms[:, indices] @ coeffs, indices, coeffs)


def random_background_component(bg_sources, rng_seed, amplitude,
                                reference_norm=1.0):
    """Random combination of the background sources, rescaled to norm
    ``amplitude * reference_norm``."""
    sources = np.asarray(bg_sources, dtype=float)
    if sources.ndim != 2 or sources.shape[1] == 0:
        raise ValueError("need a non-empty set of background sources")
    rng = np.random.default_rng(rng_seed)
    f2 = sources @ rng.standard_normal(sources.shape[1])
    if amplitude == 0.0:
        return np.zeros(sources.shape[0])
    nrm = np.linalg.norm(f2)
    if nrm == 0.0:
        raise ValueError("drew a zero background combination")
    return f2 * (amplitude * reference_norm / nrm)
