import numpy as np
import pytest

from oblmp import (
    BackgroundModel,
    DependentAtomError,
    DimensionMismatchError,
    OrthonormalSet,
    SingularGramError,
    apply_oblique,
    extend_duals,
    init_dual,
    oracle_duals,
    oracle_oblique_projection,
    subtract_background,
)

from conftest import random_instance


def diag_background():
    psi = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    return BackgroundModel(OrthonormalSet(psi), 1)


class TestSubtractBackground:
    def test_single_atom(self):
        u = subtract_background(np.eye(3)[:, :1], diag_background())
        assert np.allclose(u[:, 0], [0.5, -0.5, 0.0])

    def test_empty_background_identity(self, rng):
        atoms = rng.standard_normal((5, 3))
        u = subtract_background(atoms, BackgroundModel.empty(5))
        assert np.array_equal(u, atoms)

    def test_atom_inside_background(self):
        u = subtract_background(np.array([[1.0], [1.0], [0.0]]), diag_background())
        assert np.allclose(u, 0.0, atol=1e-14)

    def test_output_orthogonal_to_basis(self, rng):
        for _ in range(50):
            atoms, bg, _, _ = random_instance(rng)
            u = subtract_background(atoms, bg)
            if bg.size:
                overlap = np.abs(bg.basis.vectors.T @ u)
                assert np.max(overlap) <= 1e-10 * max(1.0, np.max(np.abs(u)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            subtract_background(np.zeros((4, 2)), diag_background())


class TestInitDual:
    def test_half_atom(self):
        ds = init_dual(np.array([0.5, -0.5, 0.0]))
        assert np.allclose(ds.w[:, 0], [1.0, -1.0, 0.0])
        assert np.allclose(ds.q[:, 0], [0.70711, -0.70711, 0.0], atol=1e-5)

    def test_unit_atom(self):
        ds = init_dual(np.array([0.0, 0.0, 1.0]))
        assert np.allclose(ds.w[:, 0], [0, 0, 1.0])
        assert np.allclose(ds.q[:, 0], [0, 0, 1.0])

    def test_scaling(self):
        ds = init_dual(np.array([2.0, 0.0]))
        assert np.allclose(ds.w[:, 0], [0.5, 0.0])
        assert np.allclose(ds.q[:, 0], [1.0, 0.0])

    def test_zero_atom_rejected(self):
        with pytest.raises(DependentAtomError):
            init_dual(np.zeros(3))


class TestExtendDuals:
    def test_orthogonal_extension(self):
        ds = init_dual(np.array([0.5, -0.5, 0.0]))
        ds = extend_duals(ds, np.array([0.0, 0.0, 1.0]))
        assert np.allclose(ds.q[:, 1], [0, 0, 1.0])
        assert np.allclose(ds.w[:, 1], [0, 0, 1.0])
        # first dual unchanged: new atom orthogonal to it
        assert np.allclose(ds.w[:, 0], [1.0, -1.0, 0.0])

    def test_dependent_atom_rejected(self):
        ds = init_dual(np.array([1.0, 0.0, 0.0]))
        with pytest.raises(DependentAtomError):
            extend_duals(ds, np.array([1.0, 0.0, 0.0]))

    def test_matches_closed_form(self, rng):
        for _ in range(50):
            atoms, bg, _, k = random_instance(rng, dim=8, k=3)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            w_ref = oracle_duals(u)
            assert np.linalg.norm(ds.w - w_ref) <= 1e-8 * np.linalg.norm(w_ref)

    def test_biorthogonality_invariant(self, rng):
        for _ in range(50):
            atoms, bg, _, k = random_instance(rng)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            assert np.max(np.abs(ds.w.T @ ds.u_sel - np.eye(k))) <= 1e-8
            assert np.max(np.abs(ds.q.T @ ds.q - np.eye(k))) <= 1e-10
            # duals stay inside span{q}
            resid = ds.w - ds.q @ (ds.q.T @ ds.w)
            assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(ds.w)


class TestApplyOblique:
    def test_single_term(self):
        ds = init_dual(np.array([0.5, -0.5, 0.0]))
        out = apply_oblique(ds, np.eye(3)[:, :1], np.array([3.0, 1.0, 4.0]))
        assert np.allclose(out, [2.0, 0.0, 0.0])

    def test_annihilates_background(self, rng):
        for _ in range(30):
            atoms, bg, _, k = random_instance(rng, m_bg=2)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            for i in range(bg.size):
                out = apply_oblique(ds, atoms[:, :k], bg.basis.vectors[:, i])
                assert np.linalg.norm(out) <= 1e-8

    def test_fixes_selected_atoms(self, rng):
        for _ in range(30):
            atoms, bg, _, k = random_instance(rng)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            for j in range(k):
                v = atoms[:, j]
                out = apply_oblique(ds, atoms[:, :k], v)
                assert np.linalg.norm(out - v) <= 1e-8 * np.linalg.norm(v)

    def test_idempotent_and_consistent(self, rng):
        for _ in range(30):
            atoms, bg, f, k = random_instance(rng)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            ef = apply_oblique(ds, atoms[:, :k], f)
            eef = apply_oblique(ds, atoms[:, :k], ef)
            assert np.linalg.norm(eef - ef) <= 1e-8 * max(1.0, np.linalg.norm(f))
            # consistency: re-measuring the reconstruction changes nothing
            meas = np.abs(ds.w.T @ (f - ef))
            scale = np.linalg.norm(f) * np.linalg.norm(ds.w, axis=0)
            assert np.all(meas <= 1e-8 * scale)

    def test_length_mismatch(self):
        ds = init_dual(np.array([1.0, 0.0, 0.0]))
        with pytest.raises(DimensionMismatchError):
            apply_oblique(ds, np.eye(3)[:, :2], np.zeros(3))


class TestOracleDuals:
    def test_single_atom(self):
        w = oracle_duals(np.array([[0.5], [-0.5], [0.0]]))
        assert np.allclose(w[:, 0], [1.0, -1.0, 0.0])

    def test_orthonormal_self_dual(self):
        w = oracle_duals(np.eye(3)[:, :2])
        assert np.allclose(w, np.eye(3)[:, :2])

    def test_singular_gram_raises_with_condition(self):
        u = np.column_stack([np.ones(4), np.ones(4)])
        with pytest.raises(SingularGramError) as exc:
            oracle_duals(u)
        assert exc.value.condition > 1e15


class TestOracleObliqueProjection:
    def test_single_atom(self):
        out = oracle_oblique_projection(np.eye(3)[:, :1], diag_background(),
                                        np.array([3.0, 1.0, 4.0]))
        assert np.allclose(out.projection, [2.0, 0.0, 0.0])
        assert out.gram_condition == pytest.approx(1.0)

    def test_two_atoms_hand_solve(self):
        f = np.array([3.0, 1.0, 4.0])
        out = oracle_oblique_projection(np.eye(3)[:, [0, 2]], diag_background(), f)
        assert np.allclose(out.projection, [2.0, 0.0, 4.0])
        resid = f - out.projection
        assert np.allclose(resid, [1.0, 1.0, 0.0])

    def test_matches_recursive_application(self, rng):
        for _ in range(30):
            atoms, bg, f, k = random_instance(rng)
            u = subtract_background(atoms[:, :k], bg)
            ds = init_dual(u[:, 0])
            for j in range(1, k):
                ds = extend_duals(ds, u[:, j])
            rec = apply_oblique(ds, atoms[:, :k], f)
            orc = oracle_oblique_projection(atoms[:, :k], bg, f)
            assert np.linalg.norm(rec - orc.projection) <= 1e-8 * max(
                1.0, np.linalg.norm(orc.projection)
            )
