"""Projection fitting, application, and serialization."""

import numpy as np
import pytest

from illumest.illuminants import Illuminant, IlluminantSet
from illumest.io import FormatError
from illumest.projections import (
    ALL_KINDS,
    KIND_ILL_PCA,
    KIND_LDA,
    KIND_NNMF,
    KIND_PCA,
    KIND_RAND,
    KIND_RGB,
    Projection,
    TrainingMatrix,
    fit_ill_pca,
    fit_lda,
    fit_nnmf,
    fit_pca,
    fit_rand,
    fit_rgb,
    nnmf_factorize,
    projection_from_bytes,
    projection_hash,
    projection_to_bytes,
    read_projection,
    write_projection,
)
from illumest.spectral import SensitivityFunctions, SpectralAxis, Spectrum


def simplex_rows(n, d, seed=0, labels_k=None):
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(d) * 1.5, size=n)
    rows = rows / rows.sum(axis=1, keepdims=True)
    if labels_k is None:
        return TrainingMatrix(rows)
    labels = np.arange(n) % labels_k
    return TrainingMatrix(rows, labels=labels)


class TestTrainingMatrix:
    def test_accepts_unit_sum_rows(self):
        t = simplex_rows(6, 4)
        assert t.n_rows == 6 and t.n_dims == 4

    def test_rejects_unnormalized_rows(self):
        with pytest.raises(ValueError):
            TrainingMatrix(np.array([[0.5, 0.6]]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            TrainingMatrix(np.array([[1.2, -0.2]]))

    def test_label_codes_must_be_contiguous(self):
        rows = np.full((4, 2), 0.5)
        TrainingMatrix(rows, labels=np.array([0, 1, 0, 1]))
        with pytest.raises(ValueError):
            TrainingMatrix(rows, labels=np.array([1, 2, 1, 2]))
        with pytest.raises(ValueError):
            TrainingMatrix(rows, labels=np.array([0, 2, 0, 2]))
        with pytest.raises(ValueError):
            TrainingMatrix(rows, labels=np.array([0.0, 1.0, 0.0, 1.0]))

    def test_n_classes(self):
        t = simplex_rows(9, 3, labels_k=3)
        assert t.n_classes == 3


class TestProjectionValidation:
    def test_shape_by_kind(self):
        Projection(KIND_RAND, input_dim=5, output_dim=2, basis=np.ones((2, 5)))
        with pytest.raises(ValueError):
            Projection(KIND_RAND, input_dim=5, output_dim=2, basis=np.ones((5, 2)))

    def test_rgb_must_have_three_outputs(self):
        with pytest.raises(ValueError):
            Projection(KIND_RGB, input_dim=5, output_dim=2, basis=np.ones((2, 5)))

    def test_nnmf_basis_non_negative(self):
        with pytest.raises(ValueError):
            Projection(KIND_NNMF, 4, 2, basis=np.array([[1.0, 1, 1, 1], [1, -1, 1, 1]]))

    def test_centered_kinds_need_orthonormal_basis_and_mean(self):
        good = np.eye(4)[:, :2]
        Projection(KIND_PCA, 4, 2, basis=good, mean=np.zeros(4))
        with pytest.raises(ValueError):
            Projection(KIND_PCA, 4, 2, basis=good)  # missing mean
        with pytest.raises(ValueError):
            Projection(KIND_PCA, 4, 2, basis=good * 2.0, mean=np.zeros(4))

    def test_linear_kinds_reject_mean(self):
        with pytest.raises(ValueError):
            Projection(KIND_RAND, 4, 2, basis=np.ones((2, 4)), mean=np.zeros(4))


class TestApply:
    def test_linear_kinds_multiply_by_basis(self):
        basis = np.array([[1.0, 0.0, 1.0], [0.0, 2.0, 0.0]])
        p = Projection(KIND_RAND, 3, 2, basis=basis)
        rows = np.array([[1.0, 2.0, 3.0], [0.0, 1.0, 0.0]])
        np.testing.assert_allclose(p.apply_rows(rows), [[4.0, 4.0], [0.0, 2.0]])
        np.testing.assert_allclose(p.apply(rows[0]), [4.0, 4.0])

    def test_centered_kinds_subtract_mean_first(self):
        basis = np.eye(3)[:, :1]
        p = Projection(KIND_PCA, 3, 1, basis=basis, mean=np.array([1.0, 2.0, 3.0]))
        out = p.apply_rows(np.array([[2.0, 2.0, 3.0]]))
        np.testing.assert_allclose(out, [[1.0]])

    def test_nnmf_kind_encodes_by_nnls(self):
        basis = np.array([[1.0, 0.0], [1.0, 1.0]])
        p = Projection(KIND_NNMF, 2, 2, basis=basis)
        # target = 1*row0 + 2*row1 exactly, so the encoding is (1, 2)
        np.testing.assert_allclose(p.apply(np.array([3.0, 2.0])), [1.0, 2.0], atol=1e-9)

    def test_input_dim_checked(self):
        p = Projection(KIND_RAND, 3, 1, basis=np.ones((1, 3)))
        with pytest.raises(ValueError):
            p.apply_rows(np.ones((2, 4)))


class TestFitRgbAndRand:
    def test_rgb_uses_sensitivity_rows(self):
        axis = SpectralAxis(400, 10, 6)
        rows = np.abs(np.random.default_rng(0).random((3, 6)))
        sens = SensitivityFunctions(axis, rows, "cam_z")
        p = fit_rgb(sens)
        assert p.kind == KIND_RGB and p.output_dim == 3
        np.testing.assert_array_equal(p.basis, rows)
        assert p.metadata["camera"] == "cam_z"

    def test_rand_seeded_and_bounded(self):
        a = fit_rand(31, 4, seed=42)
        b = fit_rand(31, 4, seed=42)
        c = fit_rand(31, 4, seed=43)
        np.testing.assert_array_equal(a.basis, b.basis)
        assert not np.array_equal(a.basis, c.basis)
        assert a.basis.shape == (4, 31)
        assert np.all(a.basis >= -1.0) and np.all(a.basis < 1.0)
        assert a.metadata["seed"] == 42

    def test_rand_three_standard_seeds_distinct(self):
        bases = [fit_rand(31, 3, seed=s).basis for s in (42, 43, 44)]
        assert not np.array_equal(bases[0], bases[1])
        assert not np.array_equal(bases[0], bases[2])
        assert not np.array_equal(bases[1], bases[2])

    def test_rand_dims_checked(self):
        with pytest.raises(ValueError):
            fit_rand(3, 4, seed=0)


class TestFitPca:
    def test_hand_worked_example(self):
        rows = np.array([[0.2, 0.3, 0.5], [0.4, 0.3, 0.3], [0.3, 0.3, 0.4]])
        p = fit_pca(TrainingMatrix(rows), 1)
        np.testing.assert_allclose(p.mean, [0.3, 0.3, 0.4], atol=1e-15)
        s = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(p.basis[:, 0], [s, 0.0, -s], atol=1e-12)
        z = p.apply(rows[0])
        np.testing.assert_allclose(z, [-0.2 * s], atol=1e-12)

    def test_rank_deficient_request_rejected(self):
        rows = np.array([[0.2, 0.3, 0.5], [0.4, 0.3, 0.3], [0.3, 0.3, 0.4]])
        with pytest.raises(ValueError):
            fit_pca(TrainingMatrix(rows), 2)  # data varies along one axis only

    def test_matches_svd_subspace(self):
        for seed in range(5):
            t = simplex_rows(40, 6, seed=seed)
            d_prime = 3
            p = fit_pca(t, d_prime)
            centered = t.rows - t.rows.mean(axis=0)
            _, _, vt = np.linalg.svd(centered, full_matrices=False)
            oracle = vt[:d_prime].T
            mine = p.basis @ p.basis.T
            np.testing.assert_allclose(mine, oracle @ oracle.T, atol=1e-8)

    def test_projected_training_data_is_decorrelated(self):
        t = simplex_rows(60, 5, seed=3)
        p = fit_pca(t, 3)
        z = p.apply_rows(t.rows)
        cov = np.cov(z, rowvar=False)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) < 1e-10
        assert cov[0, 0] >= cov[1, 1] >= cov[2, 2]

    def test_sign_convention(self):
        t = simplex_rows(30, 4, seed=9)
        p = fit_pca(t, 2)
        for col in p.basis.T:
            assert col[np.argmax(np.abs(col))] > 0


class TestFitIllPca:
    def make_set(self, n=12, d=8, seed=1):
        rng = np.random.default_rng(seed)
        axis = SpectralAxis(400, 10, d)
        return IlluminantSet(
            tuple(
                Illuminant(f"L{i}", Spectrum(axis, rng.random(d) + 0.05))
                for i in range(n)
            )
        )

    def test_trains_on_normalized_spds(self):
        s = self.make_set()
        p = fit_ill_pca(s, 3)
        assert p.kind == KIND_ILL_PCA
        chroma = s.chromaticity_matrix()
        np.testing.assert_allclose(p.mean, chroma.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(p.basis.T @ p.basis, np.eye(3), atol=1e-10)
        assert p.metadata["n_illuminants"] == 12

    def test_matches_svd_subspace(self):
        s = self.make_set(seed=5)
        p = fit_ill_pca(s, 4)
        chroma = s.chromaticity_matrix()
        centered = chroma - chroma.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        oracle = vt[:4].T
        np.testing.assert_allclose(
            p.basis @ p.basis.T, oracle @ oracle.T, atol=1e-8
        )


class TestNnmf:
    def test_losses_monotone_non_increasing(self):
        rng = np.random.default_rng(2)
        x = rng.random((15, 9))
        _, _, losses = nnmf_factorize(x, 4, seed=0, max_iter=200)
        diffs = np.diff(losses)
        assert np.all(diffs <= 1e-9 * max(losses[0], 1.0))

    def test_exact_low_rank_recovery(self):
        rng = np.random.default_rng(3)
        u0 = rng.random((12, 3))
        v0 = rng.random((3, 8))
        x = u0 @ v0
        _, _, losses = nnmf_factorize(x, 3, seed=1, max_iter=4000, tol=1e-15)
        assert losses[-1] < 1e-6 * float(np.linalg.norm(x) ** 2)

    def test_factor_shapes_and_nonnegativity(self):
        rng = np.random.default_rng(4)
        x = rng.random((10, 7))
        u, v, _ = nnmf_factorize(x, 2, seed=0)
        assert u.shape == (10, 2) and v.shape == (2, 7)
        assert np.all(u >= 0) and np.all(v >= 0)

    def test_seeded_reproducibility(self):
        rng = np.random.default_rng(5)
        x = rng.random((8, 6))
        u1, v1, l1 = nnmf_factorize(x, 2, seed=7, max_iter=50)
        u2, v2, l2 = nnmf_factorize(x, 2, seed=7, max_iter=50)
        np.testing.assert_array_equal(u1, u2)
        np.testing.assert_array_equal(v1, v2)
        assert l1 == l2

    def test_rejects_negative_input_and_bad_rank(self):
        with pytest.raises(ValueError):
            nnmf_factorize(np.array([[1.0, -1.0]]), 1)
        with pytest.raises(ValueError):
            nnmf_factorize(np.ones((3, 3)), 4)

    def test_fit_nnmf_projection(self):
        # Rows built as an exact rank-3 non-negative product (then scaled to
        # unit sum, which preserves the rank) are representable, so the
        # fitted basis and its NNLS encoding must reconstruct them closely.
        rng = np.random.default_rng(6)
        w = rng.random((25, 3))
        h = rng.random((3, 6)) + 0.1
        rows = w @ h
        rows /= rows.sum(axis=1, keepdims=True)
        t = TrainingMatrix(rows)
        p = fit_nnmf(t, 3, seed=0, max_iter=3000, tol=1e-14)
        assert p.kind == KIND_NNMF
        assert np.all(p.basis >= 0)
        assert p.metadata["seed"] == 0
        assert p.metadata["iterations"] >= 1
        assert p.metadata["final_loss"] >= 0
        z = p.apply_rows(t.rows)
        assert np.all(z >= 0)
        rel = np.linalg.norm(t.rows - z @ p.basis) ** 2 / np.linalg.norm(t.rows) ** 2
        assert rel < 1e-3


class TestFitLda:
    def two_class_matrix(self, seed=0):
        rng = np.random.default_rng(seed)
        centers = np.array([[0.7, 0.2, 0.1], [0.2, 0.7, 0.1]])
        rows, labels = [], []
        for c, center in enumerate(centers):
            for _ in range(20):
                r = np.clip(center + rng.normal(0, 0.01, 3), 1e-3, None)
                rows.append(r / r.sum())
                labels.append(c)
        return TrainingMatrix(np.array(rows), labels=np.array(labels))

    def test_separates_classes(self):
        t = self.two_class_matrix()
        p = fit_lda(t, 1)
        z = p.apply_rows(t.rows)[:, 0]
        z0, z1 = z[t.labels == 0], z[t.labels == 1]
        gap = abs(z0.mean() - z1.mean())
        spread = max(z0.std(), z1.std())
        assert gap > 10 * spread

    def test_output_dim_capped_by_classes(self):
        t = self.two_class_matrix()
        with pytest.raises(ValueError):
            fit_lda(t, 2)  # two classes allow only one discriminant

    def test_needs_labels(self):
        with pytest.raises(ValueError):
            fit_lda(simplex_rows(10, 3), 1)

    def test_basis_rows_unit_norm_and_deterministic(self):
        t = simplex_rows(36, 5, seed=8, labels_k=4)
        p1 = fit_lda(t, 3)
        p2 = fit_lda(t, 3)
        np.testing.assert_array_equal(p1.basis, p2.basis)
        np.testing.assert_allclose(
            np.linalg.norm(p1.basis, axis=1), np.ones(3), atol=1e-10
        )
        assert p1.metadata["n_classes"] == 4


class TestSerialization:
    def sample_projections(self):
        axis = SpectralAxis(400, 10, 5)
        rng = np.random.default_rng(0)
        sens = SensitivityFunctions(axis, rng.random((3, 5)), "cam_q")
        out = [fit_rgb(sens), fit_rand(5, 2, seed=3)]
        out.append(
            Projection(
                KIND_PCA, 5, 2, basis=np.eye(5)[:, :2], mean=np.arange(5.0),
                metadata={"n_rows": 9},
            )
        )
        out.append(
            Projection(
                KIND_ILL_PCA, 5, 1, basis=np.eye(5)[:, :1], mean=np.full(5, 0.2),
                metadata={"n_illuminants": 4},
            )
        )
        out.append(Projection(KIND_NNMF, 5, 2, basis=rng.random((2, 5))))
        out.append(Projection(KIND_LDA, 5, 2, basis=rng.standard_normal((2, 5))))
        return out

    def test_round_trip_every_kind(self):
        for p in self.sample_projections():
            blob = projection_to_bytes(p)
            q = projection_from_bytes(blob)
            assert q.kind == p.kind
            assert q.input_dim == p.input_dim and q.output_dim == p.output_dim
            np.testing.assert_array_equal(q.basis, p.basis)
            if p.mean is None:
                assert q.mean is None
            else:
                np.testing.assert_array_equal(q.mean, p.mean)
            assert q.metadata == p.metadata
            assert projection_to_bytes(q) == blob

    def test_kind_codes_are_frozen(self):
        # byte 5 of the serialization is the kind code; the mapping is part
        # of the on-disk contract and must never drift
        wanted = {
            KIND_RGB: 0, KIND_RAND: 1, KIND_PCA: 2,
            KIND_ILL_PCA: 3, KIND_NNMF: 4, KIND_LDA: 5,
        }
        assert list(ALL_KINDS) == list(wanted)
        for p in self.sample_projections():
            assert projection_to_bytes(p)[5] == wanted[p.kind]

    def test_file_round_trip(self, tmp_path):
        p = fit_rand(7, 3, seed=1)
        path = tmp_path / "p.proj"
        write_projection(path, p)
        q = read_projection(path)
        np.testing.assert_array_equal(q.basis, p.basis)
        assert q.metadata == p.metadata

    def test_hash_is_stable_and_discriminating(self):
        a = fit_rand(6, 2, seed=1)
        b = fit_rand(6, 2, seed=2)
        assert projection_hash(a) == projection_hash(a)
        assert projection_hash(a) != projection_hash(b)
        assert len(projection_hash(a)) == 32

    def test_bad_magic_and_truncation(self):
        blob = projection_to_bytes(fit_rand(4, 2, seed=0))
        with pytest.raises(FormatError):
            projection_from_bytes(b"XXXX" + blob[4:])
        with pytest.raises(FormatError):
            projection_from_bytes(blob[:12])

    def test_unknown_kind_code_rejected(self):
        blob = bytearray(projection_to_bytes(fit_rand(4, 2, seed=0)))
        blob[5] = 99
        with pytest.raises(FormatError):
            projection_from_bytes(bytes(blob))
