"""Unit tests for PCA, the SMO machines and key-model plumbing."""
import numpy as np
import pytest

from src.chromachords.core.chroma import transpose_histogram
from src.chromachords.core.errors import DegenerateData, EmptyInput, InsufficientClasses, InvalidParameter
from src.chromachords.core.models import KeyExample, KeyMode
from src.chromachords.dataset.synthetic import synthesize_key_examples
from src.chromachords.keys.classifier import (
    augment_keyset,
    load_key_model,
    predict_key,
    save_key_model,
    train_key_model,
)
from src.chromachords.keys.pca import fit_pca, pca_inverse_transform, pca_transform
from src.chromachords.keys.svm import rbf_kernel, smo_solve, train_kernel_classifier

C_MAJOR = np.array([1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 1]) / 7.0


@pytest.mark.unit
class TestPca:
    """Test PCA fitting and projection."""

    def test_rank_one_line(self, rng):
        direction = rng.random(12)
        direction /= np.linalg.norm(direction)
        X = rng.normal(size=(40, 1)) * direction
        model = fit_pca(X, 1)
        assert abs(model.components[0] @ direction) == pytest.approx(1.0)

    def test_full_rank_is_isometry(self, rng):
        X = rng.random((60, 12))
        model = fit_pca(X, 12)
        Z = pca_transform(model, X)
        for a, b in [(0, 1), (5, 17), (30, 59)]:
            assert np.linalg.norm(Z[a] - Z[b]) == pytest.approx(np.linalg.norm(X[a] - X[b]), abs=1e-9)
        np.testing.assert_allclose(pca_inverse_transform(model, Z), X, atol=1e-9)

    def test_orthonormal_and_sorted(self, rng):
        model = fit_pca(rng.random((100, 12)), 9)
        np.testing.assert_allclose(model.components @ model.components.T, np.eye(9), atol=1e-10)
        assert np.all(np.diff(model.explained_variance) <= 1e-12)

    def test_mean_maps_to_zero(self, rng):
        model = fit_pca(rng.random((50, 12)), 4)
        np.testing.assert_allclose(pca_transform(model, model.mean), np.zeros(4), atol=1e-12)

    def test_affine(self, rng):
        model = fit_pca(rng.random((50, 12)), 5)
        a, b = rng.random(12), rng.random(12)
        zero = pca_transform(model, np.zeros(12))
        np.testing.assert_allclose(
            pca_transform(model, a + b),
            pca_transform(model, a) + pca_transform(model, b) - zero,
            atol=1e-12,
        )

    def test_reconstruction_error_non_increasing(self, rng):
        X = rng.random((200, 12))
        errors = []
        for n in range(1, 13):
            model = fit_pca(X, n)
            recon = pca_inverse_transform(model, pca_transform(model, X))
            errors.append(np.mean((recon - X) ** 2))
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))

    def test_errors(self, rng):
        with pytest.raises(DegenerateData):
            fit_pca(rng.random((5, 12)), 9)
        with pytest.raises(DegenerateData):
            fit_pca(np.ones((20, 12)), 3)
        with pytest.raises(InvalidParameter):
            fit_pca(rng.random((20, 12)), 13)


@pytest.mark.unit
class TestKernelMachines:
    """Test the RBF kernel and SMO solver."""

    def test_kernel_values(self, rng):
        X = rng.random((5, 3))
        np.testing.assert_allclose(np.diag(rbf_kernel(X, X, 1.0)), np.ones(5))
        assert rbf_kernel([[0.0, 0.0]], [[1.0, 0.0]], 1.0)[0, 0] == pytest.approx(np.exp(-1))

    def test_smo_two_points(self):
        """Test the hard-margin solution for x = +1 and x = -1."""
        K = np.array([[1.0, -1.0], [-1.0, 1.0]])
        alpha, rho, _, converged = smo_solve(K, np.array([1.0, -1.0]), np.full(2, 10.0))
        assert converged
        np.testing.assert_allclose(alpha, [0.5, 0.5])
        assert rho == pytest.approx(0.0)

    def test_separable_clusters(self, rng):
        X = np.vstack([rng.normal(0.0, 0.1, (20, 2)), rng.normal(2.0, 0.1, (20, 2))])
        y = np.array([0] * 20 + [7] * 20)
        clf = train_kernel_classifier(X, y, C=10.0)
        assert np.array_equal(clf.predict(X), y)
        margins = np.where(y == 0, 1.0, -1.0) * clf.machines[0].decision(X, clf.gamma)
        assert np.all(margins >= 0)
        assert all(len(clf.machines[k].dual_coef) == 0 for k in range(12) if k not in (0, 7))

    def test_single_class_rejected(self, rng):
        with pytest.raises(InsufficientClasses):
            train_kernel_classifier(rng.random((10, 3)), np.zeros(10, dtype=int))


@pytest.mark.unit
class TestAugmentation:
    """Test minor balancing, rotation and relabeling."""

    def test_counts(self):
        examples = [
            KeyExample(histogram=C_MAJOR, tonic_pc=0, mode=KeyMode.MAJOR),
            KeyExample(histogram=C_MAJOR, tonic_pc=9, mode=KeyMode.MINOR),
        ]
        assert len(augment_keyset(examples, seed=0)) == 8

    def test_labels_follow_rotation(self):
        examples = [
            KeyExample(histogram=np.roll(C_MAJOR, k), tonic_pc=k, mode=KeyMode.MAJOR) for k in range(12)
        ] + [KeyExample(histogram=C_MAJOR, tonic_pc=9, mode=KeyMode.MINOR)]
        out = augment_keyset(examples, seed=3)
        for (hist, label), ex in zip(out[:12], examples[:12]):
            shift = (label - ex.tonic_pc) % 12
            np.testing.assert_array_equal(hist, transpose_histogram(ex.histogram, shift))
        # the un-noised minor copy: A minor rotated by s is the major key s semitones above C
        hist, label = out[12]
        np.testing.assert_array_equal(hist, transpose_histogram(C_MAJOR, label))
        assert all(0 <= lbl <= 11 for _, lbl in out)

    def test_noisy_copies_are_normalized(self):
        out = augment_keyset([KeyExample(histogram=C_MAJOR, tonic_pc=9, mode=KeyMode.MINOR)], seed=1)
        for hist, _ in out:
            assert hist.sum() == pytest.approx(1.0)
            assert hist.min() >= 0.0

    def test_reproducible(self):
        examples = synthesize_key_examples(2, seed=5)
        a, b = augment_keyset(examples, seed=9), augment_keyset(examples, seed=9)
        assert all(la == lb and np.array_equal(ha, hb) for (ha, la), (hb, lb) in zip(a, b))

    def test_empty(self):
        with pytest.raises(EmptyInput):
            augment_keyset([], seed=0)


@pytest.mark.unit
class TestKeyModel:
    """Test small-scale training and persistence."""

    @pytest.fixture(scope="class")
    def trained(self):
        return train_key_model(synthesize_key_examples(8, seed=1), seed=0)

    def test_report(self, trained):
        _, report = trained
        assert report.n_examples == 96
        assert report.n_test == 19
        assert report.n_train == 77
        assert 0.0 <= report.test_accuracy <= 1.0
        assert report.n_augmented > report.n_train
        assert 0.0 <= report.train_accuracy <= 1.0

    def test_deterministic(self, trained):
        model, report = trained
        again, report_again = train_key_model(synthesize_key_examples(8, seed=1), seed=0)
        assert report_again == report
        X = np.stack([e.histogram for e in synthesize_key_examples(2, seed=77)])
        np.testing.assert_array_equal(model.predict_many(X), again.predict_many(X))

    def test_save_load(self, trained, tmp_path):
        model, _ = trained
        path = save_key_model(model, tmp_path / "keys.keyc")
        loaded = load_key_model(path)
        assert loaded == model
        assert predict_key(loaded.classifier, loaded.pca, C_MAJOR) == predict_key(model.classifier, model.pca, C_MAJOR)
