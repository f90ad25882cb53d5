import numpy as np
import pytest

from lccd.errors import InvalidInputError
from lccd.reduction import fit_pca, project, reconstruct


def pairwise_sq(x):
    g = x @ x.T
    d = np.diag(g)
    return d[:, None] + d[None, :] - 2 * g


class TestFit:
    def test_orthonormal_rows(self, rng):
        model = fit_pca(rng.normal(size=(300, 12)), 5)
        assert np.allclose(model.components @ model.components.T, np.eye(5), atol=1e-6)

    def test_sign_convention(self, rng):
        model = fit_pca(rng.normal(size=(200, 9)), 9)
        biggest = np.abs(model.components).argmax(axis=1)
        assert np.all(model.components[np.arange(9), biggest] > 0)

    def test_explained_variance_non_increasing(self, rng):
        x = rng.normal(size=(400, 10)) * np.arange(1, 11)
        ev = fit_pca(x, 10).explained_variance
        assert np.all(np.diff(ev) <= 0)

    def test_exact_subspace_recovery(self, rng):
        basis = np.linalg.qr(rng.normal(size=(20, 4)))[0].T
        x = rng.normal(size=(150, 4)) @ basis + rng.normal(size=20)
        model = fit_pca(x, 4)
        assert np.max(np.abs(reconstruct(model, project(model, x)) - x)) < 1e-8

    def test_identical_samples(self, caplog):
        x = np.tile([1.0, -2.0, 3.5], (10, 1))
        model = fit_pca(x, 2)
        assert np.array_equal(model.mean, x[0])
        assert np.allclose(project(model, x), 0.0)
        assert "null direction" in caplog.text

    def test_isometry_when_full_rank(self, rng):
        x = rng.normal(size=(100, 10))
        z = project(fit_pca(x, 10), x)
        assert np.max(np.abs(pairwise_sq(z) - pairwise_sq(x - x.mean(axis=0)))) < 1e-6

    def test_reconstruction_error_monotone_in_k(self, rng):
        x = rng.normal(size=(200, 8)) @ rng.normal(size=(8, 8))
        errors = []
        for k in range(1, 9):
            m = fit_pca(x, k)
            errors.append(np.sum((reconstruct(m, project(m, x)) - x) ** 2))
        assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-16 * len(x) * 1e6

    def test_too_few_samples(self, rng):
        with pytest.raises(InvalidInputError):
            fit_pca(rng.normal(size=(3, 6)), 4)

    def test_sample_cap_is_seeded(self, rng):
        x = rng.normal(size=(500, 5))
        a = fit_pca(x, 3, sample_cap=100, seed=7)
        b = fit_pca(x, 3, sample_cap=100, seed=7)
        assert np.array_equal(a.components, b.components)
        assert not np.array_equal(a.mean, x.mean(axis=0))

    def test_whitening_gives_unit_variance(self, rng):
        x = rng.normal(size=(2000, 4)) * [5.0, 2.0, 1.0, 0.5]
        z = project(fit_pca(x, 4, whiten=True), x)
        assert np.allclose(z.var(axis=0), 1.0, atol=1e-9)


class TestProject:
    def test_mean_maps_to_zero(self, rng):
        model = fit_pca(rng.normal(size=(50, 6)), 3)
        assert np.allclose(project(model, model.mean), 0.0, atol=1e-15)

    def test_unit_axis(self, rng):
        model = fit_pca(rng.normal(size=(50, 6)), 4)
        for j in range(4):
            e = np.eye(4)[j]
            assert np.allclose(project(model, model.mean + model.components.T @ e), e, atol=1e-12)

    def test_length_mismatch(self, rng):
        model = fit_pca(rng.normal(size=(50, 6)), 3)
        with pytest.raises(InvalidInputError):
            project(model, np.zeros(5))
