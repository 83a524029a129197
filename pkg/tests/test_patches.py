"""Patch extraction and ZCA whitening."""

import numpy as np
import numpy.testing as npt
import pytest

from msunique.colorspace import to_ygcr
from msunique.patches import (
    PatchMatrix,
    WhiteningTransform,
    apply_whitening,
    extract_random_patches,
    extract_tiled_patches,
    fit_whitening,
)

from _synth import natural_image


def ygcr(rng, h, w):
    return to_ygcr(natural_image(rng, h, w))


class TestPatchMatrix:
    def test_dims(self):
        pm = PatchMatrix(4, np.zeros((48, 10)))
        assert pm.dim == 48
        assert pm.count == 10

    def test_row_count_enforced(self):
        with pytest.raises(ValueError, match=r"3\*p\*p rows"):
            PatchMatrix(4, np.zeros((47, 10)))


class TestRandomExtraction:
    def test_shape(self):
        rng = np.random.default_rng(0)
        pm = extract_random_patches(ygcr(rng, 16, 16), 100, 8, rng)
        assert pm.dim == 192
        assert pm.count == 100

    def test_single_position_degenerate(self):
        rng = np.random.default_rng(1)
        img = ygcr(rng, 8, 8)
        pm = extract_random_patches(img, 3, 8, rng)
        npt.assert_array_equal(pm.data[:, 0], pm.data[:, 1])
        npt.assert_array_equal(pm.data[:, 0], pm.data[:, 2])

    def test_deterministic(self):
        img = ygcr(np.random.default_rng(2), 20, 20)
        a = extract_random_patches(img, 50, 4, np.random.default_rng(9))
        b = extract_random_patches(img, 50, 4, np.random.default_rng(9))
        npt.assert_array_equal(a.data, b.data)

    def test_column_layout(self):
        # Y-plane samples row-major, then G, then Cr
        rng = np.random.default_rng(3)
        img = ygcr(rng, 4, 4)
        pm = extract_random_patches(img, 1, 4, rng)
        col = pm.data[:, 0]
        npt.assert_array_equal(col[:16], img.y.ravel())
        npt.assert_array_equal(col[16:32], img.g.ravel())
        npt.assert_array_equal(col[32:], img.cr.ravel())

    def test_too_small_image(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError, match="smaller than patch side"):
            extract_random_patches(ygcr(rng, 6, 6), 5, 8, rng)


class TestTiledExtraction:
    def test_exact_tiling_count(self):
        rng = np.random.default_rng(5)
        assert extract_tiled_patches(ygcr(rng, 16, 8), 8).count == 2

    def test_floor_crop(self):
        rng = np.random.default_rng(6)
        assert extract_tiled_patches(ygcr(rng, 17, 9), 8).count == 2

    def test_identity_tile(self):
        rng = np.random.default_rng(7)
        img = ygcr(rng, 8, 8)
        pm = extract_tiled_patches(img, 8)
        assert pm.count == 1
        npt.assert_array_equal(pm.data[:64, 0], img.y.ravel())

    def test_raster_order_lossless(self):
        # reassembling tiles in raster order reproduces the cropped planes
        rng = np.random.default_rng(8)
        img = ygcr(rng, 12, 8)
        p = 4
        pm = extract_tiled_patches(img, p)
        rows, cols = 12 // p, 8 // p
        rebuilt = np.zeros((12, 8))
        for idx in range(pm.count):
            tile = pm.data[: p * p, idx].reshape(p, p)
            r0, c0 = (idx // cols) * p, (idx % cols) * p
            rebuilt[r0 : r0 + p, c0 : c0 + p] = tile
        npt.assert_array_equal(rebuilt, img.y)

    def test_too_small(self):
        rng = np.random.default_rng(9)
        with pytest.raises(ValueError, match="smaller than patch side"):
            extract_tiled_patches(ygcr(rng, 3, 12), 4)


class TestWhitening:
    def test_pre_whitened_data_gives_identity(self):
        # exactly decorrelate some data first; refitting on it must yield I
        d, n = 3, 400
        rng = np.random.default_rng(10)
        x = rng.standard_normal((d, n))
        x -= x.mean(axis=1, keepdims=True)
        evals, evecs = np.linalg.eigh(x @ x.T / n)
        x_white = (evecs / np.sqrt(evals)) @ evecs.T @ x
        w = fit_whitening(PatchMatrix(1, x_white), 0.0)
        npt.assert_allclose(w.zca, np.eye(d), atol=1e-8)

    def test_whitened_covariance_identity(self):
        rng = np.random.default_rng(11)
        pm = PatchMatrix(2, rng.uniform(0.0, 1.0, size=(12, 500)))
        w = fit_whitening(pm, 0.0)
        out = apply_whitening(w, pm).data
        centered = out - out.mean(axis=1, keepdims=True)
        cov = centered @ centered.T / out.shape[1]
        npt.assert_allclose(cov, np.eye(12), atol=1e-8)

    def test_zca_symmetric(self):
        rng = np.random.default_rng(12)
        w = fit_whitening(PatchMatrix(3, rng.uniform(0, 1, (27, 300))), 0.1)
        assert np.abs(w.zca - w.zca.T).max() < 1e-10

    def test_regularized_eigenvalue_shrinkage(self):
        # whitened-data covariance eigenvalue for raw eigenvalue lam must be
        # lam / (lam + epsilon); checked against an eigendecomposition oracle
        rng = np.random.default_rng(13)
        basis = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        chol = np.linalg.cholesky(basis @ np.diag([2.0, 1.0, 0.5]) @ basis.T)
        n = 5000
        data = chol @ rng.standard_normal((3, n))
        pm = PatchMatrix(1, data)
        w = fit_whitening(pm, 0.1)
        out = apply_whitening(w, pm).data
        centered = out - out.mean(axis=1, keepdims=True)
        got = np.sort(np.linalg.eigvalsh(centered @ centered.T / n))
        centered_in = data - data.mean(axis=1, keepdims=True)
        lam = np.sort(np.linalg.eigvalsh(centered_in @ centered_in.T / n))
        npt.assert_allclose(got, lam / (lam + 0.1), atol=1e-10)

    def test_apply_identity(self):
        data = np.arange(12.0).reshape(3, 4)
        w = WhiteningTransform(np.zeros(3), np.eye(3), 0.0)
        out = apply_whitening(w, PatchMatrix(1, data))
        npt.assert_array_equal(out.data, data)

    def test_mean_column_maps_to_zero(self):
        rng = np.random.default_rng(14)
        w = fit_whitening(PatchMatrix(2, rng.uniform(0, 1, (12, 40))), 0.1)
        out = apply_whitening(w, PatchMatrix(2, w.mean[:, None]))
        npt.assert_allclose(out.data, 0.0, atol=1e-12)

    def test_rank_deficient_needs_epsilon(self):
        rng = np.random.default_rng(15)
        thin = rng.standard_normal((2, 100))
        data = np.vstack([thin, thin[0] + thin[1]])  # rank 2 in dim 3
        with pytest.raises(ValueError, match="rank-deficient"):
            fit_whitening(PatchMatrix(1, data), 0.0)
        fit_whitening(PatchMatrix(1, data), 0.1)  # regularized fit succeeds

    def test_needs_two_patches(self):
        with pytest.raises(ValueError, match="at least 2"):
            fit_whitening(PatchMatrix(1, np.ones((3, 1))), 0.1)

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError, match="epsilon"):
            fit_whitening(PatchMatrix(1, np.ones((3, 5))), -0.5)

    def test_dimension_mismatch(self):
        w = WhiteningTransform(np.zeros(3), np.eye(3), 0.0)
        with pytest.raises(ValueError, match="dimension mismatch"):
            apply_whitening(w, PatchMatrix(2, np.zeros((12, 4))))
