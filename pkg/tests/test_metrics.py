import numpy as np
import pytest
from skimage.metrics import structural_similarity

import ctfbp
from ctfbp.errors import DimensionMismatchError, ParameterError


def image_from(values, radius=1.0):
    return ctfbp.Image(support_radius=radius, values=values)


def random_image(seed, n=32):
    rng = np.random.default_rng(seed)
    return image_from(rng.normal(size=(n, n)))


class TestMse:
    def test_identical_images(self):
        a = random_image(0)
        assert ctfbp.mse(a, a) == 0.0

    def test_constant_offset(self):
        a = random_image(1)
        b = image_from(a.values + 0.5)
        assert ctfbp.mse(a, b) == pytest.approx(0.25, rel=1e-12)

    def test_matches_double_loop(self):
        a = random_image(2, n=16)
        b = random_image(3, n=16)
        acc = 0.0
        for p in range(16):
            for q in range(16):
                acc += (a.values[p, q] - b.values[p, q]) ** 2
        assert ctfbp.mse(a, b) == pytest.approx(acc / 256, rel=1e-12)

    def test_symmetry(self):
        a = random_image(4)
        b = random_image(5)
        assert ctfbp.mse(a, b) == ctfbp.mse(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ctfbp.mse(random_image(6, n=16), random_image(7, n=32))

    def test_masked_counts_only_support_disk(self):
        n = 64
        a = image_from(np.zeros((n, n)))
        values = np.zeros((n, n))
        c = ctfbp.pixel_centers(n, 1.0)
        x, y = np.meshgrid(c, c)
        outside = x * x + y * y > 1.0
        values[outside] = 100.0  # corner garbage must not count when masked
        b = image_from(values)
        assert ctfbp.mse(a, b, mask_to_support=True) == 0.0
        assert ctfbp.mse(a, b) > 0.0


class TestSsim:
    def test_identical_images_give_one(self):
        a = random_image(10)
        assert ctfbp.ssim(a, a) == 1.0

    def test_large_constant_offset_lowers_luminance(self):
        b = random_image(11)
        shift = 10.0 * (b.values.max() - b.values.min())
        a = image_from(b.values + shift)
        assert ctfbp.ssim(a, b) < 1.0

    def test_negated_checkerboard_is_negative(self):
        n = 32
        board = np.indices((n, n)).sum(axis=0) % 2 - 0.5
        b = image_from(board.astype(float))
        a = image_from(-b.values)
        assert ctfbp.ssim(a, b) < 0.0

    def test_pooled_range_symmetric(self):
        a = random_image(12)
        b = random_image(13)
        assert ctfbp.ssim(a, b, pooled_range=True) == ctfbp.ssim(b, a, pooled_range=True)

    def test_matches_skimage_reference(self):
        # same settings as the cited single-scale index: 11x11 Gaussian
        # window, sigma 1.5, K1/K2 defaults, weighted (biased) covariance
        rng = np.random.default_rng(14)
        base = rng.normal(size=(48, 48))
        noisy = base + 0.3 * rng.normal(size=(48, 48))
        a = image_from(noisy)
        b = image_from(base)
        want = structural_similarity(
            noisy,
            base,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=float(base.max() - base.min()),
        )
        assert ctfbp.ssim(a, b) == pytest.approx(want, abs=1e-9)

    def test_too_small_image_rejected(self):
        with pytest.raises(ParameterError):
            ctfbp.ssim(random_image(15, n=8), random_image(16, n=8))

    def test_zero_dynamic_range_rejected(self):
        flat = image_from(np.ones((16, 16)))
        with pytest.raises(ParameterError):
            ctfbp.ssim(flat, flat)

    def test_bounded_above_by_one(self):
        for seed in range(5):
            a = random_image(20 + seed)
            b = random_image(30 + seed)
            assert ctfbp.ssim(a, b) <= 1.0


class TestMetricReport:
    def test_fields(self):
        a = random_image(40)
        b = random_image(41)
        report = ctfbp.metric_report(a, b)
        assert report.mse == ctfbp.mse(a, b)
        assert report.ssim == ctfbp.ssim(a, b)
        assert report.n_pixels == 32
        assert report.masked is False
        assert report.mse >= 0.0
        assert report.ssim <= 1.0
