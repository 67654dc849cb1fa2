import math

import mpmath
import numpy as np
import pytest

import ctfbp
from ctfbp.errors import DimensionMismatchError, FormatError, InvalidGeometryError


def dft_oracle(values, s, sigma, h):
    """Radial DFT by direct summation in 30-digit arithmetic."""
    mpmath.mp.dps = 30
    acc = mpmath.mpc(0)
    for v, si in zip(values, s):
        acc += mpmath.mpf(v) * mpmath.e ** (-1j * mpmath.mpf(si) * mpmath.mpf(sigma))
    acc *= mpmath.mpf(h)
    return complex(acc)


class TestGeometryFromAngles:
    def test_360_angles(self):
        g = ctfbp.geometry_from_angles(360, 1.0)
        assert g.radial_half_count == 114
        assert g.bandwidth == pytest.approx(114 * math.pi, rel=1e-12)
        assert g.radial_step == pytest.approx(1.0 / 114, rel=1e-12)

    def test_90_angles(self):
        g = ctfbp.geometry_from_angles(90, 1.0)
        assert g.radial_half_count == 28
        assert g.bandwidth == pytest.approx(28 * math.pi, rel=1e-12)
        assert g.radial_step == pytest.approx(1.0 / 28, rel=1e-12)

    def test_too_few_angles(self):
        with pytest.raises(InvalidGeometryError):
            ctfbp.geometry_from_angles(3, 1.0)

    @pytest.mark.parametrize("n_angles", [4, 7, 90, 91, 148, 360, 719])
    @pytest.mark.parametrize("radius", [1.0, 1.5, 3.0])
    def test_coupling_identity(self, n_angles, radius):
        # M h >= R must hold exactly; equality up to a couple of ulps.
        g = ctfbp.geometry_from_angles(n_angles, radius)
        product = g.radial_half_count * g.radial_step
        assert product >= radius
        assert product == pytest.approx(radius, rel=5e-16)
        assert g.bandwidth == pytest.approx(math.pi * g.radial_half_count / radius, rel=1e-15)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidGeometryError):
            ctfbp.geometry_from_angles(90, 0.0)
        with pytest.raises(InvalidGeometryError):
            ctfbp.ParallelGeometry(
                n_angles=10, radial_half_count=3, radial_step=0.1,
                support_radius=1.0, bandwidth=10.0,
            )  # M h = 0.3 < R


class TestLattice:
    def test_offsets_and_angles(self, small_geometry):
        s = small_geometry.radial_offsets()
        m = small_geometry.radial_half_count
        assert s.shape == (2 * m + 1,)
        assert s[0] == -m * small_geometry.radial_step
        assert s[m] == 0.0
        phi = small_geometry.angles()
        assert phi[0] == 0.0
        assert phi[-1] < math.pi
        assert np.allclose(np.diff(phi), math.pi / small_geometry.n_angles)

    def test_sinogram_validation(self, small_geometry):
        with pytest.raises(DimensionMismatchError):
            ctfbp.Sinogram(geometry=small_geometry, values=np.zeros((3, 3)))
        bad = np.zeros((small_geometry.n_radial, small_geometry.n_angles))
        bad[0, 0] = np.nan
        with pytest.raises(DimensionMismatchError):
            ctfbp.Sinogram(geometry=small_geometry, values=bad)

    def test_value_at_signed_index(self, random_sinogram):
        m = random_sinogram.geometry.radial_half_count
        assert random_sinogram.value_at(-m, 0) == random_sinogram.values[0, 0]
        assert random_sinogram.value_at(0, 1) == random_sinogram.values[m, 1]
        with pytest.raises(IndexError):
            random_sinogram.value_at(m + 1, 0)
        with pytest.raises(IndexError):
            random_sinogram.value_at(0, random_sinogram.geometry.n_angles)


class TestDftRadial:
    def test_constant_row_at_zero(self):
        g = ctfbp.ParallelGeometry(
            n_angles=4, radial_half_count=1, radial_step=0.5,
            support_radius=0.5, bandwidth=2 * math.pi,
        )
        sino = ctfbp.Sinogram(geometry=g, values=np.ones((3, 4)))
        assert ctfbp.dft_radial(sino, 0.0, 0) == pytest.approx(1.5)

    def test_single_center_sample(self, small_geometry):
        values = np.zeros((small_geometry.n_radial, small_geometry.n_angles))
        values[small_geometry.radial_half_count, 0] = 1.0
        sino = ctfbp.Sinogram(geometry=small_geometry, values=values)
        for sigma in (0.0, 3.7, -11.0, 100.0):
            assert ctfbp.dft_radial(sino, sigma, 0) == pytest.approx(
                small_geometry.radial_step, rel=1e-15
            )

    def test_against_extended_precision_oracle(self, random_sinogram):
        g = random_sinogram.geometry
        s = g.radial_offsets()
        rng = np.random.default_rng(3)
        for sigma in rng.uniform(-g.bandwidth, g.bandwidth, size=8):
            got = ctfbp.dft_radial(random_sinogram, sigma, 2)
            want = dft_oracle(random_sinogram.values[:, 2], s, sigma, g.radial_step)
            assert abs(got - want) <= 1e-12 * abs(want)

    def test_angle_index_range(self, random_sinogram):
        with pytest.raises(IndexError):
            ctfbp.dft_radial(random_sinogram, 1.0, random_sinogram.geometry.n_angles)
        with pytest.raises(IndexError):
            ctfbp.dft_radial(random_sinogram, 1.0, -1)

    def test_conjugate_symmetry_exact(self, random_sinogram):
        rng = np.random.default_rng(4)
        for sigma in rng.uniform(0.0, 200.0, size=12):
            plus = ctfbp.dft_radial(random_sinogram, sigma, 1)
            minus = ctfbp.dft_radial(random_sinogram, -sigma, 1)
            assert minus == plus.conjugate()


class TestFrequencyGrid:
    def test_default_padding(self, small_geometry):
        grid = ctfbp.frequency_grid(small_geometry)
        m_ext = ctfbp.extended_half_count(small_geometry.radial_half_count)
        minimum = 2 * (2 * m_ext + 1)
        assert grid.pad_length >= minimum
        assert grid.pad_length >= 2 * small_geometry.n_radial
        assert grid.pad_length & (grid.pad_length - 1) == 0
        assert grid.pad_length // 2 < minimum  # smallest such power of two

    def test_grid_structure(self, small_geometry):
        grid = ctfbp.frequency_grid(small_geometry)
        f = grid.frequencies
        assert f.shape == (grid.pad_length + 1,)
        assert f[grid.pad_length // 2] == 0.0
        assert np.allclose(np.diff(f), grid.spacing, rtol=1e-12)
        np.testing.assert_array_equal(f, -f[::-1])
        # spans the Nyquist range of the radial sampling
        assert f[-1] == pytest.approx(math.pi / small_geometry.radial_step, rel=1e-12)

    def test_rejects_bad_padding(self, small_geometry):
        with pytest.raises(InvalidGeometryError):
            ctfbp.frequency_grid(small_geometry, pad_length=100)  # not a power of two
        with pytest.raises(InvalidGeometryError):
            ctfbp.frequency_grid(small_geometry, pad_length=64)  # too small


class TestDftRadialGrid:
    def test_zero_sinogram(self, small_geometry):
        sino = ctfbp.Sinogram(
            geometry=small_geometry,
            values=np.zeros((small_geometry.n_radial, small_geometry.n_angles)),
        )
        grid = ctfbp.frequency_grid(small_geometry)
        out = ctfbp.dft_radial_grid(sino, grid)
        assert out.shape == (grid.pad_length + 1, small_geometry.n_angles)
        np.testing.assert_array_equal(out, 0.0)

    def test_delta_row_constant_modulus(self, small_geometry):
        values = np.zeros((small_geometry.n_radial, small_geometry.n_angles))
        values[small_geometry.radial_half_count + 3, 0] = 1.0
        sino = ctfbp.Sinogram(geometry=small_geometry, values=values)
        grid = ctfbp.frequency_grid(small_geometry)
        out = ctfbp.dft_radial_grid(sino, grid)
        np.testing.assert_allclose(
            np.abs(out[:, 0]), small_geometry.radial_step, rtol=1e-12
        )

    def test_matches_per_frequency_op(self, random_sinogram):
        grid = ctfbp.frequency_grid(random_sinogram.geometry)
        out = ctfbp.dft_radial_grid(random_sinogram, grid)
        rng = np.random.default_rng(5)
        scale = np.max(np.abs(out))
        for k in rng.integers(0, grid.pad_length + 1, size=24):
            for j in (0, 7):
                want = ctfbp.dft_radial(random_sinogram, grid.frequencies[k], j)
                assert abs(out[k, j] - want) <= 1e-10 * scale

    def test_mismatched_grid(self, random_sinogram):
        other = ctfbp.geometry_from_angles(200, 1.0)
        grid = ctfbp.frequency_grid(other)
        with pytest.raises(DimensionMismatchError):
            ctfbp.dft_radial_grid(random_sinogram, grid)

    def test_parseval_consistency(self, random_sinogram):
        # 1/(2 pi) sum_k |F_D g|^2 dsigma == h sum_i g^2 (discrete Parseval;
        # trapezoid weights at the two identical band edges).
        g = random_sinogram.geometry
        grid = ctfbp.frequency_grid(g)
        out = ctfbp.dft_radial_grid(random_sinogram, grid)
        weights = np.ones(grid.pad_length + 1)
        weights[0] = weights[-1] = 0.5
        for j in (0, 3, 11):
            lhs = np.sum(weights * np.abs(out[:, j]) ** 2) * grid.spacing / (2 * math.pi)
            rhs = g.radial_step * np.sum(random_sinogram.values[:, j] ** 2)
            assert lhs == pytest.approx(rhs, rel=1e-6)


class TestCtsgFormat:
    def test_round_trip(self, random_sinogram, tmp_path):
        path = tmp_path / "test.ctsg"
        ctfbp.write_ctsg(random_sinogram, path)
        back = ctfbp.read_ctsg(path)
        np.testing.assert_array_equal(back.values, random_sinogram.values)
        assert back.geometry.radial_half_count == random_sinogram.geometry.radial_half_count
        assert back.geometry.n_angles == random_sinogram.geometry.n_angles
        assert back.geometry.radial_step == random_sinogram.geometry.radial_step
        assert back.geometry.support_radius == random_sinogram.geometry.support_radius

    def test_angle_major_layout(self, tmp_path):
        g = ctfbp.ParallelGeometry(
            n_angles=2, radial_half_count=1, radial_step=1.0,
            support_radius=1.0, bandwidth=math.pi,
        )
        values = np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])
        ctfbp.write_ctsg(ctfbp.Sinogram(geometry=g, values=values), tmp_path / "x.ctsg")
        blob = (tmp_path / "x.ctsg").read_bytes()
        payload = np.frombuffer(blob, dtype="<f8", offset=len(blob) - 6 * 8)
        np.testing.assert_array_equal(payload, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])

    def test_rejects_bad_magic(self, random_sinogram, tmp_path):
        path = tmp_path / "bad.ctsg"
        ctfbp.write_ctsg(random_sinogram, path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            ctfbp.read_ctsg(path)

    def test_rejects_bad_version(self, random_sinogram, tmp_path):
        path = tmp_path / "bad.ctsg"
        ctfbp.write_ctsg(random_sinogram, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            ctfbp.read_ctsg(path)

    def test_rejects_truncation(self, random_sinogram, tmp_path):
        path = tmp_path / "bad.ctsg"
        ctfbp.write_ctsg(random_sinogram, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(FormatError):
            ctfbp.read_ctsg(path)
