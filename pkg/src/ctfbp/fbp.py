"""Discrete filtered back projection.

The reconstruction evaluates

    f(x, y) = 1/2 * 1/N_phi * sum_j I[row_j](x cos(phi_j) + y sin(phi_j))

where ``row_j`` is the filtered sinogram column

    row_j(s_l) = h * sum_i K(l - i) g(i, j),

``K(m)`` is the inverse transform of the filter obtained by trapezoid
quadrature on the shared frequency grid, and ``I`` interpolates the row
(linear or natural cubic spline) with value 0 outside the extended radial
range.  Row filtering is realized as one zero-padded FFT convolution per
angle; the quadrature kernel is periodic with the pad length, and the pad is
large enough that all required lags are represented without collision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DimensionMismatchError, ParameterError
from .filters import FilterSpec
from .geometry import ParallelGeometry, Sinogram, extended_half_count
from .image import Image, pixel_centers

INTERPOLATIONS = ("linear", "cubic_spline")


@dataclass(frozen=True, eq=False)
class FilteredSinogram:
    """Filtered rows on the extended radial lattice ``l = -M_ext..M_ext``."""

    geometry: ParallelGeometry
    values: np.ndarray

    def __post_init__(self):
        m_ext = extended_half_count(self.geometry.radial_half_count)
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (2 * m_ext + 1, self.geometry.n_angles):
            raise DimensionMismatchError(
                f"filtered values must have shape {(2 * m_ext + 1, self.geometry.n_angles)}, "
                f"got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatchError("filtered values must all be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def extended_half_count(self) -> int:
        return extended_half_count(self.geometry.radial_half_count)

    def radial_offsets(self) -> np.ndarray:
        m_ext = self.extended_half_count
        return np.arange(-m_ext, m_ext + 1, dtype=np.float64) * self.geometry.radial_step


def filter_rows(sinogram: Sinogram, filter_spec: FilterSpec) -> FilteredSinogram:
    """Convolve every sinogram column with the filter kernel.

    Equivalent to the direct sum ``h sum_i K(l - i) g(i, j)`` with the
    trapezoid-quadrature kernel ``K(m) = spacing/(2 pi) * sum_k A(sigma_k)
    exp(i m h sigma_k)``; the ``h`` of the outer sum cancels against the
    kernel normalization, leaving one FFT multiply per column.
    """
    geometry = sinogram.geometry
    grid = filter_spec.grid
    if grid.radial_step != geometry.radial_step:
        raise DimensionMismatchError(
            f"filter grid radial step {grid.radial_step} does not match the "
            f"sinogram ({geometry.radial_step})"
        )
    m = geometry.radial_half_count
    m_ext = extended_half_count(m)
    p = grid.pad_length
    if p < 2 * (m + m_ext) + 1:
        raise DimensionMismatchError(
            f"pad_length {p} too small for radial range |l| <= {m_ext}; need >= {2 * (m + m_ext) + 1}"
        )

    # Filter samples rearranged into FFT bin order (bin k holds the signed
    # frequency index ((k + P/2) mod P) - P/2).
    bins = np.arange(p)
    signed = (bins + p // 2) % p - p // 2
    response = filter_spec.samples[signed + p // 2]

    padded = np.zeros((p, geometry.n_angles))
    padded[: geometry.n_radial, :] = sinogram.values
    filtered = np.fft.ifft(response[:, None] * np.fft.fft(padded, axis=0), axis=0).real

    lags = np.arange(-m_ext, m_ext + 1)
    return FilteredSinogram(geometry=geometry, values=filtered[(lags + m) % p, :])


def back_project(filtered: FilteredSinogram, n_pixels: int, interpolation: str = "linear") -> Image:
    """Average interpolated filtered rows over all angles, halved.

    Pixel centers follow the :mod:`ctfbp.image` convention; points outside
    the extended radial range contribute 0.  The angle sum is sequential, so
    results do not depend on thread counts.
    """
    if n_pixels < 2:
        raise ParameterError(f"n_pixels must be >= 2, got {n_pixels}")
    if interpolation not in INTERPOLATIONS:
        raise ParameterError(
            f"unknown interpolation {interpolation!r}; expected one of {INTERPOLATIONS}"
        )
    geometry = filtered.geometry
    centers = pixel_centers(n_pixels, geometry.support_radius)
    x = centers[None, :]
    y = centers[:, None]
    s_ext = filtered.radial_offsets()
    accumulator = np.zeros((n_pixels, n_pixels))
    for j, phi in enumerate(geometry.angles()):
        t = x * np.cos(phi) + y * np.sin(phi)
        row = filtered.values[:, j]
        if interpolation == "linear":
            contribution = np.interp(t, s_ext, row, left=0.0, right=0.0)
        else:
            spline = CubicSpline(s_ext, row, bc_type="natural")
            contribution = spline(t)
            contribution[(t < s_ext[0]) | (t > s_ext[-1])] = 0.0
        accumulator += contribution
    values = accumulator * (0.5 / geometry.n_angles)
    return Image(support_radius=geometry.support_radius, values=values)


def reconstruct(
    sinogram: Sinogram,
    filter_spec: FilterSpec,
    n_pixels: int,
    interpolation: str = "linear",
) -> Image:
    """Filtered back projection: row filtering followed by back projection."""
    return back_project(filter_rows(sinogram, filter_spec), n_pixels, interpolation)
