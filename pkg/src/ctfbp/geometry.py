"""Parallel-beam sampling geometry, frequency grids and the radial DFT.

Conventions used throughout the package (fixed once here):

* Radial Fourier transform  ``F h(sigma) = int h(s) exp(-i s sigma) ds`` and
  inverse ``F^-1 A(s) = 1/(2 pi) int A(sigma) exp(i s sigma) dsigma``.
* Radial samples ``s_i = i h`` for ``i = -M..M``; angles
  ``phi_j = j pi / n_angles`` for ``j = 0..n_angles-1``.
* Sinogram storage is a ``(2M+1, n_angles)`` float array with row index
  ``u = i + M``; all public interfaces speak in the signed index ``i``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, FormatError, InvalidGeometryError

_CTSG_MAGIC = b"CTSG"
_CTSG_VERSION = 1


def _readonly(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if shape is not None and arr.shape != shape:
        raise DimensionMismatchError(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ParallelGeometry:
    """Sampling lattice of a parallel scanning geometry.

    Parameters
    ----------
    n_angles : int
        Number of equispaced view angles in ``[0, pi)``.
    radial_half_count : int
        ``M``; radial samples run over ``i = -M..M``.
    radial_step : float
        Spacing ``h`` between radial samples.
    support_radius : float
        Radius ``R`` of the object support disk.
    bandwidth : float
        Frequency cutoff ``L`` of the reconstruction filter.
    """

    n_angles: int
    radial_half_count: int
    radial_step: float
    support_radius: float
    bandwidth: float

    def __post_init__(self):
        if self.n_angles < 1:
            raise InvalidGeometryError("n_angles must be positive")
        if self.radial_half_count < 1:
            raise InvalidGeometryError("radial_half_count must be positive")
        if not (self.radial_step > 0 and math.isfinite(self.radial_step)):
            raise InvalidGeometryError("radial_step must be a positive finite number")
        if not (self.support_radius > 0 and math.isfinite(self.support_radius)):
            raise InvalidGeometryError("support_radius must be a positive finite number")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise InvalidGeometryError("bandwidth must be a positive finite number")
        if self.radial_half_count * self.radial_step < self.support_radius:
            raise InvalidGeometryError(
                "radial samples do not cover the support: M*h = "
                f"{self.radial_half_count * self.radial_step} < R = {self.support_radius}"
            )

    @property
    def n_radial(self) -> int:
        return 2 * self.radial_half_count + 1

    def radial_offsets(self) -> np.ndarray:
        """Sample positions ``s_i = i h`` for ``i = -M..M``."""
        m = self.radial_half_count
        return np.arange(-m, m + 1, dtype=np.float64) * self.radial_step

    def angles(self) -> np.ndarray:
        """View angles ``phi_j = j pi / n_angles``."""
        return np.arange(self.n_angles, dtype=np.float64) * (np.pi / self.n_angles)


def geometry_from_angles(n_angles: int, support_radius: float) -> ParallelGeometry:
    """Build the geometry whose radial sampling is matched to the angle count.

    Uses the standard coupling ``M = floor(n_angles/pi)``, ``L = pi M / R``
    and ``h = pi / L``, so that ``M h = R``.  The radial step is nudged up by
    at most a couple of ulps where IEEE rounding would land ``M h`` below
    ``R``.
    """
    if int(n_angles) != n_angles or n_angles < 4:
        raise InvalidGeometryError(
            f"n_angles must be an integer >= 4 so that M >= 1, got {n_angles!r}"
        )
    if not (support_radius > 0 and math.isfinite(support_radius)):
        raise InvalidGeometryError("support_radius must be a positive finite number")
    m = int(n_angles / math.pi)
    h = support_radius / m
    while m * h < support_radius:
        h = math.nextafter(h, math.inf)
    return ParallelGeometry(
        n_angles=int(n_angles),
        radial_half_count=m,
        radial_step=h,
        support_radius=float(support_radius),
        bandwidth=math.pi / h,
    )


def extended_half_count(radial_half_count: int) -> int:
    """Half count of the filtered-row index range.

    Filtered rows are later evaluated at ``x cos(phi) + y sin(phi)`` for
    ``(x, y)`` anywhere in ``[-R, R]^2``, which reaches ``sqrt(2) R``; two
    extra samples guard the cubic interpolation stencil.
    """
    return math.ceil(math.sqrt(2.0) * radial_half_count) + 2


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Radon samples ``values[i + M, j]`` on a :class:`ParallelGeometry` lattice."""

    geometry: ParallelGeometry
    values: np.ndarray

    def __post_init__(self):
        shape = (self.geometry.n_radial, self.geometry.n_angles)
        arr = _readonly(self.values, shape)
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatchError("sinogram values must all be finite")
        object.__setattr__(self, "values", arr)

    def value_at(self, i: int, j: int) -> float:
        """Entry at signed radial index ``i`` and angle index ``j``."""
        m = self.geometry.radial_half_count
        if not -m <= i <= m:
            raise IndexError(f"radial index {i} outside -{m}..{m}")
        if not 0 <= j < self.geometry.n_angles:
            raise IndexError(f"angle index {j} outside 0..{self.geometry.n_angles - 1}")
        return float(self.values[i + m, j])


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Symmetric equispaced frequency grid shared by filters and row filtering.

    ``pad_length`` is the power-of-two FFT length ``P``; frequencies are
    ``sigma_k = k * 2 pi / (P h)`` for ``k = -P/2..P/2``, spanning the Nyquist
    range ``[-pi/h, pi/h]`` of the radial lattice.
    """

    pad_length: int
    radial_step: float
    frequencies: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.frequencies, (self.pad_length + 1,))
        object.__setattr__(self, "frequencies", arr)

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / (self.pad_length * self.radial_step)

    def signed_indices(self) -> np.ndarray:
        p = self.pad_length
        return np.arange(-(p // 2), p // 2 + 1)


def frequency_grid(geometry: ParallelGeometry, pad_length: int | None = None) -> FrequencyGrid:
    """Frequency grid for ``geometry``.

    The default ``pad_length`` is the smallest power of two at least
    ``2 (2 M_ext + 1)`` with ``M_ext`` from :func:`extended_half_count`; this
    keeps the discrete convolution in the reconstruction free of index
    wrap-around over the extended radial range and is in particular at least
    ``2 (2M + 1)``.
    """
    m = geometry.radial_half_count
    minimum = 2 * (2 * extended_half_count(m) + 1)
    if pad_length is None:
        pad_length = 1
        while pad_length < minimum:
            pad_length *= 2
    else:
        if pad_length < minimum or pad_length & (pad_length - 1) != 0:
            raise InvalidGeometryError(
                f"pad_length must be a power of two >= {minimum}, got {pad_length}"
            )
    spacing = 2.0 * math.pi / (pad_length * geometry.radial_step)
    ks = np.arange(-(pad_length // 2), pad_length // 2 + 1, dtype=np.float64)
    return FrequencyGrid(
        pad_length=pad_length,
        radial_step=geometry.radial_step,
        frequencies=ks * spacing,
    )


def _check_grid(sinogram: Sinogram, grid: FrequencyGrid):
    geom = sinogram.geometry
    if grid.radial_step != geom.radial_step:
        raise DimensionMismatchError(
            "frequency grid was built for radial step "
            f"{grid.radial_step}, sinogram has {geom.radial_step}"
        )
    if grid.pad_length < geom.n_radial:
        raise DimensionMismatchError(
            f"pad_length {grid.pad_length} too small for {geom.n_radial} radial samples"
        )


def dft_radial(sinogram: Sinogram, frequency: float, angle_index: int) -> complex:
    """Radial DFT ``h * sum_i g(i, j) exp(-i s_i sigma)`` of one sinogram column.

    Conjugate-symmetric in ``sigma`` for the real-valued data stored here.
    """
    geom = sinogram.geometry
    if not 0 <= angle_index < geom.n_angles:
        raise IndexError(f"angle index {angle_index} outside 0..{geom.n_angles - 1}")
    s = geom.radial_offsets()
    phases = np.exp(-1j * s * float(frequency))
    return complex(geom.radial_step * np.sum(sinogram.values[:, angle_index] * phases))


def dft_radial_grid(sinogram: Sinogram, grid: FrequencyGrid) -> np.ndarray:
    """Radial DFT of all columns on all grid frequencies, via zero-padded FFT.

    Returns a complex array of shape ``(pad_length + 1, n_angles)`` whose
    entry ``(k, j)`` equals ``dft_radial(sinogram, sigma_k, j)``; row ``k``
    corresponds to ``grid.frequencies[k]``.
    """
    _check_grid(sinogram, grid)
    geom = sinogram.geometry
    p = grid.pad_length
    padded = np.zeros((p, geom.n_angles))
    padded[: geom.n_radial, :] = sinogram.values
    transformed = np.fft.fft(padded, axis=0)
    ks = grid.signed_indices()
    # fft bins index the shifted sample u = i + M; undo the shift by M.
    phase = np.exp(2j * np.pi * geom.radial_half_count * ks / p)
    return geom.radial_step * phase[:, None] * transformed[ks % p, :]


def write_ctsg(sinogram: Sinogram, path) -> None:
    """Write a sinogram in the binary "CTSG v1" format (angle-major values)."""
    geom = sinogram.geometry
    header = _CTSG_MAGIC + struct.pack(
        "<Iqqdd",
        _CTSG_VERSION,
        geom.radial_half_count,
        geom.n_angles,
        geom.radial_step,
        geom.support_radius,
    )
    payload = np.ascontiguousarray(sinogram.values.T, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_ctsg(path) -> Sinogram:
    """Read a "CTSG v1" sinogram.

    The format does not carry the bandwidth; it is restored via the sampling
    relation ``L = pi / h``.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    head = struct.calcsize("<4sIqqdd")
    if len(blob) < head:
        raise FormatError(f"{path}: truncated CTSG header")
    magic, version, m, n_angles, h, radius = struct.unpack("<4sIqqdd", blob[:head])
    if magic != _CTSG_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_CTSG_MAGIC!r}")
    if version != _CTSG_VERSION:
        raise FormatError(f"{path}: unsupported CTSG version {version}")
    if m < 1 or n_angles < 1 or not h > 0 or not radius > 0:
        raise FormatError(f"{path}: inconsistent CTSG header fields")
    count = (2 * m + 1) * n_angles
    expected = head + 8 * count
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=head)
    geometry = ParallelGeometry(
        n_angles=int(n_angles),
        radial_half_count=int(m),
        radial_step=float(h),
        support_radius=float(radius),
        bandwidth=math.pi / float(h),
    )
    return Sinogram(geometry=geometry, values=values.reshape(n_angles, 2 * m + 1).T)
