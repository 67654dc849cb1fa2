"""Square pixel images on the physical extent ``[-R, R]^2`` plus file formats.

Pixel ``(p, q)`` has its center at ``x = R (2q + 1 - n) / n`` and
``y = R (2p + 1 - n) / n``: the row index ``p`` follows the ``y`` coordinate,
so row 0 is the bottom of the scene when displayed with ``y`` pointing up.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, FormatError

_CTIM_MAGIC = b"CTIM"
_CTIM_VERSION = 1


@dataclass(frozen=True, eq=False)
class Image:
    """Reconstruction or phantom raster covering ``[-R, R]^2``."""

    support_radius: float
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise DimensionMismatchError(
                f"image values must be a square matrix with n >= 2, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatchError("image values must all be finite")
        if not self.support_radius > 0:
            raise DimensionMismatchError("support_radius must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_pixels(self) -> int:
        return self.values.shape[0]


def pixel_centers(n_pixels: int, support_radius: float) -> np.ndarray:
    """1-D pixel-center coordinates ``R (2p + 1 - n) / n``."""
    p = np.arange(n_pixels, dtype=np.float64)
    return support_radius * (2.0 * p + 1.0 - n_pixels) / n_pixels


def support_mask(image: Image) -> np.ndarray:
    """Boolean mask of pixels whose center lies inside the support disk."""
    c = pixel_centers(image.n_pixels, image.support_radius)
    x, y = np.meshgrid(c, c)
    return x * x + y * y <= image.support_radius**2


def write_ctim(image: Image, path) -> None:
    """Write an image in the binary "CTIM v1" format (row-major values)."""
    header = _CTIM_MAGIC + struct.pack(
        "<Iqd", _CTIM_VERSION, image.n_pixels, image.support_radius
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(image.values, dtype="<f8").tobytes())


def read_ctim(path) -> Image:
    with open(path, "rb") as fh:
        blob = fh.read()
    head = struct.calcsize("<4sIqd")
    if len(blob) < head:
        raise FormatError(f"{path}: truncated CTIM header")
    magic, version, n, radius = struct.unpack("<4sIqd", blob[:head])
    if magic != _CTIM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_CTIM_MAGIC!r}")
    if version != _CTIM_VERSION:
        raise FormatError(f"{path}: unsupported CTIM version {version}")
    if n < 2 or not radius > 0:
        raise FormatError(f"{path}: inconsistent CTIM header fields")
    expected = head + 8 * n * n
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<f8", count=n * n, offset=head).reshape(n, n)
    return Image(support_radius=float(radius), values=values)


def write_pgm16(image: Image, path) -> None:
    """Write a 16-bit binary PGM preview plus a sidecar window file.

    Values are mapped affinely from ``[min, max]`` to ``[0, 65535]``; the
    window is recorded in ``<path>.window.txt``.  Sample bytes are
    big-endian per the Netpbm convention.
    """
    lo = float(image.values.min())
    hi = float(image.values.max())
    if hi > lo:
        scaled = (image.values - lo) * (65535.0 / (hi - lo))
    else:
        scaled = np.zeros_like(image.values)
    quantized = np.clip(np.rint(scaled), 0, 65535).astype(">u2")
    n = image.n_pixels
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n} {n}\n65535\n".encode("ascii"))
        fh.write(quantized.tobytes())
    with open(f"{path}.window.txt", "w", encoding="ascii") as fh:
        fh.write(f"min {lo!r}\nmax {hi!r}\n")
