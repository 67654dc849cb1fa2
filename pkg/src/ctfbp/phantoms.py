"""Analytic test objects with closed-form Radon transforms.

Three shape families are supported, each given by an affine placement
(center, semi-axes, rotation) of a unit template:

* ``ellipse`` -- indicator of the unit disk; line integrals are chord
  lengths scaled by the intensity.
* ``smooth_bump`` -- polynomial profile ``(1 - x^2 - y^2)^nu`` on the unit
  disk; line integrals follow from the Beta integral
  ``int_-1^1 (1 - t^2)^nu dt = sqrt(pi) Gamma(nu+1) / Gamma(nu+3/2)``.
* ``rectangle`` -- indicator of ``[-a, a] x [-b, b]`` (``semi_axes`` act as
  half-widths); line integrals are segment lengths from interval clipping.

Intensities add where shapes overlap, as in the classical head phantom
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gamma as _gamma

from .errors import FormatError, ParameterError, SupportViolationError
from .geometry import ParallelGeometry, Sinogram, geometry_from_angles
from .image import Image, pixel_centers

SHAPE_KINDS = ("ellipse", "smooth_bump", "rectangle")

_BIG = 1e30


@dataclass(frozen=True)
class Shape:
    """One affinely placed template shape.

    ``semi_axes`` are the ellipse/bump semi-axes or the rectangle
    half-widths; ``rotation`` is in radians; ``smoothness`` is the bump
    exponent ``nu`` and is ignored by the other kinds.
    """

    kind: str
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float = 0.0
    intensity: float = 1.0
    smoothness: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ParameterError(f"unknown shape kind {self.kind!r}; expected one of {SHAPE_KINDS}")
        a, b = self.semi_axes
        if not (a > 0 and b > 0):
            raise ParameterError(f"semi_axes must be positive, got {self.semi_axes}")
        if self.kind == "smooth_bump" and self.smoothness < 0:
            raise ParameterError(f"smoothness must be >= 0, got {self.smoothness}")

    def boundary_radius(self, samples: int = 4096) -> float:
        """Largest distance from the origin to the shape boundary.

        Rectangles are exact via their corners; ellipse-like boundaries are
        sampled.
        """
        x0, y0 = self.center
        a, b = self.semi_axes
        if self.kind == "rectangle":
            c, s = math.cos(self.rotation), math.sin(self.rotation)
            corners = [(sx * a, sy * b) for sx in (-1, 1) for sy in (-1, 1)]
            return max(
                math.hypot(x0 + c * u - s * v, y0 + s * u + c * v) for u, v in corners
            )
        t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        u, v = a * np.cos(t), b * np.sin(t)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return float(np.max(np.hypot(x0 + c * u - s * v, y0 + s * u + c * v)))


@dataclass(frozen=True)
class Phantom:
    """An ordered list of shapes supported inside the disk of radius ``R``."""

    shapes: tuple[Shape, ...]
    support_radius: float

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.support_radius > 0:
            raise ParameterError("support_radius must be positive")
        slack = 1e-12 * self.support_radius
        for index, shape in enumerate(self.shapes):
            r = shape.boundary_radius()
            if r > self.support_radius + slack:
                raise SupportViolationError(
                    f"shape {index} ({shape.kind}) reaches radius {r:.6g}, outside "
                    f"the support disk of radius {self.support_radius:.6g}"
                )


def _bump_amplitude(nu: float) -> float:
    # int_-1^1 (1 - t^2)^nu dt
    return math.sqrt(math.pi) * _gamma(nu + 1.0) / _gamma(nu + 1.5)


def _line_params(shape: Shape, s, phi):
    """Offset tau and effective half-axis^2 of the line in shape coordinates."""
    x0, y0 = shape.center
    a, b = shape.semi_axes
    tau = np.asarray(s, dtype=np.float64) - (x0 * math.cos(phi) + y0 * math.sin(phi))
    psi = phi - shape.rotation
    ell2 = (a * math.cos(psi)) ** 2 + (b * math.sin(psi)) ** 2
    return tau, psi, ell2


def _radon_ellipse(shape: Shape, s, phi):
    a, b = shape.semi_axes
    tau, _, ell2 = _line_params(shape, s, phi)
    inside = tau * tau <= ell2
    chord = np.zeros_like(tau)
    np.place(chord, inside, 2.0 * a * b / ell2 * np.sqrt(ell2 - tau[inside] ** 2))
    return shape.intensity * chord


def _radon_bump(shape: Shape, s, phi):
    a, b = shape.semi_axes
    nu = shape.smoothness
    tau, _, ell2 = _line_params(shape, s, phi)
    ell = math.sqrt(ell2)
    inside = tau * tau <= ell2
    out = np.zeros_like(tau)
    profile = (1.0 - tau[inside] ** 2 / ell2) ** (nu + 0.5)
    np.place(out, inside, _bump_amplitude(nu) * a * b / ell * profile)
    return shape.intensity * out


def _radon_rectangle(shape: Shape, s, phi):
    a, b = shape.semi_axes
    tau, psi, _ = _line_params(shape, s, phi)
    cp, sp = math.cos(psi), math.sin(psi)
    # Line point: (u, v)(t) = tau (cp, sp) + t (-sp, cp); clip t against
    # |u| <= a and |v| <= b, representing unconstrained directions by +-BIG.
    if sp != 0.0:
        bounds = np.sort(np.stack([(tau * cp - a) / sp, (tau * cp + a) / sp]), axis=0)
        lo_u, hi_u = bounds[0], bounds[1]
    else:
        feasible = np.abs(tau * cp) <= a
        lo_u = np.where(feasible, -_BIG, _BIG)
        hi_u = np.where(feasible, _BIG, -_BIG)
    if cp != 0.0:
        bounds = np.sort(np.stack([(-b - tau * sp) / cp, (b - tau * sp) / cp]), axis=0)
        lo_v, hi_v = bounds[0], bounds[1]
    else:
        feasible = np.abs(tau * sp) <= b
        lo_v = np.where(feasible, -_BIG, _BIG)
        hi_v = np.where(feasible, _BIG, -_BIG)
    length = np.minimum(hi_u, hi_v) - np.maximum(lo_u, lo_v)
    return shape.intensity * np.maximum(length, 0.0)


_RADON = {
    "ellipse": _radon_ellipse,
    "smooth_bump": _radon_bump,
    "rectangle": _radon_rectangle,
}


def radon_analytic(phantom: Phantom, s, phi: float):
    """Line integrals of the phantom over ``{x cos(phi) + y sin(phi) = s}``.

    ``s`` may be a scalar or an array; the result is 0 for ``|s| > R``.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    total = np.zeros_like(s_arr)
    for shape in phantom.shapes:
        total += _RADON[shape.kind](shape, s_arr, float(phi))
    total[np.abs(s_arr) > phantom.support_radius] = 0.0
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(total[0])
    return total


def radon_sample(phantom: Phantom, geometry: ParallelGeometry) -> Sinogram:
    """Sample the analytic Radon transform on the geometry lattice."""
    if geometry.support_radius < phantom.support_radius:
        raise SupportViolationError(
            f"geometry support radius {geometry.support_radius} is smaller than "
            f"the phantom support radius {phantom.support_radius}"
        )
    s = geometry.radial_offsets()
    values = np.empty((geometry.n_radial, geometry.n_angles))
    for j, phi in enumerate(geometry.angles()):
        values[:, j] = radon_analytic(phantom, s, phi)
    return Sinogram(geometry=geometry, values=values)


def phantom_values(phantom: Phantom, x, y) -> np.ndarray:
    """Pointwise phantom values (sum of shape intensities) at ``(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    total = np.zeros(np.broadcast(x, y).shape)
    for shape in phantom.shapes:
        x0, y0 = shape.center
        a, b = shape.semi_axes
        c, s = math.cos(shape.rotation), math.sin(shape.rotation)
        u = c * (x - x0) + s * (y - y0)
        v = -s * (x - x0) + c * (y - y0)
        if shape.kind == "rectangle":
            total += shape.intensity * ((np.abs(u) <= a) & (np.abs(v) <= b))
        else:
            q2 = (u / a) ** 2 + (v / b) ** 2
            if shape.kind == "ellipse":
                total += shape.intensity * (q2 <= 1.0)
            else:
                inside = q2 <= 1.0
                bump = np.zeros_like(total)
                np.place(bump, inside, (1.0 - q2[inside]) ** shape.smoothness)
                total += shape.intensity * bump
    return total


def rasterize(phantom: Phantom, n_pixels: int) -> Image:
    """Evaluate the phantom at pixel centers of an ``n x n`` grid on ``[-R, R]^2``.

    Pointwise sampling, no anti-aliasing; this is the ground-truth raster used
    for error metrics.
    """
    if n_pixels < 2:
        raise ParameterError(f"n_pixels must be >= 2, got {n_pixels}")
    c = pixel_centers(n_pixels, phantom.support_radius)
    x, y = np.meshgrid(c, c)
    return Image(support_radius=phantom.support_radius, values=phantom_values(phantom, x, y))


def sinogram_mean(sinogram: Sinogram) -> float:
    """Arithmetic mean of ``|values|`` over the full sampling lattice."""
    return float(np.mean(np.abs(sinogram.values)))


# Canonical head phantom (original intensities): one row per ellipse as
# (intensity, semi_axis_a, semi_axis_b, x0, y0, rotation_degrees).
SHEPP_LOGAN_TABLE = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

# Default rough components of the modified head phantom: two rectangles of
# different sizes in the lower half, intensities on the interior-detail
# scale.  Not canonical; override via modified_shepp_logan(rectangles=...).
DEFAULT_RECTANGLES = (
    Shape(
        kind="rectangle",
        center=(-0.22, -0.38),
        semi_axes=(0.30, 0.10),
        rotation=0.0,
        intensity=0.012,
    ),
    Shape(
        kind="rectangle",
        center=(0.28, -0.28),
        semi_axes=(0.12, 0.05),
        rotation=0.4,
        intensity=0.015,
    ),
)


def shepp_logan() -> Phantom:
    """The ten-ellipse head phantom with support inside the unit disk."""
    shapes = tuple(
        Shape(
            kind="ellipse",
            center=(x0, y0),
            semi_axes=(a, b),
            rotation=math.radians(deg),
            intensity=intensity,
        )
        for intensity, a, b, x0, y0, deg in SHEPP_LOGAN_TABLE
    )
    return Phantom(shapes=shapes, support_radius=1.0)


def modified_shepp_logan(
    rectangles=None,
    nu: float = 1.5,
    geometry: ParallelGeometry | None = None,
) -> Phantom:
    """Head phantom with smoothed ellipse profiles and added rectangles.

    Every ellipse indicator is replaced by the ``(1 - r^2)^nu`` bump profile
    with the same placement and intensity, the given rectangles are appended,
    and all intensities are rescaled so that the mean absolute Radon sample
    over the ``geometry`` lattice matches the unmodified head phantom on the
    same lattice.

    ``geometry`` defaults to the lattice of ``geometry_from_angles(360, 1)``;
    pass the experiment lattice to normalize per experiment.
    """
    if not nu > 0:
        raise ParameterError(f"nu must be > 0, got {nu}")
    if rectangles is None:
        rectangles = DEFAULT_RECTANGLES
    rectangles = tuple(rectangles)
    for index, rectangle in enumerate(rectangles):
        if rectangle.kind != "rectangle":
            raise ParameterError(f"added shape {index} must be a rectangle, got {rectangle.kind!r}")
        if rectangle.boundary_radius() > 1.0 + 1e-12:
            raise SupportViolationError(
                f"rectangle {index} reaches radius {rectangle.boundary_radius():.6g}, "
                "outside the unit support disk"
            )
    if geometry is None:
        geometry = geometry_from_angles(360, 1.0)

    reference = shepp_logan()
    smoothed = tuple(
        replace(shape, kind="smooth_bump", smoothness=nu) for shape in reference.shapes
    )
    unscaled = Phantom(shapes=smoothed + rectangles, support_radius=1.0)

    mean_reference = sinogram_mean(radon_sample(reference, geometry))
    mean_unscaled = sinogram_mean(radon_sample(unscaled, geometry))
    if mean_unscaled == 0.0:
        raise ParameterError("modified phantom has zero mean Radon transform")
    factor = mean_reference / mean_unscaled
    rescaled = tuple(
        replace(shape, intensity=shape.intensity * factor) for shape in unscaled.shapes
    )
    return Phantom(shapes=rescaled, support_radius=1.0)


def parse_phantom_text(text: str, name: str = "<phantom>") -> tuple[Shape, ...]:
    """Parse the line-oriented phantom description format.

    One shape per line: ``kind x0 y0 a b theta intensity [nu]``; ``#`` starts
    a comment.  Malformed lines raise :class:`FormatError` with the line
    number.
    """
    shapes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (7, 8):
            raise FormatError(
                f"{name}:{lineno}: expected 'kind x0 y0 a b theta intensity [nu]', "
                f"got {len(tokens)} fields"
            )
        kind = tokens[0]
        if kind not in SHAPE_KINDS:
            raise FormatError(f"{name}:{lineno}: unknown shape kind {kind!r}")
        try:
            numbers = [float(tok) for tok in tokens[1:]]
        except ValueError as exc:
            raise FormatError(f"{name}:{lineno}: {exc}") from None
        nu = numbers[6] if len(numbers) == 7 else 0.0
        try:
            shapes.append(
                Shape(
                    kind=kind,
                    center=(numbers[0], numbers[1]),
                    semi_axes=(numbers[2], numbers[3]),
                    rotation=numbers[4],
                    intensity=numbers[5],
                    smoothness=nu,
                )
            )
        except ParameterError as exc:
            raise FormatError(f"{name}:{lineno}: {exc}") from None
    return tuple(shapes)


def load_phantom_file(path, support_radius: float | None = None) -> Phantom:
    """Load a phantom description file.

    The format carries no support radius; when not given, the smallest
    integer radius (at least 1) covering all shapes is used.
    """
    with open(path, "r", encoding="utf-8") as fh:
        shapes = parse_phantom_text(fh.read(), name=str(path))
    if not shapes:
        raise FormatError(f"{path}: no shapes defined")
    if support_radius is None:
        reach = max(shape.boundary_radius() for shape in shapes)
        support_radius = max(1.0, math.ceil(reach - 1e-12))
    return Phantom(shapes=shapes, support_radius=float(support_radius))
