"""Noise models for simulated measurements.

Two layers are provided:

* discrete Gaussian white noise added to sinogram samples, driven by a
  counter-based generator (Philox) with Gaussian variates obtained by
  inverse-CDF transform of the raw uniform stream, so fields are bit-stable
  regardless of evaluation order or thread count;
* a correlated Gaussian lattice field with separable exponential (stationary
  Ornstein-Uhlenbeck) or box covariance, used to validate the white-noise
  approximation and the expected-spectrum formulas.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import FactorizationError, ParameterError
from .geometry import ParallelGeometry, Sinogram
from .phantoms import sinogram_mean

_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 64-bit seed for a sub-stream: ``base_seed XOR hash(parts)``.

    Accepts ints, floats and strings; the hash is platform-independent.
    """
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool) or not isinstance(part, (int, float, str)):
            raise ParameterError(f"cannot derive seed from {type(part).__name__} value {part!r}")
        if isinstance(part, int):
            digest.update(b"i" + part.to_bytes(16, "little", signed=True))
        elif isinstance(part, float):
            digest.update(b"f" + struct.pack("<d", part))
        else:
            digest.update(b"s" + part.encode("utf-8") + b"\x00")
    return (base_seed ^ int.from_bytes(digest.digest(), "little")) & _MASK64


def standard_normals(shape, seed: int) -> np.ndarray:
    """Deterministic N(0,1) array from a counter-based uniform stream.

    Uses the top 53 bits of each Philox 64-bit word, centered into (0, 1),
    mapped through the inverse normal CDF.  No rejection steps, so the
    draw count per element is fixed.
    """
    gen = np.random.Generator(np.random.Philox(key=seed & _MASK64))
    raw = gen.integers(0, _MASK64, size=shape, dtype=np.uint64, endpoint=True)
    uniform = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(uniform)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white-noise description: standard deviation, seed, and the
    relative level it was derived from (0 when set absolutely)."""

    level: float
    seed: int
    p_noise: float = 0.0

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError(f"noise level must be >= 0, got {self.level}")
        if self.p_noise < 0:
            raise ParameterError(f"p_noise must be >= 0, got {self.p_noise}")

    @classmethod
    def from_relative(cls, p_noise: float, sinogram: Sinogram, seed: int) -> "NoiseSpec":
        """Level set as ``p_noise`` times the mean absolute Radon sample."""
        return cls(level=noise_level(p_noise, sinogram), seed=seed, p_noise=p_noise)


def noise_level(p_noise: float, sinogram: Sinogram) -> float:
    """Absolute noise standard deviation ``p_noise * mean(|R f|)``."""
    if p_noise < 0:
        raise ParameterError(f"p_noise must be >= 0, got {p_noise}")
    return p_noise * sinogram_mean(sinogram)


def add_white_noise(sinogram: Sinogram, spec: NoiseSpec) -> Sinogram:
    """Add iid N(0, level^2) noise; the same spec reproduces identical output."""
    if spec.level == 0.0:
        return sinogram
    xi = standard_normals(sinogram.values.shape, spec.seed)
    return Sinogram(geometry=sinogram.geometry, values=sinogram.values + spec.level * xi)


@dataclass(frozen=True)
class OUCovariance:
    """Separable exponential covariance with 1-D factor ``(a/2) exp(-a|t|)``.

    The factor is an even Dirac sequence with unit integral; the lattice
    field variance is ``delta(0)^2 = a^2/4``.
    """

    rate: float
    support_radius: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"rate must be > 0, got {self.rate}")
        if not self.support_radius > 0:
            raise ParameterError(f"support_radius must be > 0, got {self.support_radius}")

    def delta(self, t) -> np.ndarray:
        return 0.5 * self.rate * np.exp(-self.rate * np.abs(t))


@dataclass(frozen=True)
class BoxCovariance:
    """Separable box covariance with 1-D factor ``a`` on ``|t| <= 1/(2a)``.

    With ``a`` above both reciprocal lattice spacings, distinct lattice
    points are exactly uncorrelated.
    """

    rate: float
    support_radius: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"rate must be > 0, got {self.rate}")
        if not self.support_radius > 0:
            raise ParameterError(f"support_radius must be > 0, got {self.support_radius}")

    def delta(self, t) -> np.ndarray:
        return self.rate * (np.abs(t) <= 0.5 / self.rate)


_EXACT_LATTICE_LIMIT = 4096


def _cholesky(matrix: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.max(np.diag(matrix)))
        try:
            return np.linalg.cholesky(matrix + jitter * np.eye(matrix.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                "covariance matrix is not positive definite (after jitter)"
            ) from exc


def _ar1_apply(z: np.ndarray, axis: int, variance: float, rho: float) -> np.ndarray:
    """Multiply by the Cholesky factor of a stationary AR(1) covariance.

    The recursion ``y_k = rho y_{k-1} + sqrt(v (1 - rho^2)) z_k`` with
    ``y_0 = sqrt(v) z_0`` realizes exactly the lower-triangular factor of the
    covariance ``v rho^{|i-j|}`` on sorted equispaced points.
    """
    z = np.moveaxis(z, axis, 0)
    out = np.empty_like(z)
    out[0] = math.sqrt(variance) * z[0]
    step = math.sqrt(variance * (1.0 - rho * rho))
    for k in range(1, z.shape[0]):
        out[k] = rho * out[k - 1] + step * z[k]
    return np.moveaxis(out, 0, axis)


def sample_ou_field(geometry: ParallelGeometry, cov, seed: int) -> Sinogram:
    """One realization of the zero-mean Gaussian lattice field with separable
    covariance ``delta(s_i - s_k) * delta(phi_j - phi_l)``.

    Lattices with at most 4096 points are sampled exactly through a Cholesky
    factorization of the assembled covariance matrix; larger exponential
    lattices use the equivalent AR(1) recursion along each axis.  The angular
    factor is evaluated on plain angle differences, without wrap-around.
    """
    s = geometry.radial_offsets()
    phi = geometry.angles()
    n = s.size * phi.size
    if n <= _EXACT_LATTICE_LIMIT:
        cov_s = cov.delta(s[:, None] - s[None, :])
        cov_phi = cov.delta(phi[:, None] - phi[None, :])
        factor = _cholesky(np.kron(cov_s, cov_phi))
        z = standard_normals(n, seed)
        values = (factor @ z).reshape(s.size, phi.size)
        return Sinogram(geometry=geometry, values=values)

    z = standard_normals((s.size, phi.size), seed)
    if isinstance(cov, BoxCovariance):
        spacing = min(geometry.radial_step, math.pi / geometry.n_angles)
        if 0.5 / cov.rate < spacing:
            return Sinogram(geometry=geometry, values=cov.rate * z)
        raise FactorizationError(
            "box covariance coupling lattice neighbours has no recursion form; "
            "use a lattice with at most 4096 points"
        )
    variance = float(cov.delta(0.0))
    values = _ar1_apply(z, 0, variance, math.exp(-cov.rate * geometry.radial_step))
    values = _ar1_apply(values, 1, variance, math.exp(-cov.rate * math.pi / geometry.n_angles))
    return Sinogram(geometry=geometry, values=values)


def ou_spectrum_expectation(sigma: float, cov: OUCovariance) -> float:
    """Expected squared radial spectrum of the exponential-covariance field.

    Closed form of ``int int over [-R,R]^2 of delta_a(s - t, 0) exp(-i (s - t)
    sigma) ds dt`` with the separable kernel peak ``delta_a(u, 0) = (a^2/4)
    exp(-a|u|)``:

        a^2 [ aR/(a^2+s^2)
              + ( (exp(-2aR) cos(2Rs) - 1)(a^2 - s^2)/2
                  - a s exp(-2aR) sin(2Rs) ) / (a^2 + s^2)^2 ]

    Even in ``sigma`` by construction (evaluated on ``|sigma|``).
    """
    a = cov.rate
    r = cov.support_radius
    sig = abs(float(sigma))
    a2 = a * a
    s2 = sig * sig
    denom = a2 + s2
    decay = math.exp(-2.0 * a * r)
    oscillating = (
        0.5 * (decay * math.cos(2.0 * r * sig) - 1.0) * (a2 - s2)
        - a * sig * decay * math.sin(2.0 * r * sig)
    )
    return a2 * (a * r / denom + oscillating / (denom * denom))


def expected_discrete_noise_power(
    geometry: ParallelGeometry, epsilon: float, delta0: float = 1.0
) -> float:
    """Expected squared radial DFT of lattice white noise: ``h^2 eps^2 (2M+1) delta0``.

    ``delta0`` is the covariance peak of the underlying approximate-noise
    model; with the rescaled convention (noise variance given directly as
    ``eps^2``) it is 1, the default.
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    if not delta0 > 0:
        raise ParameterError(f"delta0 must be > 0, got {delta0}")
    h = geometry.radial_step
    return h * h * epsilon * epsilon * geometry.n_radial * delta0
