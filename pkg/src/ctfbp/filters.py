"""Frequency-domain reconstruction filters.

A filter is ``A_L(sigma) = |sigma| W(sigma/L)`` with an even window ``W``
supported in ``[-1, 1]``.  Besides the four classical windows, this module
builds the spectrum-adaptive filter family

    A(sigma) = |sigma| S(sigma) / (S(sigma) + h^2 eps^2 (2M+1))

on ``[-L, L]``, where ``S`` is the angle-averaged squared radial DFT of a
sinogram (the noiseless reference, the raw measurements, or a Wiener-denoised
copy of the measurements) and the additive term is the expected noise power of
the lattice white noise.  For ``eps = 0`` the family degenerates to the
Ram-Lak filter (ramp on ``[-L, L]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import DimensionMismatchError, ParameterError
from .geometry import FrequencyGrid, Sinogram, dft_radial_grid
from .noise import expected_discrete_noise_power

WINDOW_NAMES = ("ram_lak", "shepp_logan", "cosine", "hamming")

_BAND_SLACK = 1.0 + 1e-12
_TINY = 1e-300


@dataclass(frozen=True)
class Window:
    """A classical apodization window; ``beta`` is required for ``hamming``."""

    name: str
    beta: float | None = None

    def __post_init__(self):
        if self.name not in WINDOW_NAMES:
            raise ParameterError(f"unknown window {self.name!r}; expected one of {WINDOW_NAMES}")
        if self.name == "hamming":
            if self.beta is None or not 0.5 <= self.beta <= 1.0:
                raise ParameterError(f"hamming beta must be in [1/2, 1], got {self.beta}")
        elif self.beta is not None:
            raise ParameterError(f"window {self.name!r} takes no beta parameter")


def _window_profile(window: Window, x: np.ndarray) -> np.ndarray:
    """Window formula without the support cut (callers apply the band mask)."""
    if window.name == "ram_lak":
        return np.ones_like(x)
    if window.name == "shepp_logan":
        # sinc(pi x / 2) with the sin(t)/t convention
        return np.sinc(x / 2.0)
    if window.name == "cosine":
        return np.cos(np.pi * x / 2.0)
    return window.beta + (1.0 - window.beta) * np.cos(np.pi * x)


def classical_window(window: Window, sigma) -> np.ndarray | float:
    """Table value of ``W(sigma)``; zero for ``|sigma| > 1``."""
    x = np.asarray(sigma, dtype=np.float64)
    values = np.where(np.abs(x) <= 1.0, _window_profile(window, x), 0.0)
    if np.ndim(sigma) == 0:
        return float(values)
    return values


def band_mask(frequencies: np.ndarray, bandwidth: float) -> np.ndarray:
    """Support test ``|sigma| <= L`` with an ulp-level slack so that grid
    endpoints produced by the coupling ``L = pi/h`` stay inside."""
    return np.abs(frequencies) <= bandwidth * _BAND_SLACK


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """Filter samples on a shared frequency grid.

    ``provenance`` is ``classical:<window>`` or one of
    ``optimized_reference``, ``optimized_measured``, ``optimized_denoised``.
    """

    grid: FrequencyGrid
    bandwidth: float
    samples: np.ndarray
    provenance: str

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.shape != self.grid.frequencies.shape:
            raise DimensionMismatchError(
                f"samples shape {samples.shape} does not match the grid "
                f"({self.grid.frequencies.shape})"
            )
        if not np.all(np.isfinite(samples)):
            raise DimensionMismatchError("filter samples must all be finite")
        if not self.bandwidth > 0:
            raise ParameterError("bandwidth must be positive")
        outside = ~band_mask(self.grid.frequencies, self.bandwidth)
        if np.any(samples[outside] != 0.0):
            raise ParameterError("filter samples must vanish outside [-L, L]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def filter_from_window(window: Window, grid: FrequencyGrid, bandwidth: float) -> FilterSpec:
    """Classical filter ``|sigma| W(sigma/L)`` sampled on the grid."""
    if not bandwidth > 0:
        raise ParameterError(f"bandwidth must be > 0, got {bandwidth}")
    sigma = grid.frequencies
    inside = band_mask(sigma, bandwidth)
    samples = np.where(inside, np.abs(sigma) * _window_profile(window, sigma / bandwidth), 0.0)
    return FilterSpec(
        grid=grid, bandwidth=bandwidth, samples=samples, provenance=f"classical:{window.name}"
    )


def _power_spectrum(sinogram: Sinogram, grid: FrequencyGrid) -> np.ndarray:
    """Angle-averaged squared radial DFT, symmetrized so evenness is exact."""
    transform = dft_radial_grid(sinogram, grid)
    power = np.mean(np.abs(transform) ** 2, axis=1)
    return 0.5 * (power + power[::-1])


def _optimized(sinogram: Sinogram, grid: FrequencyGrid, epsilon: float, provenance: str) -> FilterSpec:
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    geometry = sinogram.geometry
    sigma = grid.frequencies
    inside = band_mask(sigma, geometry.bandwidth)
    noise_power = expected_discrete_noise_power(geometry, epsilon)
    if noise_power == 0.0:
        # Vanishing noise power (eps = 0, or an underflowing eps):
        # degeneration to the ramp on [-L, L], also where the spectrum
        # vanishes.
        samples = np.where(inside, np.abs(sigma), 0.0)
    else:
        spectrum = _power_spectrum(sinogram, grid)
        samples = np.where(inside, np.abs(sigma) * spectrum / (spectrum + noise_power), 0.0)
    return FilterSpec(
        grid=grid, bandwidth=geometry.bandwidth, samples=samples, provenance=provenance
    )


def optimized_filter_reference(reference: Sinogram, grid: FrequencyGrid, epsilon: float) -> FilterSpec:
    """Spectrum-adaptive filter built from the noiseless Radon samples."""
    return _optimized(reference, grid, epsilon, "optimized_reference")


def optimized_filter_measured(measurements: Sinogram, grid: FrequencyGrid, epsilon: float) -> FilterSpec:
    """Spectrum-adaptive filter with the measured (noisy) data as spectrum source."""
    return _optimized(measurements, grid, epsilon, "optimized_measured")


def wiener_denoise(sinogram: Sinogram, kernel: int, noise_variance: float | None = None) -> Sinogram:
    """Local adaptive (Wiener) denoising of sinogram samples.

    Per sample, with local mean ``mu`` and variance ``v`` over an odd
    ``kernel x kernel`` neighbourhood (reflected at the edges):

        out = mu + max(v - nv, 0) / max(v, nv, tiny) * (x - mu)

    ``noise_variance`` defaults to the mean of the local variances when not
    given; zero noise variance returns the input unchanged.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ParameterError(f"kernel must be an odd positive integer, got {kernel}")
    if noise_variance is not None and noise_variance < 0:
        raise ParameterError(f"noise_variance must be >= 0, got {noise_variance}")
    if noise_variance == 0.0:
        return sinogram
    x = sinogram.values
    mean = uniform_filter(x, size=kernel, mode="reflect")
    variance = uniform_filter(x * x, size=kernel, mode="reflect") - mean * mean
    variance = np.maximum(variance, 0.0)
    nv = float(np.mean(variance)) if noise_variance is None else float(noise_variance)
    gain = np.maximum(variance - nv, 0.0) / np.maximum(variance, max(nv, _TINY))
    return Sinogram(geometry=sinogram.geometry, values=mean + gain * (x - mean))


def optimized_filter_denoised(
    measurements: Sinogram, grid: FrequencyGrid, epsilon: float, kernel: int = 5
) -> FilterSpec:
    """Spectrum-adaptive filter built from Wiener-denoised measurements."""
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    denoised = wiener_denoise(measurements, kernel, epsilon * epsilon)
    return _optimized(denoised, grid, epsilon, "optimized_denoised")


def write_filter_csv(spec: FilterSpec, path) -> None:
    """Dump the filter samples as ``sigma,value`` CSV rows (17 significant digits)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("sigma,value\n")
        for sigma, value in zip(spec.grid.frequencies, spec.samples):
            fh.write(f"{sigma:.17g},{value:.17g}\n")
