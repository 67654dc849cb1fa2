"""Experiment engine: noise sweeps over angles, levels and filters.

For every combination of angle count, relative noise level and realization
the engine samples the analytic sinogram, derives the absolute noise level
``eps = p * mean(|R f|)``, injects Gaussian noise of standard deviation
``misestimation_factor * eps`` (the filters always receive the unscaled
``eps``), reconstructs with every requested filter and scores MSE/SSIM
against the rasterized phantom.

Config files are flat ``key = value`` text with ``#`` comments::

    phantom = shepp_logan          # shepp_logan | modified | <path>
    phantom.nu = 1.5               # modified phantom smoothness
    phantom.radius = 1.0           # file phantoms only (optional)
    sweep.angles = 90,180,360
    sweep.p_noise = 0.05,0.1,0.15
    sweep.realizations = 10
    sweep.filters = ram_lak,hamming:0.55,opt_reference,opt_measured,opt_denoised
    recon.pixels = 256
    recon.interpolation = linear   # linear | cubic_spline
    wiener.kernel = 5
    noise.misestimation = 1.0
    seed = 20240101
    output.dir = out
    timing = off                   # off | wall (wall breaks byte-reproducibility)

Filter identifiers: ``ram_lak``, ``shepp_logan``, ``cosine``,
``hamming[:<beta>|:auto]``, ``opt_reference``, ``opt_measured``,
``opt_denoised[:<kernel>|:auto]``.  ``auto`` grid-searches the hyperparameter
(beta over 0.50..1.00 step 0.05, kernel over 3,5,7,9) on 5 held-out noise
realizations per sweep point, minimizing mean MSE.

Realization ``r`` of sweep point ``(n_angles, p)`` uses the derived seed
``base_seed XOR hash(n_angles, p, r)``; rows are therefore independent of
execution order and thread count, and the CSV emitted with ``timing = off``
is byte-identical across runs.  ``CT_THREADS`` caps worker threads (absent:
hardware default).
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CtfbpError
from .fbp import INTERPOLATIONS, reconstruct
from .filters import (
    FilterSpec,
    Window,
    filter_from_window,
    optimized_filter_denoised,
    optimized_filter_measured,
    optimized_filter_reference,
)
from .geometry import FrequencyGrid, Sinogram, frequency_grid, geometry_from_angles
from .image import Image
from .metrics import mse as mse_metric
from .metrics import ssim as ssim_metric
from .noise import NoiseSpec, add_white_noise, derive_seed, noise_level
from .phantoms import (
    Phantom,
    load_phantom_file,
    modified_shepp_logan,
    radon_sample,
    rasterize,
    shepp_logan,
)

DEFAULT_FILTERS = (
    "ram_lak",
    "shepp_logan",
    "cosine",
    "hamming:0.55",
    "opt_reference",
    "opt_measured",
    "opt_denoised",
)

CLASSICAL_FILTER_KINDS = ("ram_lak", "shepp_logan", "cosine", "hamming")
OPTIMIZED_FILTER_KINDS = ("opt_reference", "opt_measured", "opt_denoised")

_HAMMING_DEFAULT_BETA = 0.55
_HAMMING_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(11))
_KERNEL_GRID = (3, 5, 7, 9)
_HOLDOUT_REALIZATIONS = 5

CSV_HEADER = "n_angles,p_noise,filter,seed,mse,ssim,wall_time_ms"


@dataclass(frozen=True)
class ResultRow:
    n_angles: int
    p_noise: float
    filter_id: str
    seed: int
    mse: float
    ssim: float
    wall_time_ms: float


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: str = "shepp_logan"
    phantom_nu: float = 1.5
    phantom_radius: float | None = None
    angle_list: tuple[int, ...] = (90, 180, 360)
    p_noise_list: tuple[float, ...] = (0.05, 0.1, 0.15)
    n_realizations: int = 10
    filters: tuple[str, ...] = DEFAULT_FILTERS
    recon_pixels: int = 256
    interpolation: str = "linear"
    wiener_kernel: int = 5
    seed: int = 20240101
    noise_misestimation_factor: float = 1.0
    output_dir: str = "."
    timing: str = "off"

    def validate(self) -> "ExperimentConfig":
        if not self.angle_list:
            raise ConfigError("sweep.angles: list must not be empty")
        for n in self.angle_list:
            if n < 4:
                raise ConfigError(f"sweep.angles: need n_angles >= 4, got {n}")
        if not self.p_noise_list:
            raise ConfigError("sweep.p_noise: list must not be empty")
        for p in self.p_noise_list:
            if p < 0:
                raise ConfigError(f"sweep.p_noise: levels must be >= 0, got {p}")
        if self.n_realizations < 1:
            raise ConfigError(f"sweep.realizations: must be >= 1, got {self.n_realizations}")
        if not self.filters:
            raise ConfigError("sweep.filters: list must not be empty")
        for token in self.filters:
            parse_filter_token(token)
        if self.recon_pixels < 11:
            raise ConfigError(
                f"recon.pixels: must be >= 11 (SSIM window), got {self.recon_pixels}"
            )
        if self.interpolation not in INTERPOLATIONS:
            raise ConfigError(
                f"recon.interpolation: expected one of {INTERPOLATIONS}, got {self.interpolation!r}"
            )
        if self.wiener_kernel < 1 or self.wiener_kernel % 2 == 0:
            raise ConfigError(f"wiener.kernel: must be odd and positive, got {self.wiener_kernel}")
        if not self.noise_misestimation_factor > 0:
            raise ConfigError(
                f"noise.misestimation: must be > 0, got {self.noise_misestimation_factor}"
            )
        if not self.phantom_nu > 0:
            raise ConfigError(f"phantom.nu: must be > 0, got {self.phantom_nu}")
        if self.phantom_radius is not None and not self.phantom_radius > 0:
            raise ConfigError(f"phantom.radius: must be > 0, got {self.phantom_radius}")
        if self.timing not in ("off", "wall"):
            raise ConfigError(f"timing: expected 'off' or 'wall', got {self.timing!r}")
        return self


def parse_filter_token(token: str):
    """Split a filter identifier into (kind, parameter).

    The parameter is a Hamming beta, a Wiener kernel size, the string
    ``auto``, or None when the identifier carries none.
    """
    kind, sep, param = token.partition(":")
    if kind not in CLASSICAL_FILTER_KINDS + OPTIMIZED_FILTER_KINDS:
        raise ConfigError(f"sweep.filters: unknown filter {token!r}")
    if not sep:
        return kind, None
    if kind == "hamming":
        if param == "auto":
            return kind, "auto"
        try:
            beta = float(param)
        except ValueError:
            raise ConfigError(f"sweep.filters: bad hamming parameter in {token!r}") from None
        if not 0.5 <= beta <= 1.0:
            raise ConfigError(f"sweep.filters: hamming beta must be in [1/2, 1], got {beta}")
        return kind, beta
    if kind == "opt_denoised":
        if param == "auto":
            return kind, "auto"
        try:
            kernel = int(param)
        except ValueError:
            raise ConfigError(f"sweep.filters: bad kernel parameter in {token!r}") from None
        if kernel < 1 or kernel % 2 == 0:
            raise ConfigError(f"sweep.filters: kernel must be odd and positive, got {kernel}")
        return kind, kernel
    raise ConfigError(f"sweep.filters: filter {kind!r} takes no parameter ({token!r})")


_LIST_KEYS = {"sweep.angles", "sweep.p_noise", "sweep.filters"}


def parse_config_text(text: str, name: str = "<config>") -> ExperimentConfig:
    """Parse the flat ``key = value`` config format."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{name}:{lineno}: empty key or value")
        if key in values:
            raise ConfigError(f"{name}:{lineno}: duplicate key {key!r}")
        values[key] = value

    def take(key, convert, default):
        if key not in values:
            return default
        raw_value = values.pop(key)
        try:
            return convert(raw_value)
        except (ValueError, TypeError):
            raise ConfigError(f"{name}: {key}: cannot parse {raw_value!r}") from None

    def int_list(raw_value):
        return tuple(int(tok.strip()) for tok in raw_value.split(","))

    def float_list(raw_value):
        return tuple(float(tok.strip()) for tok in raw_value.split(","))

    def str_list(raw_value):
        return tuple(tok.strip() for tok in raw_value.split(",") if tok.strip())

    config = ExperimentConfig(
        phantom=take("phantom", str, "shepp_logan"),
        phantom_nu=take("phantom.nu", float, 1.5),
        phantom_radius=take("phantom.radius", float, None),
        angle_list=take("sweep.angles", int_list, (90, 180, 360)),
        p_noise_list=take("sweep.p_noise", float_list, (0.05, 0.1, 0.15)),
        n_realizations=take("sweep.realizations", int, 10),
        filters=take("sweep.filters", str_list, DEFAULT_FILTERS),
        recon_pixels=take("recon.pixels", int, 256),
        interpolation=take("recon.interpolation", str, "linear"),
        wiener_kernel=take("wiener.kernel", int, 5),
        seed=take("seed", int, 20240101),
        noise_misestimation_factor=take("noise.misestimation", float, 1.0),
        output_dir=take("output.dir", str, "."),
        timing=take("timing", str, "off"),
    )
    if values:
        unknown = ", ".join(sorted(values))
        raise ConfigError(f"{name}: unknown keys: {unknown}")
    return config.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), name=str(path))


def _build_phantom(config: ExperimentConfig, geometry) -> Phantom:
    if config.phantom == "shepp_logan":
        return shepp_logan()
    if config.phantom == "modified":
        return modified_shepp_logan(nu=config.phantom_nu, geometry=geometry)
    return load_phantom_file(config.phantom, support_radius=config.phantom_radius)


def _phantom_support_radius(config: ExperimentConfig) -> float:
    if config.phantom in ("shepp_logan", "modified"):
        return 1.0
    return load_phantom_file(config.phantom, support_radius=config.phantom_radius).support_radius


@dataclass(frozen=True)
class _SweepPoint:
    """Shared, read-only context of one (n_angles, p_noise) combination."""

    n_angles: int
    p_noise: float
    grid: FrequencyGrid
    clean: Sinogram
    truth: Image
    epsilon: float
    injected_epsilon: float
    wiener_kernel: int


def _noisy_realization(point: _SweepPoint, base_seed: int, realization: int, tags=()) -> tuple[int, Sinogram]:
    seed = derive_seed(base_seed, *tags, point.n_angles, point.p_noise, realization)
    spec = NoiseSpec(level=point.injected_epsilon, seed=seed, p_noise=point.p_noise)
    return seed, add_white_noise(point.clean, spec)


def _make_filter(
    point: _SweepPoint,
    kind: str,
    parameter,
    noisy: Sinogram,
    reference_filter: FilterSpec,
) -> FilterSpec:
    if kind == "opt_reference":
        return reference_filter
    if kind == "opt_measured":
        return optimized_filter_measured(noisy, point.grid, point.epsilon)
    if kind == "opt_denoised":
        kernel = parameter if isinstance(parameter, int) else point.wiener_kernel
        return optimized_filter_denoised(noisy, point.grid, point.epsilon, kernel)
    if kind == "hamming":
        beta = parameter if isinstance(parameter, float) else _HAMMING_DEFAULT_BETA
        window = Window(name="hamming", beta=beta)
    else:
        window = Window(name=kind)
    bandwidth = point.clean.geometry.bandwidth
    return filter_from_window(window, point.grid, bandwidth)


def _resolve_auto(
    point: _SweepPoint,
    kind: str,
    config: ExperimentConfig,
    reference_filter: FilterSpec,
):
    """Grid-search an 'auto' hyperparameter on held-out noise realizations."""
    candidates = _HAMMING_GRID if kind == "hamming" else _KERNEL_GRID
    holdout = []
    for r in range(_HOLDOUT_REALIZATIONS):
        _, noisy = _noisy_realization(point, config.seed, r, tags=("holdout",))
        holdout.append(noisy)
    best_value = None
    best_score = None
    for value in candidates:
        scores = []
        for noisy in holdout:
            spec = _make_filter(point, kind, value, noisy, reference_filter)
            recon = reconstruct(noisy, spec, config.recon_pixels, config.interpolation)
            scores.append(mse_metric(recon, point.truth))
        score = float(np.mean(scores))
        if best_score is None or score < best_score:
            best_score = score
            best_value = value
    return best_value


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the full sweep and return one row per reconstruction.

    Rows are ordered by (angle index, noise index, filter index,
    realization) regardless of the number of worker threads.
    """
    config.validate()
    parsed_filters = [parse_filter_token(token) for token in config.filters]
    support_radius = _phantom_support_radius(config)

    points: dict[tuple[int, int], _SweepPoint] = {}
    reference_filters: dict[tuple[int, int], FilterSpec] = {}
    resolved: dict[tuple[int, int, int], object] = {}
    for ia, n_angles in enumerate(config.angle_list):
        geometry = geometry_from_angles(n_angles, support_radius)
        grid = frequency_grid(geometry)
        phantom = _build_phantom(config, geometry)
        clean = radon_sample(phantom, geometry)
        truth = rasterize(phantom, config.recon_pixels)
        for ip, p_noise in enumerate(config.p_noise_list):
            epsilon = noise_level(p_noise, clean)
            point = _SweepPoint(
                n_angles=n_angles,
                p_noise=p_noise,
                grid=grid,
                clean=clean,
                truth=truth,
                epsilon=epsilon,
                injected_epsilon=config.noise_misestimation_factor * epsilon,
                wiener_kernel=config.wiener_kernel,
            )
            points[(ia, ip)] = point
            # The reference filter sees the noiseless data; the measured and
            # denoised variants are built per-realization from noisy data only.
            reference_filters[(ia, ip)] = optimized_filter_reference(
                clean, grid, epsilon
            )
            for index, (kind, parameter) in enumerate(parsed_filters):
                if parameter == "auto":
                    resolved[(ia, ip, index)] = _resolve_auto(
                        point, kind, config, reference_filters[(ia, ip)]
                    )

    tasks = []
    for ia in range(len(config.angle_list)):
        for ip in range(len(config.p_noise_list)):
            point = points[(ia, ip)]
            for r in range(config.n_realizations):
                seed, noisy = _noisy_realization(point, config.seed, r)
                for index, (kind, parameter) in enumerate(parsed_filters):
                    if parameter == "auto":
                        parameter = resolved[(ia, ip, index)]
                    tasks.append(
                        (
                            (ia, ip, index, r),
                            point,
                            kind,
                            parameter,
                            noisy,
                            seed,
                            config.filters[index],
                        )
                    )

    def run_task(task):
        key, point, kind, parameter, noisy, seed, token = task
        started = time.perf_counter()
        spec = _make_filter(point, kind, parameter, noisy, reference_filters[(key[0], key[1])])
        recon = reconstruct(noisy, spec, config.recon_pixels, config.interpolation)
        row = ResultRow(
            n_angles=point.n_angles,
            p_noise=point.p_noise,
            filter_id=token,
            seed=seed,
            mse=mse_metric(recon, point.truth),
            ssim=ssim_metric(recon, point.truth),
            wall_time_ms=(time.perf_counter() - started) * 1000.0
            if config.timing == "wall"
            else 0.0,
        )
        return key, row

    workers = thread_count(len(tasks))
    if workers <= 1:
        keyed = [run_task(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            keyed = list(pool.map(run_task, tasks))
    keyed.sort(key=lambda item: item[0])
    return [row for _, row in keyed]


def thread_count(n_tasks: int) -> int:
    """Worker count: CT_THREADS when set, else the hardware default."""
    env = os.environ.get("CT_THREADS")
    if env is not None:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(f"CT_THREADS: cannot parse {env!r}") from None
        if requested < 1:
            raise ConfigError(f"CT_THREADS: must be >= 1, got {requested}")
    else:
        requested = os.cpu_count() or 1
    return max(1, min(requested, n_tasks))


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def emit_csv(rows, path) -> None:
    """Write result rows as CSV with LF endings and 17-significant-digit floats."""
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in rows:
                fh.write(
                    ",".join(
                        (
                            str(row.n_angles),
                            _format_float(row.p_noise),
                            row.filter_id,
                            str(row.seed),
                            _format_float(row.mse),
                            _format_float(row.ssim),
                            _format_float(row.wall_time_ms),
                        )
                    )
                    + "\n"
                )
    except OSError as exc:
        raise CtfbpError(f"cannot write results to {path}: {exc}") from exc


def read_results_csv(path) -> list[ResultRow]:
    """Parse a results CSV back into rows (inverse of :func:`emit_csv`)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: missing results header")
    rows = []
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 7:
            raise ConfigError(f"{path}: malformed row {line!r}")
        rows.append(
            ResultRow(
                n_angles=int(fields[0]),
                p_noise=float(fields[1]),
                filter_id=fields[2],
                seed=int(fields[3]),
                mse=float(fields[4]),
                ssim=float(fields[5]),
                wall_time_ms=float(fields[6]),
            )
        )
    return rows


def run_sweep(config: ExperimentConfig) -> str:
    """Run the experiment and write ``results.csv`` into the output directory."""
    rows = run_experiment(config)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "results.csv")
    emit_csv(rows, path)
    return path
