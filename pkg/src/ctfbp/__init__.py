"""Parallel-beam CT simulation and filtered back projection with
spectrum-adaptive low-pass filters."""

from .errors import (
    ConfigError,
    CtfbpError,
    DimensionMismatchError,
    FactorizationError,
    FormatError,
    InvalidGeometryError,
    ParameterError,
    SupportViolationError,
)
from .fbp import FilteredSinogram, back_project, filter_rows, reconstruct
from .filters import (
    FilterSpec,
    Window,
    classical_window,
    filter_from_window,
    optimized_filter_denoised,
    optimized_filter_measured,
    optimized_filter_reference,
    wiener_denoise,
    write_filter_csv,
)
from .geometry import (
    FrequencyGrid,
    ParallelGeometry,
    Sinogram,
    dft_radial,
    dft_radial_grid,
    extended_half_count,
    frequency_grid,
    geometry_from_angles,
    read_ctsg,
    write_ctsg,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    emit_csv,
    load_config,
    parse_config_text,
    read_results_csv,
    run_experiment,
    run_sweep,
)
from .image import Image, pixel_centers, read_ctim, write_ctim, write_pgm16
from .metrics import MetricReport, metric_report, mse, ssim
from .noise import (
    BoxCovariance,
    NoiseSpec,
    OUCovariance,
    add_white_noise,
    derive_seed,
    expected_discrete_noise_power,
    noise_level,
    ou_spectrum_expectation,
    sample_ou_field,
    standard_normals,
)
from .phantoms import (
    Phantom,
    Shape,
    load_phantom_file,
    modified_shepp_logan,
    parse_phantom_text,
    phantom_values,
    radon_analytic,
    radon_sample,
    rasterize,
    shepp_logan,
    sinogram_mean,
)

__version__ = "0.1.0"
