"""Command-line interface.

Subcommands: ``phantom``, ``sinogram``, ``reconstruct``, ``filter-dump``,
``sweep``, ``metrics``.  Exit codes: 0 on success, 1 on usage errors, 2 on
runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import CtfbpError
from .fbp import INTERPOLATIONS, reconstruct
from .filters import (
    Window,
    filter_from_window,
    optimized_filter_denoised,
    optimized_filter_measured,
    optimized_filter_reference,
    write_filter_csv,
)
from .geometry import frequency_grid, geometry_from_angles, read_ctsg, write_ctsg
from .harness import load_config, run_sweep
from .image import read_ctim, write_ctim, write_pgm16
from .metrics import metric_report
from .noise import NoiseSpec, add_white_noise, noise_level
from .phantoms import load_phantom_file, modified_shepp_logan, radon_sample, rasterize, shepp_logan

_CLASSICAL = ("ram_lak", "shepp_logan", "cosine", "hamming")
_OPTIMIZED = ("opt_reference", "opt_measured", "opt_denoised")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures routed to exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ctfbp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_phantom_flags(p):
        p.add_argument("--phantom", default="shepp_logan",
                       help="shepp_logan | modified | path to a phantom file")
        p.add_argument("--nu", type=float, default=1.5, help="modified phantom smoothness")
        p.add_argument("--radius", type=float, default=None, help="support radius for file phantoms")

    p = sub.add_parser("phantom", help="rasterize a phantom to CTIM + PGM")
    add_phantom_flags(p)
    p.add_argument("--pixels", type=int, default=256)
    p.add_argument("--out", required=True, help="output basename (.ctim/.pgm appended)")

    p = sub.add_parser("sinogram", help="sample an analytic sinogram to CTSG")
    add_phantom_flags(p)
    p.add_argument("--n-angles", type=int, required=True)
    p.add_argument("--p-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="filtered back projection of a CTSG sinogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--filter", required=True, choices=_CLASSICAL + _OPTIMIZED)
    p.add_argument("--beta", type=float, default=None, help="hamming window parameter")
    p.add_argument("--kernel", type=int, default=5, help="wiener kernel for opt_denoised")
    p.add_argument("--epsilon", type=float, default=0.0, help="noise level for optimized filters")
    p.add_argument("--pixels", type=int, default=256)
    p.add_argument("--interp", default="linear", choices=INTERPOLATIONS)
    p.add_argument("--out", required=True, help="output basename (.ctim/.pgm appended)")

    p = sub.add_parser("filter-dump", help="write filter samples as CSV")
    p.add_argument("--filter", required=True, choices=_CLASSICAL + _OPTIMIZED)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--kernel", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--n-angles", type=int, default=None, help="geometry for classical filters")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--in", dest="input", default=None, help="CTSG input for optimized filters")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run an experiment sweep from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("metrics", help="compare two CTIM images")
    p.add_argument("image", help="image under test")
    p.add_argument("reference", help="reference image")
    p.add_argument("--mask", action="store_true", help="restrict MSE to the support disk")
    return parser


def _load_phantom(args):
    if args.phantom == "shepp_logan":
        return shepp_logan()
    if args.phantom == "modified":
        return modified_shepp_logan(nu=args.nu)
    return load_phantom_file(args.phantom, support_radius=args.radius)


def _write_image(image, base: str):
    write_ctim(image, base + ".ctim")
    write_pgm16(image, base + ".pgm")
    print(f"wrote {base}.ctim and {base}.pgm")


def _build_filter(args, sinogram, grid):
    name = args.filter
    if name in _CLASSICAL:
        window = Window(name=name, beta=args.beta) if name == "hamming" else Window(name=name)
        return filter_from_window(window, grid, sinogram.geometry.bandwidth)
    if name == "opt_reference":
        return optimized_filter_reference(sinogram, grid, args.epsilon)
    if name == "opt_measured":
        return optimized_filter_measured(sinogram, grid, args.epsilon)
    return optimized_filter_denoised(sinogram, grid, args.epsilon, args.kernel)


def _run(args) -> int:
    if args.command == "phantom":
        _write_image(rasterize(_load_phantom(args), args.pixels), args.out)
        return 0

    if args.command == "sinogram":
        phantom = _load_phantom(args)
        geometry = geometry_from_angles(args.n_angles, phantom.support_radius)
        sinogram = radon_sample(phantom, geometry)
        if args.p_noise > 0:
            spec = NoiseSpec(
                level=noise_level(args.p_noise, sinogram),
                seed=args.seed,
                p_noise=args.p_noise,
            )
            sinogram = add_white_noise(sinogram, spec)
        write_ctsg(sinogram, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "reconstruct":
        sinogram = read_ctsg(args.input)
        grid = frequency_grid(sinogram.geometry)
        spec = _build_filter(args, sinogram, grid)
        _write_image(reconstruct(sinogram, spec, args.pixels, args.interp), args.out)
        return 0

    if args.command == "filter-dump":
        if args.filter in _OPTIMIZED:
            if args.input is None:
                raise _UsageError(f"--filter {args.filter} requires --in <sinogram.ctsg>")
            sinogram = read_ctsg(args.input)
        else:
            if args.n_angles is None:
                raise _UsageError(f"--filter {args.filter} requires --n-angles")
            geometry = geometry_from_angles(args.n_angles, args.radius)
            sinogram = None
        if sinogram is not None:
            grid = frequency_grid(sinogram.geometry)
            spec = _build_filter(args, sinogram, grid)
        else:
            grid = frequency_grid(geometry)
            window = (
                Window(name=args.filter, beta=args.beta)
                if args.filter == "hamming"
                else Window(name=args.filter)
            )
            spec = filter_from_window(window, grid, geometry.bandwidth)
        write_filter_csv(spec, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "sweep":
        if not os.path.exists(args.config):
            raise _UsageError(f"config file not found: {args.config}")
        path = run_sweep(load_config(args.config))
        print(f"wrote {path}")
        return 0

    if args.command == "metrics":
        report = metric_report(read_ctim(args.image), read_ctim(args.reference), args.mask)
        print(f"mse={report.mse:.17g}")
        print(f"ssim={report.ssim:.17g}")
        print(f"n_pixels={report.n_pixels}")
        print(f"masked={'true' if report.masked else 'false'}")
        return 0

    raise _UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except _UsageError as exc:
        print(f"ctfbp: error: {exc}", file=sys.stderr)
        return 1
    except (CtfbpError, OSError) as exc:
        print(f"ctfbp: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
