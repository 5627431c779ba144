"""Command-line front end.

Exit codes: 0 success, 1 I/O or validation error, 2 unwritable output,
3 fiducial not found, 4 degenerate curve, 5 profile error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import __version__
from .calibration import (
    CalibrationProfile,
    apply_correction,
    calibrate,
    iso_timestamp,
    make_ramp,
)
from .errors import (
    DegenerateCurveError,
    FiducialNotFoundError,
    HologammaError,
    ProfileError,
)
from .imaging import Roi, load_grey, write_image
from .metrics import format_percent, image_mse
from .ospr import export_frame
from .pipeline import PipelineConfig, load_config_file, run_loop, simulate
from .svgplot import render_svg, series_from_csv

EXIT_OK, EXIT_INPUT, EXIT_OUTPUT, EXIT_FIDUCIAL, EXIT_DEGENERATE, EXIT_PROFILE = range(6)

GLOBAL_KEYS = ("seed", "subframes", "width", "height", "roi", "lut_size",
               "noise_sigma", "distortion", "placement")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write_bytes(path, payload: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_OUTPUT) from exc


def _write_text(path, text: str) -> None:
    _write_bytes(path, text.encode("utf-8"))


def _write_image(path, image) -> None:
    try:
        write_image(path, image)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_OUTPUT) from exc


def _read_grey(path):
    try:
        return load_grey(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except Exception as exc:  # PIL raises assorted types on garbage input
        raise CliError(f"cannot decode image {path}: {exc}") from exc


def _timestamp_for(path) -> str:
    """Deterministic creation stamp: SOURCE_DATE_EPOCH, else the input's mtime."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return iso_timestamp(float(epoch))
    return iso_timestamp(os.path.getmtime(path)) if path else iso_timestamp(0)


def _sibling(path, suffix: str) -> str:
    root, _ = os.path.splitext(str(path))
    return root + suffix


def resolve_config(args) -> PipelineConfig:
    """Merge built-in defaults < config file < command-line flags."""
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(load_config_file(args.config))
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
    for key in GLOBAL_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return PipelineConfig.from_mapping(values)


# --------------------------------------------------------------------- commands


def cmd_ramp(args) -> int:
    ramp = make_ramp(args.ramp_width, args.ramp_height)
    _write_image(args.out, ramp)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = resolve_config(args)
    target = _read_grey(args.target)
    sim = simulate(target, config)
    _write_image(args.out, sim.observed)
    roi = config.target_roi
    manifest = {
        "seed": config.seed,
        "subframes": config.subframes,
        "placement": config.placement,
        "noise_sigma": config.noise_sigma,
        "distortion": list(config.distortion),
        "distortion_injected": config.has_distortion,
        "width": config.width,
        "height": config.height,
        "target_roi": [roi.x0, roi.y0, roi.width, roi.height],
        "target": os.path.basename(str(args.target)),
    }
    _write_text(args.manifest or _sibling(args.out, ".json"), json.dumps(manifest, indent=2) + "\n")
    if args.holograms_dir:
        try:
            export_frame(sim.holograms, args.holograms_dir, config.ospr)
        except OSError as exc:
            raise CliError(f"cannot write holograms: {exc}", EXIT_OUTPUT) from exc
    return EXIT_OK


def cmd_calibrate(args) -> int:
    config = resolve_config(args)
    capture = _read_grey(args.capture)
    result = calibrate(
        capture,
        config.roi,
        config.lut_size,
        created=_timestamp_for(args.capture),
        source=os.path.basename(str(args.capture)),
    )
    profile = result.profile
    _write_text(args.profile, profile.to_json())
    _write_text(args.response_csv or _sibling(args.profile, "_response.csv"), result.response.to_csv())
    _write_text(args.correction_csv or _sibling(args.profile, "_correction.csv"), profile.lut.to_csv())
    print(json.dumps({
        "mse_before": profile.mse_before,
        "fit_residual": profile.polynomial.residual_norm,
        "fiducial_column": result.fiducial_column,
        "coefficients": list(profile.polynomial.coefficients),
    }))
    return EXIT_OK


def cmd_correct(args) -> int:
    image = _read_grey(args.image)
    try:
        profile = CalibrationProfile.load(args.profile)
    except (OSError, UnicodeDecodeError) as exc:
        raise ProfileError(f"cannot read profile {args.profile}: {exc}") from exc
    _write_image(args.out, apply_correction(image, profile.lut))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = resolve_config(args)
    a, b = _read_grey(args.a), _read_grey(args.b)
    report = image_mse(a, b, config.roi)
    if args.before is not None:
        report = report.with_baseline(args.before)
    d = report.to_dict()
    d["normalized_error_display"] = format_percent(report.normalized_error)
    print(json.dumps(d))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = resolve_config(args)
    target = _read_grey(args.target) if args.target else None
    summary = run_loop(config, target, created=_timestamp_for(args.target), source="simulation")
    text = json.dumps(summary.to_dict(), indent=2) + "\n"
    if args.out_dir:
        try:
            os.makedirs(args.out_dir, exist_ok=True)
        except OSError as exc:
            raise CliError(f"cannot create {args.out_dir}: {exc}", EXIT_OUTPUT) from exc
        for name, image in summary.images.items():
            _write_image(os.path.join(args.out_dir, f"{name}.png"), image)
        cal = summary.calibration
        _write_text(os.path.join(args.out_dir, "profile.json"), cal.profile.to_json())
        _write_text(os.path.join(args.out_dir, "response.csv"), cal.response.to_csv())
        _write_text(os.path.join(args.out_dir, "correction.csv"), cal.profile.lut.to_csv())
        _write_text(os.path.join(args.out_dir, "summary.json"), text)
    if args.summary:
        _write_text(args.summary, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        with open(args.csv) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {args.csv}: {exc}") from exc
    series = series_from_csv(text)
    _write_text(args.out, render_svg(series))
    return EXIT_OK


# ----------------------------------------------------------------------- parser


def _global_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="TOML key/value file (overridden by flags)")
    g.add_argument("--seed", type=int, help="RNG seed (default 0)")
    g.add_argument("--subframes", type=int, help="OSPR subframes per frame (default 24)")
    g.add_argument("--width", type=int, help="hologram width (default 1280)")
    g.add_argument("--height", type=int, help="hologram height (default 1024)")
    g.add_argument("--roi", type=Roi.parse, help="region of interest x0,y0,w,h")
    g.add_argument("--lut-size", dest="lut_size", type=int, help="correction LUT entries (default 256)")
    g.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="additive noise sigma (default 0)")
    g.add_argument("--distortion", help="injected transfer polynomial c0,c1,... (simulation only)")
    g.add_argument("--placement", choices=("half-plane", "full-plane"), help="target placement")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog="hologamma", description="Gamma calibration for binary-phase holographic projection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ramp", parents=[common], help="write the calibration ramp image")
    p.add_argument("ramp_width", type=int)
    p.add_argument("ramp_height", type=int)
    p.add_argument("out")
    p.set_defaults(func=cmd_ramp)

    p = sub.add_parser("simulate", parents=[common], help="simulate the replay field of a target")
    p.add_argument("target")
    p.add_argument("out")
    p.add_argument("--manifest", help="manifest path (default: <out>.json)")
    p.add_argument("--holograms-dir", dest="holograms_dir", help="export subframes as 1-bit PGMs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="build a correction profile from a ramp capture")
    p.add_argument("capture")
    p.add_argument("profile")
    p.add_argument("--response-csv", dest="response_csv")
    p.add_argument("--correction-csv", dest="correction_csv")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("correct", parents=[common], help="apply a profile to an image")
    p.add_argument("image")
    p.add_argument("profile")
    p.add_argument("out")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", parents=[common], help="MSE between two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--before", type=float, help="baseline MSE for the normalized error")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="closed-loop calibration on a simulated system")
    p.add_argument("target", nargs="?")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--summary", help="also write the summary JSON here")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plot", parents=[common], help="render curve CSV as SVG")
    p.add_argument("csv")
    p.add_argument("out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FiducialNotFoundError as exc:
        print(f"error: fiducial not found: {exc}", file=sys.stderr)
        return EXIT_FIDUCIAL
    except DegenerateCurveError as exc:
        print(f"error: degenerate curve: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ProfileError as exc:
        print(f"error: profile: {exc}", file=sys.stderr)
        return EXIT_PROFILE
    except (HologammaError, ValueError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
