"""Simulated projector and the closed calibration loop.

A purely numerical replay has no gamma of its own, so :class:`PipelineConfig`
carries an injected pointwise ``distortion`` polynomial that stands in for
the hardware non-linearity, plus optional additive Gaussian noise.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .calibration import (
    CalibrationResult,
    apply_correction,
    calibrate,
    locate_fiducial,
    make_ramp,
    measure_response,
    response_mse,
)
from .errors import ConfigurationError, DimensionError
from .imaging import GreyImage, Roi, crop
from .metrics import format_percent, image_mse, normalized_error
from .ospr import (
    HALF_PLANE,
    PLACEMENTS,
    OsprConfig,
    embed_target,
    ospr_frame,
    splitmix64,
    target_roi,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

_NOISE_STREAM = 0x6E6F697365  # distinguishes the noise RNG from subframe seeds


def parse_coefficients(text) -> tuple:
    if isinstance(text, str):
        parts = [p for p in text.replace(" ", "").split(",") if p]
        values = tuple(float(p) for p in parts)
    else:
        values = tuple(float(v) for v in text)
    if not values:
        raise ConfigurationError("distortion needs at least one coefficient")
    return values


@dataclass(frozen=True)
class PipelineConfig:
    width: int = 1280
    height: int = 1024
    subframes: int = 24
    seed: int = 0
    placement: str = HALF_PLANE
    lut_size: int = 256
    noise_sigma: float = 0.0
    distortion: tuple = (0.0, 1.0)
    roi: Optional[Roi] = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("hologram dimensions must be positive")
        if self.subframes < 1:
            raise ConfigurationError("subframes must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise sigma must be >= 0")
        if self.lut_size < 2:
            raise ConfigurationError("LUT size must be >= 2")
        if self.placement not in PLACEMENTS:
            raise ConfigurationError(f"placement must be one of {PLACEMENTS}")
        object.__setattr__(self, "distortion", parse_coefficients(self.distortion))

    @property
    def ospr(self) -> OsprConfig:
        return OsprConfig(self.subframes, self.seed, self.placement)

    @property
    def target_roi(self) -> Roi:
        return target_roi(self.width, self.height, self.placement)

    @property
    def has_distortion(self) -> bool:
        return self.distortion != (0.0, 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["distortion"] = list(self.distortion)
        d["roi"] = None if self.roi is None else [self.roi.x0, self.roi.y0, self.roi.width, self.roi.height]
        return d

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        """Build from loosely typed key/values (config file or CLI)."""
        kw = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if raw is None:
                continue
            if key in ("width", "height", "subframes", "seed", "lut_size"):
                kw[key] = int(raw)
            elif key == "noise_sigma":
                kw[key] = float(raw)
            elif key == "placement":
                kw[key] = str(raw)
            elif key == "distortion":
                kw[key] = parse_coefficients(raw)
            elif key == "roi":
                kw[key] = raw if isinstance(raw, Roi) else (
                    Roi.parse(raw) if isinstance(raw, str) else Roi(*(int(v) for v in raw)))
            else:
                raise ConfigurationError(f"unknown configuration key {key!r}")
        return cls(**kw)


def load_config_file(path) -> dict:
    """Read a TOML key/value file; returns the raw mapping."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
    return data


def apply_distortion(intensity: np.ndarray, coefficients) -> np.ndarray:
    """Evaluate ``sum(c[k] * I**k)`` per pixel, clamped to [0, 1]."""
    return np.clip(np.polynomial.polynomial.polyval(intensity, coefficients), 0.0, 1.0)


@dataclass(frozen=True)
class Simulation:
    holograms: list
    clean: GreyImage
    observed: GreyImage
    roi: Roi


def simulate(target: GreyImage, config: PipelineConfig) -> Simulation:
    """Project ``target`` through OSPR, then the injected distortion and noise.

    ``target`` must have the size of ``config.target_roi``.
    """
    canvas = embed_target(target, config.width, config.height, config.placement)
    holograms, replay = ospr_frame(canvas, config.ospr)
    out = apply_distortion(replay.pixels, config.distortion)
    if config.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(splitmix64(config.seed ^ _NOISE_STREAM)))
        out = out + rng.normal(0.0, config.noise_sigma, size=out.shape)
    return Simulation(holograms, replay, GreyImage.clipped(out), config.target_roi)


def view_region(image: GreyImage, roi: Roi) -> GreyImage:
    """Crop to ``roi`` and rescale so the brightest pixel is 1."""
    region = crop(image, roi).pixels
    peak = region.max()
    return GreyImage.clipped(region / peak) if peak > 0 else GreyImage(region)


@dataclass
class LoopSummary:
    config: PipelineConfig
    calibration: CalibrationResult
    ramp_mse_before: float
    ramp_mse_after: float
    target: Optional[dict] = None
    images: dict = field(default_factory=dict)

    @property
    def normalized_error(self) -> float:
        return normalized_error(self.ramp_mse_after, self.ramp_mse_before)

    def to_dict(self) -> dict:
        d = {
            "mse_before": self.ramp_mse_before,
            "mse_after": self.ramp_mse_after,
            "normalized_error_percent": self.normalized_error,
            "normalized_error_display": format_percent(self.normalized_error),
            "fit_coefficients": list(self.calibration.profile.polynomial.coefficients),
            "fit_residual": self.calibration.profile.polynomial.residual_norm,
            "config": self.config.to_dict(),
            "distortion_injected": self.config.has_distortion,
        }
        if self.target is not None:
            d["target"] = self.target
        return d


def measure_ramp(observed: GreyImage, roi: Roi):
    start = locate_fiducial(observed, roi) + 1
    return measure_response(observed, roi, start)


def run_loop(config: PipelineConfig, target: Optional[GreyImage] = None,
             created: str = "", source: str = "simulation") -> LoopSummary:
    """Calibrate a simulated system on a ramp and evaluate the correction.

    Steps: project the ramp, calibrate from the observed replay, project the
    corrected ramp and compare both responses with the identity line. When
    ``target`` is given it is projected with and without correction and
    each replay is scored against the target itself.
    """
    roi = config.target_roi
    ramp = make_ramp(roi.width, roi.height)
    before = simulate(ramp, config)
    cal = calibrate(before.observed, roi, config.lut_size, created=created, source=source)
    lut = cal.profile.lut

    corrected_ramp = apply_correction(ramp, lut)
    after = simulate(corrected_ramp, config)
    mse_after = response_mse(measure_ramp(after.observed, roi))

    images = {
        "ramp": ramp,
        "ramp_replay": before.observed,
        "corrected_ramp": corrected_ramp,
        "corrected_ramp_replay": after.observed,
    }
    summary = LoopSummary(config, cal, cal.profile.mse_before, mse_after, images=images)

    if target is not None:
        if target.shape != (roi.height, roi.width):
            raise DimensionError(
                f"target is {target.width}x{target.height}; this layout needs {roi.width}x{roi.height}"
            )
        plain = simulate(target, config)
        fixed_input = apply_correction(target, lut)
        fixed = simulate(fixed_input, config)
        r_before = image_mse(view_region(plain.observed, roi), target)
        r_after = image_mse(view_region(fixed.observed, roi), target).with_baseline(r_before.mse)
        summary.target = {
            "mse_before": r_before.mse,
            "mse_after": r_after.mse,
            "normalized_error_percent": r_after.normalized_error,
            "normalized_error_display": format_percent(r_after.normalized_error),
            "n_samples": r_after.n_samples,
        }
        images.update({
            "target_replay": plain.observed,
            "corrected_target": fixed_input,
            "corrected_target_replay": fixed.observed,
        })
    return summary

