"""Gamma-response measurement, cubic fitting, inversion and correction.

The calibration loop is::

    ramp = make_ramp(w, h)                      # projected stimulus
    start = locate_fiducial(capture, roi) + 1
    response = measure_response(capture, roi, start)
    poly = fit_response(response)
    lut = invert_curve(poly, 256)
    corrected = apply_correction(image, lut)

All curves live on [0, 1]; percentages are a display concern only.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CalibrationWarning,
    ConditioningError,
    DegenerateCurveError,
    DimensionError,
    FiducialNotFoundError,
    InsufficientDataError,
    ProfileError,
)
from .imaging import LUMA_WEIGHTS, GreyImage, Roi, crop
from .metrics import mse

PROFILE_VERSION = 1
RANK_TOLERANCE = 1e-10
DEGENERATE_RANGE = 1e-6
SATURATION_LEVEL = 1.0 - 1e-6
SATURATION_FRACTION = 0.2


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    """Sampled input level -> output level mapping on [0, 1]."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64).ravel()
        y = np.asarray(self.outputs, dtype=np.float64).ravel()
        if x.size != y.size or x.size < 2:
            raise DimensionError("a response curve needs at least 2 paired samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("input levels must be strictly increasing")
        for v in (x, y):
            if not np.all(np.isfinite(v)) or v.min() < 0 or v.max() > 1:
                raise ValueError("curve levels must lie in [0, 1]")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)

    def __len__(self):
        return self.inputs.size

    def to_csv(self) -> str:
        lines = ["input,output"]
        lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.inputs, self.outputs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ResponseCurve":
        header, cols = read_csv_columns(text)
        if header[:2] != ["input", "output"]:
            raise ValueError("response CSV must start with header 'input,output'")
        return cls(cols[0], cols[1])


@dataclass(frozen=True)
class PolynomialCurve:
    """Cubic ``c0 + c1*x + c2*x**2 + c3*x**3``."""

    coefficients: tuple
    residual_norm: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) > 4 or len(c) == 0:
            raise ValueError("a cubic has at most four coefficients")
        object.__setattr__(self, "coefficients", c + (0.0,) * (4 - len(c)))

    def __call__(self, x):
        c0, c1, c2, c3 = self.coefficients
        x = np.asarray(x, dtype=np.float64)
        return c0 + x * (c1 + x * (c2 + x * c3))

    def to_csv(self) -> str:
        return "c0,c1,c2,c3\n" + ",".join(_fmt(c) for c in self.coefficients) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "PolynomialCurve":
        header, cols = read_csv_columns(text)
        if header != ["c0", "c1", "c2", "c3"] or len(cols[0]) != 1:
            raise ValueError("polynomial CSV must be header 'c0,c1,c2,c3' plus one row")
        return cls(tuple(c[0] for c in cols))


@dataclass(frozen=True, eq=False)
class CorrectionLut:
    """Correction curve sampled at ``K`` evenly spaced input levels ``i/(K-1)``."""

    entries: np.ndarray
    projected_fraction: float = field(default=0.0, compare=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64).ravel()
        if e.size < 2:
            raise DimensionError("a LUT needs at least 2 entries")
        if not np.all(np.isfinite(e)) or e.min() < 0 or e.max() > 1:
            raise ValueError("LUT entries must lie in [0, 1]")
        if np.any(np.diff(e) < 0):
            raise ValueError("LUT entries must be non-decreasing")
        if e[0] != 0.0 or e[-1] != 1.0:
            raise ValueError("LUT must start at 0 and end at 1")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def resolution(self) -> int:
        return self.entries.size

    @property
    def levels(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.resolution)

    def __call__(self, v):
        return np.interp(v, self.levels, self.entries)

    @classmethod
    def identity(cls, resolution: int = 256) -> "CorrectionLut":
        return cls(np.linspace(0.0, 1.0, resolution))

    def to_csv(self) -> str:
        lines = ["input,output"]
        lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.levels, self.entries)]
        return "\n".join(lines) + "\n"


def read_csv_columns(text: str) -> tuple[list[str], list[np.ndarray]]:
    """Parse a numeric CSV with a header row into ``(header, columns)``."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError("CSV needs a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    data = []
    for r in rows[1:]:
        if len(r) != len(header):
            raise ValueError("CSV row length does not match header")
        data.append([float(c) for c in r])
    arr = np.array(data, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("CSV contains non-finite values")
    return header, [arr[:, j] for j in range(arr.shape[1])]


# ------------------------------------------------------------------ operations


def make_ramp(width: int, height: int) -> GreyImage:
    """Grey-scale ramp with a full-white fiducial column at the left edge."""
    if width < 3 or height < 1:
        raise DimensionError(f"ramp needs width >= 3 and height >= 1, got {width}x{height}")
    row = np.empty(width)
    row[0] = 1.0
    row[1:] = np.linspace(0.0, 1.0, width - 1)
    return GreyImage(np.tile(row, (height, 1)))


def locate_fiducial(captured: GreyImage, roi: Optional[Roi] = None, factor: float = 1.5,
                    search_fraction: float = 0.1) -> int:
    """Column (relative to ``roi``) of the fiducial marker.

    The brightest column among the leftmost ``search_fraction`` of the ROI
    wins, provided its mean exceeds ``factor`` times the ROI mean.
    """
    region = crop(captured, roi or Roi.full(captured)).pixels
    means = region.mean(axis=0)
    n_search = max(1, math.ceil(search_fraction * means.size))
    col = int(np.argmax(means[:n_search]))
    if not means[col] > factor * region.mean():
        raise FiducialNotFoundError(
            f"no column in the leftmost {n_search} exceeds {factor}x the ROI mean"
        )
    return col


def measure_response(captured: GreyImage, roi: Optional[Roi], ramp_start: int) -> ResponseCurve:
    """Column-averaged, min-max normalized response of a captured ramp.

    ``ramp_start`` is relative to ``roi``; every column from there to the
    right edge of the ROI is one ramp sample.
    """
    region = crop(captured, roi or Roi.full(captured)).pixels
    if not 0 <= ramp_start < region.shape[1]:
        raise DimensionError(f"ramp start {ramp_start} lies outside the ROI")
    means = region[:, ramp_start:].mean(axis=0)
    if means.size < 2:
        raise DimensionError("ramp must span at least 2 columns")
    saturated = np.count_nonzero(means >= SATURATION_LEVEL)
    if saturated > SATURATION_FRACTION * means.size:
        warnings.warn(f"{saturated}/{means.size} ramp columns are saturated", CalibrationWarning)
    lo, hi = means.min(), means.max()
    outputs = (means - lo) / (hi - lo) if hi > lo else np.zeros_like(means)
    return ResponseCurve(np.linspace(0.0, 1.0, means.size), np.clip(outputs, 0.0, 1.0))


def fit_response(curve: ResponseCurve) -> PolynomialCurve:
    """Least-squares cubic through the response samples.

    Solved by SVD with singular values below ``1e-10`` times the largest
    treated as zero; any such cutoff is reported as a conditioning error.
    """
    if len(curve) < 4:
        raise InsufficientDataError(f"cubic fit needs >= 4 samples, got {len(curve)}")
    design = np.vander(curve.inputs, 4, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(design, curve.outputs, rcond=RANK_TOLERANCE)
    if rank < 4:
        raise ConditioningError(f"design matrix has rank {rank} < 4")
    residual = float(np.linalg.norm(design @ coeffs - curve.outputs))
    return PolynomialCurve(tuple(coeffs), residual)


def invert_curve(poly: PolynomialCurve, resolution: int = 256, samples: int = 65537) -> CorrectionLut:
    """Build a correction LUT that inverts ``poly`` on [0, 1].

    The cubic is sampled on ``samples`` points, clamped to [0, 1], forced
    non-decreasing with a running maximum and stretched to span [0, 1]. Each
    LUT level ``t`` then maps to the smallest ``x`` whose (piecewise-linear)
    response reaches ``t``.
    """
    if resolution < 2:
        raise DimensionError("LUT resolution must be >= 2")
    xs = np.linspace(0.0, 1.0, samples)
    raw = np.clip(poly(xs), 0.0, 1.0)
    mono = np.maximum.accumulate(raw)
    projected = float(np.count_nonzero(mono > raw)) / samples
    lo, hi = mono[0], mono[-1]
    if hi - lo < DEGENERATE_RANGE:
        raise DegenerateCurveError(f"fitted response spans only {hi - lo:.3g} over [0, 1]")
    if projected > 0:
        warnings.warn(
            f"fitted response is decreasing on {projected:.1%} of [0, 1]; projected to monotone",
            CalibrationWarning,
        )
    g = (mono - lo) / (hi - lo)
    levels = np.linspace(0.0, 1.0, resolution)

    # binary search: first sample index k with g[k] >= t
    k = np.searchsorted(g, levels, side="left")
    k = np.clip(k, 1, samples - 1)
    g0, g1 = g[k - 1], g[k]
    x0 = xs[k - 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(g1 > g0, (levels - g0) / (g1 - g0), 1.0)
    entries = np.clip(x0 + np.clip(frac, 0.0, 1.0) * (xs[1] - xs[0]), 0.0, 1.0)
    entries[0] = 0.0
    # every x on a top plateau maps to full output; pin full scale to x = 1
    entries[-1] = 1.0
    entries = np.maximum.accumulate(entries)
    return CorrectionLut(entries, projected_fraction=projected)


def apply_correction(image: GreyImage, lut: CorrectionLut) -> GreyImage:
    """Pass every pixel through ``lut`` with linear interpolation."""
    return GreyImage.clipped(lut(image.pixels))


def linear_reference(n: int) -> ResponseCurve:
    if n < 2:
        raise DimensionError("linear reference needs n >= 2")
    x = np.linspace(0.0, 1.0, n)
    return ResponseCurve(x, x)


def response_mse(curve: ResponseCurve) -> float:
    """MSE of the measured samples against the identity line."""
    return mse(curve.outputs, linear_reference(len(curve)).outputs)


# --------------------------------------------------------------------- profile


@dataclass(frozen=True)
class CalibrationProfile:
    polynomial: PolynomialCurve
    lut: CorrectionLut
    mse_before: float
    luma_weights: tuple = LUMA_WEIGHTS
    created: str = ""
    source: str = ""

    def to_dict(self) -> dict:
        return {
            "version": PROFILE_VERSION,
            "coefficients": list(self.polynomial.coefficients),
            "lut": [float(v) for v in self.lut.entries],
            "lut_resolution": self.lut.resolution,
            "mse_before": self.mse_before,
            "luma_weights": list(self.luma_weights),
            "created": self.created,
            "source": self.source,
            "fit_residual": self.polynomial.residual_norm,
            "projected_fraction": self.lut.projected_fraction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationProfile":
        if not isinstance(d, dict):
            raise ProfileError("profile must be a JSON object")
        if d.get("version") != PROFILE_VERSION:
            raise ProfileError(f"unsupported profile version {d.get('version')!r}")
        try:
            lut = CorrectionLut(d["lut"], projected_fraction=float(d.get("projected_fraction", 0.0)))
            if int(d["lut_resolution"]) != lut.resolution:
                raise ProfileError("lut_resolution does not match the LUT length")
            coeffs = d["coefficients"]
            if len(coeffs) != 4:
                raise ProfileError("profile needs exactly four coefficients")
            poly = PolynomialCurve(tuple(coeffs), float(d.get("fit_residual", 0.0)))
            return cls(
                polynomial=poly,
                lut=lut,
                mse_before=float(d["mse_before"]),
                luma_weights=tuple(float(w) for w in d["luma_weights"]),
                created=str(d["created"]),
                source=str(d["source"]),
            )
        except ProfileError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfileError(f"invalid profile: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CalibrationProfile":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProfileError(f"profile is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "CalibrationProfile":
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class CalibrationResult:
    profile: CalibrationProfile
    response: ResponseCurve
    fiducial_column: int


def iso_timestamp(epoch: Optional[float] = None) -> str:
    if epoch is None:
        epoch = datetime.now(timezone.utc).timestamp()
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat().replace("+00:00", "Z")


def calibrate(captured: GreyImage, roi: Optional[Roi] = None, resolution: int = 256,
              created: str = "", source: str = "",
              luma_weights: Sequence[float] = LUMA_WEIGHTS) -> CalibrationResult:
    """Run fiducial search, measurement, fit and inversion on one capture."""
    roi = roi or Roi.full(captured)
    fid = locate_fiducial(captured, roi)
    response = measure_response(captured, roi, fid + 1)
    poly = fit_response(response)
    lut = invert_curve(poly, resolution)
    profile = CalibrationProfile(
        polynomial=poly,
        lut=lut,
        mse_before=response_mse(response),
        luma_weights=tuple(luma_weights),
        created=created or iso_timestamp(),
        source=source,
    )
    return CalibrationResult(profile, response, fid)
