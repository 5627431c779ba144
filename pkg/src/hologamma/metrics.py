"""Mean squared error and normalized-error reporting."""
from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np

from .errors import DimensionError
from .imaging import GreyImage, Roi, crop


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or a.size != b.size:
        raise DimensionError(f"mse needs equal, non-zero lengths (got {a.size} and {b.size})")
    d = a - b
    return float(np.mean(d * d))


def normalized_error(mse_after: float, mse_before: float) -> float:
    """``mse_after`` as a percentage of ``mse_before``."""
    if mse_before == 0:
        raise ZeroDivisionError("baseline MSE is zero")
    if mse_before < 0 or mse_after < 0:
        raise ValueError("MSE values must be non-negative")
    return 100.0 * mse_after / mse_before


def round_half_up(value: float, places: int = 2) -> Decimal:
    q = Decimal(1).scaleb(-places)
    return Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP)


def format_percent(value: float, places: int = 2) -> str:
    """Display form of a percentage, e.g. ``6.2424`` -> ``"6.24%"``."""
    return f"{round_half_up(value, places)}%"


@dataclass(frozen=True)
class MetricReport:
    mse: float
    normalized_error: float
    n_samples: int

    def __post_init__(self):
        if self.mse < 0 or self.normalized_error < 0:
            raise ValueError("metrics must be non-negative")

    def with_baseline(self, mse_before: float) -> "MetricReport":
        return MetricReport(self.mse, normalized_error(self.mse, mse_before), self.n_samples)

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "normalized_error_percent": self.normalized_error,
            "n_samples": self.n_samples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def image_mse(a: GreyImage, b: GreyImage, roi: Optional[Roi] = None) -> MetricReport:
    """Pixel MSE of two images, optionally restricted to ``roi``.

    With no baseline the report's normalized error is 100%, i.e. the image
    is its own reference.
    """
    if a.shape != b.shape:
        raise DimensionError(f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    if roi is not None:
        a, b = crop(a, roi), crop(b, roi)
    value = mse(a.pixels, b.pixels)
    return MetricReport(value, 100.0, a.pixels.size)
