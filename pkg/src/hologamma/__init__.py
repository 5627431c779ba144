"""Gamma calibration for binary-phase holographic projection.

Generates OSPR holograms, simulates their replay fields, measures a
projector's gamma response from a grey-scale ramp and corrects images with
the inverted response.
"""
from .calibration import (
    CalibrationProfile,
    CorrectionLut,
    PolynomialCurve,
    ResponseCurve,
    apply_correction,
    calibrate,
    fit_response,
    invert_curve,
    linear_reference,
    locate_fiducial,
    make_ramp,
    measure_response,
)
from .imaging import GreyImage, RgbImage, Roi, crop, dequantize8, quantize8, rgb_to_grey
from .metrics import MetricReport, image_mse, mse, normalized_error
from .ospr import BinaryHologram, OsprConfig, ospr_frame, ospr_subframe, simulate_replay
from .spectral import center_shift, dft2

__version__ = "0.1.0"
