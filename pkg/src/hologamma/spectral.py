"""2D discrete Fourier transforms and DC-centering shifts.

Convention: the forward transform is unnormalized with kernel
``exp(-2j*pi*(u*x/W + v*y/H))``; the inverse carries the ``1/(W*H)`` factor.
Arrays are indexed ``[row, col]`` i.e. ``[y, x]``. Any size is accepted.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError

FORWARD = "forward"
INVERSE = "inverse"


def as_field(field) -> np.ndarray:
    """Validate and return a complex128 2D array."""
    f = np.asarray(field, dtype=np.complex128)
    if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
        raise DimensionError(f"complex field must be a non-empty 2D array, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("complex field contains NaN or Inf")
    return f


def dft2(field, direction: str = FORWARD) -> np.ndarray:
    """2D DFT of ``field`` in the given direction (``"forward"`` or ``"inverse"``)."""
    f = as_field(field)
    if direction == FORWARD:
        return np.fft.fft2(f)
    if direction == INVERSE:
        return np.fft.ifft2(f)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def center_shift(field) -> np.ndarray:
    """Swap quadrants so that the DC bin moves to ``(H//2, W//2)``."""
    return np.fft.fftshift(np.asarray(field), axes=(0, 1))


def uncenter_shift(field) -> np.ndarray:
    """Inverse of :func:`center_shift` (differs from it only for odd sizes)."""
    return np.fft.ifftshift(np.asarray(field), axes=(0, 1))


def mirror(a) -> np.ndarray:
    """Return ``a[(-y) % H, (-x) % W]``, the point reflection about index (0, 0)."""
    a = np.asarray(a)
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))
