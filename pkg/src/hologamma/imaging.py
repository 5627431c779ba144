"""Grey/RGB image values, 8-bit conversion and PNG/PNM file I/O.

Intensities are held as float64 in [0, 1]; 8-bit only appears at the file
boundary.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Union

import numpy as np
from PIL import Image

from .errors import BoundsError, DimensionError

#: BT.709 luma weights (r, g, b).
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GreyImage:
    """Normalized grey-scale image, ``pixels[row, col]`` in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError(f"grey image must be a non-empty 2D array, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("grey image values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(p))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GreyImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    @classmethod
    def clipped(cls, values) -> "GreyImage":
        """Build an image from arbitrary reals, clamping into [0, 1]."""
        return cls(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class RgbImage:
    """24-bit colour image, ``pixels[row, col, channel]`` as uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError(f"RGB image must have shape (h, w, 3), got {p.shape}")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("RGB channel values must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(p))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Roi:
    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if min(self.x0, self.y0) < 0 or min(self.width, self.height) < 1:
            raise BoundsError(f"invalid ROI {self}")

    @classmethod
    def full(cls, image: GreyImage) -> "Roi":
        return cls(0, 0, image.width, image.height)

    @classmethod
    def parse(cls, text: str) -> "Roi":
        """Parse ``"x0,y0,w,h"``."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 4:
            raise ValueError(f"ROI must be 'x0,y0,w,h', got {text!r}")
        return cls(*(int(p) for p in parts))

    def check_within(self, width: int, height: int) -> None:
        if self.x0 + self.width > width or self.y0 + self.height > height:
            raise BoundsError(f"ROI {self} exceeds image bounds {width}x{height}")

    def inner(self, other: "Roi") -> "Roi":
        """Express ``other`` (relative to this ROI) in host coordinates."""
        other.check_within(self.width, self.height)
        return Roi(self.x0 + other.x0, self.y0 + other.y0, other.width, other.height)

    @property
    def slices(self) -> tuple[slice, slice]:
        return (slice(self.y0, self.y0 + self.height), slice(self.x0, self.x0 + self.width))


def rgb_to_grey(image: RgbImage, weights=LUMA_WEIGHTS) -> GreyImage:
    """Luma of each pixel, scaled to [0, 1]."""
    wr, wg, wb = weights
    if not np.isclose(wr + wg + wb, 1.0):
        raise ValueError("luma weights must sum to 1")
    rgb = image.pixels.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    # written relative to g so that r == g == b returns g exactly
    y = g + wr * (r - g) + wb * (b - g)
    return GreyImage.clipped(y / 255.0)


def quantize8(image: GreyImage) -> np.ndarray:
    """Round-half-up to uint8 codes."""
    return np.floor(image.pixels * 255.0 + 0.5).astype(np.uint8)


def dequantize8(raster) -> GreyImage:
    raster = np.asarray(raster)
    if raster.dtype != np.uint8:
        raster = raster.astype(np.uint8)
    return GreyImage(raster / 255.0)


def crop(image: GreyImage, roi: Roi) -> GreyImage:
    roi.check_within(image.width, image.height)
    return GreyImage(image.pixels[roi.slices])


# --------------------------------------------------------------------- file I/O

AnyImage = Union[GreyImage, RgbImage]


def _pnm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("truncated PNM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header from raster
    return tokens, pos + 1


def decode_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode binary P5/P6 data into ``(array, maxval)``."""
    (magic, w, h, maxval), offset = _pnm_tokens(data, 4)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported PNM type {magic!r}")
    w, h, maxval = int(w), int(h), int(maxval)
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise ValueError("invalid PNM header")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    n = w * h * channels
    raster = np.frombuffer(data, dtype=dtype, count=n, offset=offset)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return raster.reshape(shape), maxval


def encode_pnm(raster: np.ndarray, maxval: int = 255) -> bytes:
    raster = np.asarray(raster, dtype=">u2" if maxval > 255 else np.uint8)
    magic = b"P6" if raster.ndim == 3 else b"P5"
    h, w = raster.shape[:2]
    header = b"%s\n%d %d\n%d\n" % (magic, w, h, maxval)
    return header + raster.tobytes()


def read_image(path) -> AnyImage:
    """Load a PNG or binary PGM/PPM as a :class:`GreyImage` or :class:`RgbImage`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P5", b"P6"):
        raster, maxval = decode_pnm(data)
        if raster.ndim == 3:
            if maxval != 255:
                raster = np.floor(raster * (255.0 / maxval) + 0.5).astype(np.uint8)
            return RgbImage(raster)
        return GreyImage(raster / float(maxval))
    with Image.open(io.BytesIO(data)) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            a = np.asarray(im, dtype=np.float64)
            return GreyImage.clipped(a / 65535.0)
        if im.mode == "L":
            return dequantize8(np.asarray(im))
        if im.mode == "LA":
            return dequantize8(np.asarray(im.convert("L")))
        return RgbImage(np.asarray(im.convert("RGB")))


def load_grey(path, weights=LUMA_WEIGHTS) -> GreyImage:
    """Load any supported image and reduce it to grey-scale."""
    image = read_image(path)
    if isinstance(image, RgbImage):
        return rgb_to_grey(image, weights)
    return image


def _format_of(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        return "png"
    if ext in (".pgm", ".ppm", ".pnm"):
        return "pnm"
    raise ValueError(f"unsupported image extension {ext!r} (use .png, .pgm or .ppm)")


def write_raster(path, raster: np.ndarray) -> None:
    """Write uint8 grey (h, w) or RGB (h, w, 3) data."""
    fmt = _format_of(path)
    raster = np.ascontiguousarray(raster, dtype=np.uint8)
    if fmt == "pnm":
        payload = encode_pnm(raster)
    else:
        buf = io.BytesIO()
        Image.fromarray(raster).save(buf, format="PNG")
        payload = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(payload)


def write_image(path, image: AnyImage) -> None:
    if isinstance(image, RgbImage):
        write_raster(path, image.pixels)
    else:
        write_raster(path, quantize8(image))
