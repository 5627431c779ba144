"""One-step phase retrieval (OSPR) for binary-phase Fourier holograms.

Targets and replay fields are both held in *display* coordinates: the DC bin
sits at ``(H//2, W//2)``. Because a binary (real-valued) hologram always
replays a point-symmetric twin of the target, the default placement puts the
target in the upper half-plane and leaves the lower half for the conjugate.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError
from .imaging import GreyImage, Roi, encode_pnm
from .spectral import FORWARD, INVERSE, center_shift, dft2, mirror, uncenter_shift

HALF_PLANE = "half-plane"
FULL_PLANE = "full-plane"
PLACEMENTS = (HALF_PLANE, FULL_PLANE)

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mix."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def subframe_seed(seed: int, index: int) -> int:
    """Seed of subframe ``index``: ``splitmix64(seed + (index + 1) * golden)`` mod 2**64."""
    return splitmix64((seed + (index + 1) * _GOLDEN64) & _MASK64)


@dataclass(frozen=True, eq=False)
class BinaryHologram:
    """Binary phase pattern; ``bits[row, col]`` of 1 means a phase of pi."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"hologram must be a non-empty 2D array, got shape {b.shape}")
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("hologram bits must be 0 or 1")
        b = b.astype(np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def phases(self) -> np.ndarray:
        return self.bits * np.pi

    def __eq__(self, other):
        if not isinstance(other, BinaryHologram):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def to_pgm(self) -> bytes:
        """1-bit PGM payload (maxval 1): phase 0 black, phase pi white."""
        return encode_pnm(self.bits, maxval=1)


@dataclass(frozen=True)
class OsprConfig:
    subframes: int = 24
    seed: int = 0
    target_placement: str = HALF_PLANE

    def __post_init__(self):
        if int(self.subframes) < 1:
            raise ConfigurationError(f"subframes must be >= 1, got {self.subframes}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.target_placement not in PLACEMENTS:
            raise ConfigurationError(f"target_placement must be one of {PLACEMENTS}")


def target_roi(width: int, height: int, placement: str = HALF_PLANE) -> Roi:
    """Region of a ``width`` x ``height`` replay plane that holds the target.

    For the half-plane layout this is every row above the DC row, minus row 0
    when ``height`` is even: that row is the Nyquist row, which maps onto
    itself under point reflection and would overlap its own twin.
    """
    if placement == FULL_PLANE:
        return Roi(0, 0, width, height)
    if placement != HALF_PLANE:
        raise ConfigurationError(f"unknown placement {placement!r}")
    top = 1 if height % 2 == 0 else 0
    rows = height // 2 - top
    if rows < 1 or width < 1:
        raise DimensionError(f"{width}x{height} plane is too small for a half-plane target")
    return Roi(0, top, width, rows)


def embed_target(target: GreyImage, width: int, height: int,
                 placement: str = HALF_PLANE) -> GreyImage:
    """Place ``target`` on a zero canvas of the hologram size."""
    roi = target_roi(width, height, placement)
    if target.shape != (roi.height, roi.width):
        raise DimensionError(
            f"target is {target.width}x{target.height}, but a {width}x{height} "
            f"{placement} layout needs {roi.width}x{roi.height}"
        )
    canvas = np.zeros((height, width))
    canvas[roi.slices] = target.pixels
    return GreyImage(canvas)


def ospr_subframe(target: GreyImage, seed: int,
                  shape: Optional[tuple[int, int]] = None) -> BinaryHologram:
    """Generate one binary hologram for an embedded target canvas.

    Parameters
    ----------
    target : GreyImage
        Target intensity in display coordinates, already embedded in the
        full hologram plane.
    seed : int
        Seed of the random diffuser phase.
    shape : (height, width), optional
        Expected hologram size; checked against the target when given.
    """
    if shape is not None and tuple(shape) != target.shape:
        raise DimensionError(f"target shape {target.shape} does not match hologram shape {tuple(shape)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    amplitude = np.sqrt(uncenter_shift(target.pixels))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=amplitude.shape)
    hologram_plane = dft2(amplitude * np.exp(1j * phase), INVERSE)
    return BinaryHologram((hologram_plane.real < 0).astype(np.uint8))


def replay_intensity(hologram: BinaryHologram) -> np.ndarray:
    """Unnormalized replay intensity in display coordinates.

    The field is real (+1/-1), so the spectrum is Hermitian and the intensity
    point-symmetric; the symmetry is imposed exactly to strip FFT round-off.
    """
    field = np.where(hologram.bits == 1, -1.0, 1.0)
    intensity = np.abs(dft2(field, FORWARD)) ** 2
    intensity = 0.5 * (intensity + mirror(intensity))
    return center_shift(intensity)


def simulate_replay(hologram: BinaryHologram) -> GreyImage:
    """Max-normalized replay intensity in display coordinates."""
    intensity = replay_intensity(hologram)
    return GreyImage.clipped(intensity / intensity.max())


def ospr_frame(target: GreyImage, config: OsprConfig = OsprConfig(),
               workers: int = 1) -> tuple[list[BinaryHologram], GreyImage]:
    """Generate ``config.subframes`` holograms and their time-averaged replay.

    Subframes may be computed concurrently (``workers > 1``); the average is
    always reduced sequentially in subframe order, so the result does not
    depend on ``workers``.
    """
    if not isinstance(config, OsprConfig):
        raise ConfigurationError("config must be an OsprConfig")
    seeds = [subframe_seed(int(config.seed), k) for k in range(int(config.subframes))]

    def one(seed):
        holo = ospr_subframe(target, seed)
        return holo, replay_intensity(holo)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    total = np.zeros(target.shape)
    for _, intensity in results:
        total += intensity
    mean = total / len(results)
    return [h for h, _ in results], GreyImage.clipped(mean / mean.max())


def export_frame(holograms: Sequence[BinaryHologram], directory, config: OsprConfig,
                 extra: Optional[dict] = None) -> str:
    """Write each subframe as a 1-bit PGM plus a ``manifest.json``; return the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for k, holo in enumerate(holograms):
        name = f"subframe_{k:02d}.pgm"
        with open(os.path.join(directory, name), "wb") as fh:
            fh.write(holo.to_pgm())
        files.append(name)
    h, w = holograms[0].bits.shape
    manifest = {
        "seed": int(config.seed),
        "subframes": len(holograms),
        "placement": config.target_placement,
        "width": w,
        "height": h,
        "subframe_seeds": [subframe_seed(int(config.seed), k) for k in range(len(holograms))],
        "files": files,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path
