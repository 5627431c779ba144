"""Correct two test images with a calibrated LUT and score their replays.

Uses scikit-image's "camera" and "horse" samples when scikit-image is
installed, synthetic scenes otherwise.

    python scripts/sample_images.py --size 512 --distortion 0,0,0,1
"""
import argparse
import os

import numpy as np
from PIL import Image

from hologamma.imaging import GreyImage, write_image
from hologamma.metrics import format_percent
from hologamma.pipeline import PipelineConfig, run_loop


def _resize(a, w, h):
    im = Image.fromarray(np.uint8(np.clip(a, 0, 1) * 255 + 0.5))
    return np.asarray(im.resize((w, h), Image.Resampling.LANCZOS)) / 255.0


def sample_scenes(w, h):
    try:
        from skimage import data, filters

        city = data.camera() / 255.0
        horse = filters.gaussian(1.0 - data.horse().astype(float), sigma=2) * 0.8 + 0.1
    except ImportError:
        y, x = np.mgrid[0:h, 0:w] / max(w, h)
        city = np.clip(0.3 + 0.6 * y + 0.2 * np.sin(40 * x) * (y > 0.5), 0, 1)
        horse = np.clip(0.1 + 0.8 * ((x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.08), 0, 1)
    return {"sample 1": _resize(city, w, h), "sample 2": _resize(horse, w, h)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distortion", default="0,0,0,1")
    ap.add_argument("--out", default="runs/samples")
    args = ap.parse_args()

    cfg = PipelineConfig(width=args.size, height=args.size, seed=args.seed, distortion=args.distortion)
    roi = cfg.target_roi
    os.makedirs(args.out, exist_ok=True)
    for name, pixels in sample_scenes(roi.width, roi.height).items():
        s = run_loop(cfg, GreyImage.clipped(pixels), created="1970-01-01T00:00:00Z")
        t = s.target
        stem = name.replace(" ", "_")
        for key in ("target_replay", "corrected_target", "corrected_target_replay"):
            write_image(os.path.join(args.out, f"{stem}_{key}.png"), s.images[key])
        print(f"{name}: before {t['mse_before']:.5f}  after {t['mse_after']:.5f}  "
              f"normalised {format_percent(t['normalized_error_percent'])}")


if __name__ == "__main__":
    main()
