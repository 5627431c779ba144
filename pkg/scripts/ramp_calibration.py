"""Closed-loop ramp calibration on a simulated projector.

Projects the grey-scale ramp through OSPR with an injected transfer curve,
calibrates, re-projects the corrected ramp and prints the before/after
table. Response and correction curves are written as CSV and SVG.

    python scripts/ramp_calibration.py --size 256 --distortion 0,0,0,1 --out runs/ramp
"""
import argparse
import os

import numpy as np

from hologamma.metrics import format_percent
from hologamma.pipeline import PipelineConfig, measure_ramp, run_loop
from hologamma.svgplot import render_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="square hologram size")
    ap.add_argument("--subframes", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distortion", default="0,0,0,1")
    ap.add_argument("--noise-sigma", type=float, default=0.0)
    ap.add_argument("--out", default="runs/ramp")
    args = ap.parse_args()

    cfg = PipelineConfig(width=args.size, height=args.size, subframes=args.subframes,
                         seed=args.seed, distortion=args.distortion, noise_sigma=args.noise_sigma)
    s = run_loop(cfg, created="1970-01-01T00:00:00Z")
    os.makedirs(args.out, exist_ok=True)

    before = s.calibration.response
    after = measure_ramp(s.images["corrected_ramp_replay"], cfg.target_roi)
    lut = s.calibration.profile.lut
    poly = s.calibration.profile.polynomial
    x = before.inputs
    with open(os.path.join(args.out, "curves.csv"), "w") as fh:
        fh.write("input,measured,fit,corrected\n")
        for row in zip(x, before.outputs, np.clip(poly(x), 0, 1), after.outputs):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(os.path.join(args.out, "response.svg"), "w") as fh:
        fh.write(render_svg([
            ("measured", x, before.outputs),
            ("cubic fit", x, poly(x)),
            ("correction", lut.levels, lut.entries),
            ("linear", x, x),
        ]))
    with open(os.path.join(args.out, "corrected.svg"), "w") as fh:
        fh.write(render_svg([("corrected response", after.inputs, after.outputs), ("linear", x, x)]))
    s.calibration.profile.save(os.path.join(args.out, "profile.json"))

    print(f"{'':28s}{'MSE':>12s}{'Normalised':>12s}")
    print(f"{'native response':28s}{s.ramp_mse_before:12.6f}{'100%':>12s}")
    print(f"{'corrected response':28s}{s.ramp_mse_after:12.6f}{format_percent(s.normalized_error):>12s}")
    print(f"fit c0..c3 = {', '.join(f'{c:.4f}' for c in poly.coefficients)}")


if __name__ == "__main__":
    main()
