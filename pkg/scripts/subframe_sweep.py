"""Half-plane replay MSE against subframe count for a fixed target."""
import argparse

import numpy as np

from hologamma.imaging import GreyImage
from hologamma.metrics import image_mse
from hologamma.ospr import OsprConfig, embed_target, ospr_frame, target_roi


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--counts", default="1,2,4,8,16,24,48")
    args = ap.parse_args()

    roi = target_roi(args.size, args.size)
    y, x = np.mgrid[0:roi.height, 0:roi.width]
    target = GreyImage(0.5 + 0.5 * np.sin(x / 7.0) * np.cos(y / 5.0))
    canvas = embed_target(target, args.size, args.size)
    print("subframes  " + "  ".join(f"seed {s:<4d}" for s in range(args.seeds)))
    for n in (int(c) for c in args.counts.split(",")):
        errs = [image_mse(ospr_frame(canvas, OsprConfig(n, s))[1], canvas, roi).mse for s in range(args.seeds)]
        print(f"{n:9d}  " + "  ".join(f"{e:9.5f}" for e in errs))


if __name__ == "__main__":
    main()
