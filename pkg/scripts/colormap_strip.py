#!/usr/bin/env python3
"""Render the temperature colormap as a comparison strip.

Top row: the Lab-interpolated ramp the package uses. Bottom row: a naive
sRGB lerp between the same endpoints, which washes out through the middle.

Example:
    python scripts/colormap_strip.py -o colormap.png
"""

from __future__ import annotations

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fieldsync.color import BLUE_ENDPOINT, RED_ENDPOINT, temp_color


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-o", "--out", default="colormap.png")
    parser.add_argument("--steps", type=int, default=512)
    args = parser.parse_args()

    ts = np.linspace(0.0, 1.0, args.steps)
    lab_ramp = np.array([temp_color(t, (0.0, 1.0)) for t in ts])
    naive = np.array([
        [(1 - t) * b + t * r for b, r in zip(BLUE_ENDPOINT, RED_ENDPOINT)]
        for t in ts
    ])

    fig, axes = plt.subplots(2, 1, figsize=(8, 2.2))
    for ax, ramp, title in ((axes[0], lab_ramp, "CIELAB interpolation"),
                            (axes[1], naive, "naive sRGB lerp")):
        ax.imshow(ramp[np.newaxis, :, :], aspect="auto")
        ax.set_title(title, fontsize=9, loc="left")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
