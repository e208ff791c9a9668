"""Write the default 64x64 payload: a dark ring with a bar on a white field (bit 1 = white)."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from qsvdwm.codec import save_pbm


def logo(size: int = 64) -> np.ndarray:
    y, x = np.mgrid[:size, :size] + 0.5
    c = size / 2
    r = np.hypot(x - c, y - c)
    ring = (r >= 0.30 * size) & (r <= 0.40 * size)
    bar = (np.abs(y - c) <= 0.06 * size) & (np.abs(x - c) <= 0.22 * size)
    return np.where(ring | bar, 0, 1).astype(np.uint8)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "watermark_logo.pbm")
    args = ap.parse_args()
    w = logo()
    save_pbm(w, args.out)
    print(f"{args.out}: {w.shape[0]}x{w.shape[1]}, zero fraction {1 - w.mean():.4f}")


if __name__ == "__main__":
    main()
