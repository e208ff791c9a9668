"""NC of first-column coefficient pairs for every P6 image in a directory."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from qsvdwm.codec import load_ppm
from qsvdwm.watermark import PAIRS, UNITS, analyze_pairs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", default="data/images")
    ap.add_argument("--out", default="results/table2.csv")
    args = ap.parse_args()

    paths = sorted(Path(args.images).glob("*.ppm"))
    if not paths:
        sys.exit(f"no .ppm files in {args.images}")
    table = {p.stem: analyze_pairs(load_ppm(p)) for p in paths}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "image"] + [f"u{x}1-u{y}1" for x, y in PAIRS])
        for a in UNITS:
            for name, st in table.items():
                w.writerow([a, name] + [f"{st.value(a, x, y):.4f}" for x, y in PAIRS])
            w.writerow([a, "average"] + [f"{np.mean([st.value(a, x, y) for st in table.values()]):.4f}" for x, y in PAIRS])
        total = [np.mean([st.value(a, x, y) for st in table.values() for a in UNITS]) for x, y in PAIRS]
        w.writerow(["all", "total"] + [f"{v:.4f}" for v in total])
    print(Path(args.out).read_text(), end="")


if __name__ == "__main__":
    main()
