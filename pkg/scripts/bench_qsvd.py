"""Residual and operation counts for ``ka x kb`` random quaternion matrices.

Also prints the ratio of the measured bidiagonalization flops to the
``64 (m n^2 - n^3 / 3)`` estimate, and the hybrid-vs-Householder-only saving
on one 4x4 pure block.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from qsvdwm.qsvd import bench_qsvd, qsvd, write_bench_csv
from qsvdwm.quaternion import QuatMatrix
from qsvdwm.transforms import OpLedger


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=int, default=9)
    ap.add_argument("--b", type=int, default=6)
    ap.add_argument("--kmax", type=int, default=10)
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--out", default="results/bench.csv")
    args = ap.parse_args()

    rows = bench_qsvd(args.a, args.b, args.kmax, args.trials)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_bench_csv(rows, args.out)
    print(f"{'k':>3} {'m':>4} {'n':>4} {'ms':>9} {'residual':>10} {'bidiag/est':>10}")
    for r in rows:
        est = 64 * (r.m * r.n**2 - r.n**3 / 3)
        print(f"{r.k:3d} {r.m:4d} {r.n:4d} {r.wall_ns / 1e6:9.2f} {r.residual:10.2e} {r.bidiag_flops / est:10.2f}")

    Q = QuatMatrix.random(4, 4, np.random.default_rng(0), pure=True)
    hyb, h3 = OpLedger(), OpLedger()
    qsvd(Q, hyb, use_givens=True)
    qsvd(Q, h3, use_givens=False)
    phases = ("generate", "apply")
    print("4x4 saving (generate+apply):",
          h3.total("flops", phases) - hyb.total("flops", phases), "flops,",
          h3.total("assignments", phases) - hyb.total("assignments", phases), "assignments")


if __name__ == "__main__":
    main()
