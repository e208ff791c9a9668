"""Command-line interface: ``qsvdwm <command> ...``.

Exit codes: 0 ok, 1 usage, 2 I/O or format, 3 capacity, 4 internal error.
Outputs are written atomically, so a failing command leaves no partial files.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackSpec
from .codec import ber, format_pbm, format_ppm, format_bit_grid, load_bits, load_ppm, psnr
from .quaternion import FormatError
from .qsvd import BENCH_HEADER, bench_qsvd
from .transforms import OpLedger
from .watermark import (
    CapacityError,
    EmbedConfig,
    WatermarkKey,
    analyze_pairs,
    embed,
    embed_triple,
    extract,
    extract_triple,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CAPACITY, EXIT_INTERNAL = 0, 1, 2, 3, 4

TABLE3_ATTACKS = (
    "jpeg:20", "jpeg:40", "jpeg:60",
    "motion_blur:4,4", "motion_blur:6,6", "motion_blur:9,9",
    "crop:0.1", "crop:0.3", "crop:0.5",
    "rescale:0.5", "rescale:2", "rescale:4",
    "speckle:0.05", "salt_pepper:0.05",
)
DEFAULT_KEY = "0x5EED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _fmt(x: float) -> str:
    """Locale-independent number formatting; ``inf`` for the identical-image sentinel."""
    return "inf" if math.isinf(x) else f"{x:.4f}"


def _write(path: str | Path, data: bytes | str) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _bits_bytes(bits: np.ndarray, path: str) -> bytes:
    return format_pbm(bits) if path.lower().endswith(".pbm") else format_bit_grid(bits).encode()


def _dims(text: str) -> tuple[int, int]:
    try:
        e, f = (int(t) for t in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"dims must look like 64x64, got {text!r}") from exc
    if e < 1 or f < 1:
        raise argparse.ArgumentTypeError("dims must be positive")
    return e, f


def _key(text: str) -> WatermarkKey:
    try:
        return WatermarkKey.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _threshold(text: str) -> float:
    try:
        t = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad threshold {text!r}") from exc
    if not (t > 0 and math.isfinite(t)):
        raise argparse.ArgumentTypeError("threshold must be positive")
    return t


def _spec(text: str) -> AttackSpec:
    try:
        return AttackSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_embed(args, out) -> int:
    host = load_ppm(args.host)
    payloads = [load_bits(p) for p in args.payload]
    cfg = EmbedConfig(T=args.threshold, mode="triple" if args.triple else "single", threads=args.threads)
    if args.triple:
        if len(payloads) == 1:
            payloads *= 3
        if len(payloads) != 3:
            raise UsageError("--triple takes one payload (used thrice) or three payloads")
        job = embed_triple(host, payloads, args.key, cfg)
    else:
        if len(payloads) != 1:
            raise UsageError("single mode takes exactly one payload")
        job = embed(host, payloads[0], args.key, cfg)
    image = format_ppm(job.image)
    report = job.report_csv() if args.report else None
    _write(args.out, image)
    if report is not None:
        _write(args.report, report)
    print(f"psnr {_fmt(job.psnr)}", file=out)
    return EXIT_OK


def cmd_extract(args, out) -> int:
    img = load_ppm(args.input)
    cfg = EmbedConfig(mode="triple" if args.triple else "single", threads=args.threads)
    if args.triple:
        if len(args.out) != 3:
            raise UsageError("--triple needs three --out paths")
        planes = extract_triple(img, args.key, args.dims, cfg)
    else:
        if len(args.out) != 1:
            raise UsageError("single mode takes exactly one --out path")
        planes = [extract(img, args.key, args.dims, cfg)]
    truth = [load_bits(p) for p in args.compare] if args.compare else []
    blobs = [_bits_bytes(b, p) for b, p in zip(planes, args.out)]
    for p, blob in zip(args.out, blobs):
        _write(p, blob)
    for t, b in zip(truth, planes):
        print(f"ber {_fmt(ber(t, b))}", file=out)
    return EXIT_OK


def cmd_attack(args, out) -> int:
    img = load_ppm(args.input)
    attacked = args.spec.apply(img, default_seed=args.key.ka)
    _write(args.out, format_ppm(attacked))
    print(f"psnr {_fmt(psnr(img, attacked))}", file=out)
    return EXIT_OK


def cmd_metrics(args, out) -> int:
    if args.bits:
        print(f"ber {_fmt(ber(load_bits(args.bits[0]), load_bits(args.bits[1])))}", file=out)
    elif args.a and args.b:
        print(f"psnr {_fmt(psnr(load_ppm(args.a), load_ppm(args.b)))}", file=out)
    else:
        raise UsageError("metrics needs --a and --b, or --bits A B")
    return EXIT_OK


def cmd_analyze_nc(args, out) -> int:
    stats = analyze_pairs(load_ppm(args.input), threads=args.threads)
    text = stats.to_csv()
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
    deg = int(stats.degenerate.sum())
    if deg:
        print(f"degenerate blocks {deg}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    rows = bench_qsvd(args.a, args.b, args.kmax, args.trials, args.seed, use_givens=not args.no_givens)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow([r.k, r.m, r.n, r.wall_ns, r.flops, r.assignments, f"{r.residual:.6e}"])
    if args.out:
        _write(args.out, buf.getvalue())
    else:
        out.write(buf.getvalue())
    if args.ledger:
        from .quaternion import QuatMatrix
        from .qsvd import qsvd

        led = OpLedger()
        qsvd(QuatMatrix.random(args.a, args.b, np.random.default_rng(args.seed)), led, use_givens=not args.no_givens)
        _write(args.ledger, led.report())
    return EXIT_OK


def cmd_reproduce(args, out) -> int:
    images = sorted(Path(args.images).glob("*.ppm"))
    if not images:
        raise FileNotFoundError(f"no .ppm images in {args.images}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.suite == "table2":
        w.writerow(("image", "unit", "x", "y", "nc"))
        for p in images:
            stats = analyze_pairs(load_ppm(p), threads=args.threads)
            for unit, x, y, v in stats.rows():
                w.writerow((p.stem, unit, x, y, f"{v:.6f}"))
    else:
        payload = load_bits(args.payload)
        w.writerow(("image", "T", "attack", "ber", "psnr"))
        cfg = EmbedConfig(T=args.t, threads=args.threads)
        for p in images:
            host = load_ppm(p)
            job = embed(host, payload, args.key, cfg)
            w.writerow((p.stem, repr(args.t), "none", _fmt(ber(payload, extract(job.image, args.key, payload.shape, cfg))), _fmt(job.psnr)))
            for s in TABLE3_ATTACKS:
                spec = AttackSpec.parse(s)
                got = extract(spec.apply(job.image, default_seed=args.key.ka), args.key, payload.shape, cfg)
                w.writerow((p.stem, repr(args.t), spec.label(), _fmt(ber(payload, got)), _fmt(job.psnr)))
    _write(args.out, buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _default_payload() -> str:
    return str(Path(__file__).resolve().parents[2] / "data" / "watermark_logo.pbm")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qsvdwm", description="Quaternion SVD and blind color-image watermarking.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--threads", type=_positive, default=1, help="worker threads for block QSVDs")

    p = sub.add_parser("embed", help="embed a payload into a P6 host")
    p.add_argument("--host", required=True)
    p.add_argument("--payload", required=True, nargs="+", help="PBM or ASCII 0/1 grid (three for --triple)")
    p.add_argument("--key", required=True, type=_key)
    p.add_argument("--threshold", type=_threshold, default=0.02)
    p.add_argument("--triple", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="blind extraction")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--key", required=True, type=_key)
    p.add_argument("--dims", required=True, type=_dims)
    p.add_argument("--out", required=True, nargs="+")
    p.add_argument("--triple", action="store_true")
    p.add_argument("--compare", nargs="+", help="reference payload(s); prints BER")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="apply one attack")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--spec", required=True, type=_spec, help="kind:p1[,p2][,seed]")
    p.add_argument("--key", type=_key, default=WatermarkKey(0), help="default noise seed is key xor kind tag")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("metrics", help="PSNR of two images or BER of two bit matrices")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--bits", nargs=2)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("analyze-nc", help="NC table of first-column coefficient pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_analyze_nc)

    p = sub.add_parser("bench-qsvd", help="residual and operation-count benchmark")
    p.add_argument("--a", type=_positive, default=9)
    p.add_argument("--b", type=_positive, default=6)
    p.add_argument("--kmax", type=_positive, default=10)
    p.add_argument("--trials", type=_positive, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-givens", action="store_true", help="Householder-only reduction")
    p.add_argument("--ledger", help="write the ledger report of one a x b QSVD here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("reproduce", help="run a table over a directory of P6 images")
    p.add_argument("--suite", choices=("table2", "table3"), required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--t", type=_threshold, default=0.035)
    p.add_argument("--key", type=_key, default=WatermarkKey.parse(DEFAULT_KEY))
    p.add_argument("--payload", default=_default_payload())
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_reproduce)
    return ap


def run(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant breach
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
