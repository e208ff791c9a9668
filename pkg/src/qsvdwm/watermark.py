"""Blind color-image watermarking in the first column of the block QSVD.

Each selected 4x4 block ``Q = U S V^H`` carries one bit (single mode) or three
bits (triple mode) in the magnitude relation of the coefficient pair
``(u21, u31)`` along an imaginary unit ``a``:

    gap_a = |(u21)_a| - |(u31)_a|,   bit 1  <=>  gap_a >= 0

Single mode picks, per block, the unit that needs the smallest change and
inflates its margin until it dominates every wrong-sign gap of the other
units, so blind extraction can use ``argmax |gap|``.  Embedding is verified
on the stored (real part dropped, 8-bit) block and the margin is boosted
where a bit would not survive.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .codec import (
    RgbImage,
    assemble_array,
    encode_quaternion,
    ncc,
    partition,
    psnr,
    to_bytes,
)
from .quaternion import QuatMatrix
from .qsvd import qsvd_batch, reconstruct_batch
from .rng import MASK, permutation

UNITS = "ijk"
PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
LIFT = 8.0 / 255.0  # gray added to near-black host blocks so a bit survives 8-bit storage
REPORT_HEADER = ("block_r", "block_c", "unit", "bit", "margin", "delta1", "delta2")


class CapacityError(ValueError):
    """Payload larger than the number of available blocks."""


@dataclass(frozen=True)
class WatermarkKey:
    ka: int

    def __post_init__(self) -> None:
        if not 0 <= self.ka <= MASK:
            raise ValueError("key must be an unsigned 64-bit integer")

    @classmethod
    def parse(cls, text: str) -> WatermarkKey:
        """Decimal or ``0x`` hexadecimal."""
        t = text.strip().lower()
        try:
            val = int(t, 16) if t.startswith("0x") else int(t, 10)
        except ValueError as exc:
            raise ValueError(f"bad key {text!r}") from exc
        return cls(val)

    def schedule(self, grid_shape: tuple[int, int], count: int) -> np.ndarray:
        """First ``count`` block coordinates of the keyed permutation, shape ``(count, 2)``."""
        bm, bn = grid_shape
        if count > bm * bn:
            raise CapacityError(f"{count} blocks requested, {bm * bn} available")
        idx = permutation(bm * bn, self.ka)[:count]
        return np.stack([idx // bn, idx % bn], axis=1)


def key_schedule(key: WatermarkKey, grid_dims: tuple[int, int], count: int) -> np.ndarray:
    return key.schedule(grid_dims, count)


@dataclass(frozen=True)
class EmbedConfig:
    T: float = 0.02
    mode: str = "single"
    epsilon_margin: float | None = None
    boost: float = 1.25
    max_rounds: int = 40
    lift_after: int = 12
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("threshold T must be positive")
        if self.mode not in ("single", "triple"):
            raise ValueError("mode must be 'single' or 'triple'")
        if self.epsilon_margin is not None and not self.epsilon_margin > 0:
            raise ValueError("epsilon_margin must be positive")
        if self.boost <= 1 or self.max_rounds < 1 or self.lift_after < 1 or self.threads < 1:
            raise ValueError("boost must exceed 1; max_rounds, lift_after and threads must be positive")

    @property
    def eps(self) -> float:
        return self.T / 10 if self.epsilon_margin is None else self.epsilon_margin


@dataclass(frozen=True)
class BlockEmbedRecord:
    block: tuple[int, int]
    unit: str
    bit: int
    margin: float
    delta1: float
    delta2: float
    rounds: int = 0
    lifted: bool = False


@dataclass(frozen=True, eq=False)
class WatermarkJob:
    image: RgbImage
    records: list[BlockEmbedRecord]
    psnr: float
    mode: str
    T: float

    def report_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.records:
            w.writerow([r.block[0], r.block[1], r.unit, r.bit, repr(r.margin), repr(r.delta1), repr(r.delta2)])
        buf.write(f"# psnr={self.psnr!r} mode={self.mode} T={self.T!r}\n")
        return buf.getvalue()

    def write_report(self, path: str | Path) -> None:
        Path(path).write_text(self.report_csv())


# ---------------------------------------------------------------------------
# block kernels (batched over a leading axis)
# ---------------------------------------------------------------------------

def _sgn(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0, -1.0)


def pair_gaps(U: np.ndarray) -> np.ndarray:
    """``|(u21)_a| - |(u31)_a|`` for ``a = i, j, k``; shape ``(nb, 3)``."""
    return np.abs(U[:, 1, 0, 1:]) - np.abs(U[:, 2, 0, 1:])


def decide(gaps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-mode decision: unit ``argmax |gap|`` and its sign."""
    unit = np.argmax(np.abs(gaps), axis=1)
    g = gaps[np.arange(len(gaps)), unit]
    return (g >= 0).astype(np.uint8), unit


def choose_unit(gaps: np.ndarray, bits: np.ndarray, T: float, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Least-cost unit and its dominance margin for each block."""
    s = np.where(bits == 1, 1.0, -1.0)[:, None]
    wrong = np.where(_sgn(gaps) != s, np.abs(gaps), -np.inf)
    margins = np.empty_like(gaps)
    for a in range(3):
        others = np.delete(wrong, a, axis=1).max(axis=1)
        margins[:, a] = np.maximum(T, others + eps)
    cost = np.abs(s * margins - gaps)
    unit = np.argmin(cost, axis=1)
    return unit, margins[np.arange(len(unit)), unit]


def set_pair(U: np.ndarray, unit: np.ndarray, bits: np.ndarray, margin: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recenter the pair on its mean magnitude with gap ``+-margin``, signs kept.

    Returns ``(U*, delta1, delta2)``.
    """
    rows = np.arange(U.shape[0])
    comp = unit + 1
    u2 = U[rows, 1, 0, comp]
    u3 = U[rows, 2, 0, comp]
    avg = (np.abs(u2) + np.abs(u3)) / 2
    hi = avg + margin / 2
    lo = avg - margin / 2
    neg = lo < 0
    hi = np.where(neg, margin, hi)
    lo = np.where(neg, 0.0, lo)
    one = bits == 1
    n2 = _sgn(u2) * np.where(one, hi, lo)
    n3 = _sgn(u3) * np.where(one, lo, hi)
    Us = U.copy()
    Us[rows, 1, 0, comp] = n2
    Us[rows, 2, 0, comp] = n3
    return Us, n2 - u2, n3 - u3


def stored_form(Q: np.ndarray) -> np.ndarray:
    """Drop the real part, clamp and quantize to 8 bits (component stack in, out)."""
    out = np.zeros_like(Q)
    out[..., 1:] = to_bytes(Q[..., 1:]) / 255.0
    return out


@dataclass
class _BatchResult:
    blocks: np.ndarray
    unit: np.ndarray
    margin: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    rounds: np.ndarray
    lifted: np.ndarray


def _holds(g: np.ndarray, bits: np.ndarray, eps: float, triple: bool) -> np.ndarray:
    """Dominance on a re-decomposed block, which also implies a correct decision."""
    if triple:
        return np.all(np.where(bits == 1, 1.0, -1.0) * g >= eps, axis=1)
    s = np.where(bits == 1, 1.0, -1.0)[:, None]
    right = _sgn(g) == s
    best = np.where(right, np.abs(g), 0.0).max(axis=1)
    worst = np.where(right, 0.0, np.abs(g)).max(axis=1)
    return best - worst >= eps


def embed_blocks(X: np.ndarray, bits: np.ndarray, cfg: EmbedConfig, store: bool = True) -> _BatchResult:
    """Embed into a stack of pure blocks ``(nb, 4, 4, 4)``.

    ``bits`` is ``(nb,)`` in single mode and ``(nb, 3)`` in triple mode.  With
    ``store`` the result is the stored form, re-decomposed to check that the
    dominance margin survived; failing blocks get a larger margin, and after
    ``cfg.lift_after`` rounds a gray lift.  Without ``store`` the raw
    ``U* S V^H`` is returned unverified.
    """
    X = np.array(X, dtype=np.float64)
    bits = np.asarray(bits, dtype=np.uint8)
    nb = X.shape[0]
    triple = cfg.mode == "triple"
    if bits.shape != ((nb, 3) if triple else (nb,)):
        raise ValueError(f"bit array shape {bits.shape} does not match {nb} blocks in {cfg.mode} mode")

    U, S, V = qsvd_batch(X, threads=cfg.threads)
    unit = np.tile(np.arange(3), (nb, 1)) if triple else np.zeros(nb, dtype=np.int64)
    margin = np.full((nb, 3) if triple else nb, cfg.T)

    def plan(idx: np.ndarray) -> None:
        if not triple:
            unit[idx], margin[idx] = choose_unit(pair_gaps(U[idx]), bits[idx], cfg.T, cfg.eps)
        else:
            margin[idx] = cfg.T

    def lift(idx: np.ndarray) -> None:
        if idx.size == 0:
            return
        X[idx, ..., 1:] = np.minimum(X[idx, ..., 1:] + LIFT, 1.0)
        U[idx], S[idx], V[idx] = qsvd_batch(X[idx])
        lifted[idx] = True
        plan(idx)

    lifted = np.zeros(nb, dtype=bool)
    plan(np.arange(nb))
    if store:
        lift(np.flatnonzero(S[:, 0] <= 0.0))

    def build(idx: np.ndarray):
        Us = U[idx]
        if triple:
            d1 = np.empty((len(idx), 3))
            d2 = np.empty((len(idx), 3))
            for a in range(3):
                Us, d1[:, a], d2[:, a] = set_pair(Us, np.full(len(idx), a), bits[idx, a], margin[idx, a])
        else:
            Us, d1, d2 = set_pair(Us, unit[idx], bits[idx], margin[idx])
        return reconstruct_batch(Us, S[idx], V[idx]), d1, d2

    out = np.empty_like(X)
    d1 = np.zeros(margin.shape)
    d2 = np.zeros(margin.shape)
    rounds = np.zeros(nb, dtype=np.int64)
    todo = np.arange(nb)
    for _ in range(cfg.max_rounds + 1):
        Q, d1[todo], d2[todo] = build(todo)
        if not store:
            out[todo] = Q
            break
        out[todo] = stored_form(Q)
        Ur, _, _ = qsvd_batch(out[todo], threads=cfg.threads)
        g = pair_gaps(Ur)
        ok = _holds(g, bits[todo], cfg.eps, triple)
        todo, g = todo[~ok], g[~ok]
        if todo.size == 0:
            break
        rounds[todo] += 1
        stale = (rounds[todo] >= cfg.lift_after) & ~lifted[todo]
        lift(todo[stale])
        boost = todo[~stale]
        if triple:
            short = np.where(bits[boost] == 1, 1.0, -1.0) * g[~stale] < cfg.eps
            margin[boost] *= np.where(short, cfg.boost, 1.0)
        else:
            margin[boost] *= cfg.boost
    else:
        raise RuntimeError(f"{todo.size} block(s) could not be made to carry their bit")
    return _BatchResult(out, unit, margin, d1, d2, rounds, lifted)


def extract_blocks(X: np.ndarray, mode: str = "single", threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Bits and erasure flags from a stack of blocks (real part ignored).

    Erasures are blocks with no usable pair (e.g. all black); they decode as 1.
    """
    X = np.array(X, dtype=np.float64)
    X[..., 0] = 0.0
    U, S, _ = qsvd_batch(X, threads=threads)
    g = pair_gaps(U)
    erased = np.all(g == 0.0, axis=1)
    if mode == "triple":
        return (g >= 0).astype(np.uint8), erased
    bits, _ = decide(g)
    return bits, erased


def embed_block(block: QuatMatrix, bit: int, cfg: EmbedConfig = EmbedConfig(), store: bool = True) -> tuple[QuatMatrix, BlockEmbedRecord]:
    """Single-block convenience wrapper around :func:`embed_blocks`."""
    if not block.is_pure:
        raise ValueError("host block must be a pure quaternion matrix")
    if block.shape != (4, 4):
        raise ValueError("blocks are 4x4")
    X = block.components()[None]
    if cfg.mode == "triple":
        bits = np.asarray(bit, dtype=np.uint8).reshape(1, 3)
    else:
        bits = np.array([bit], dtype=np.uint8)
    r = embed_blocks(X, bits, cfg, store)
    if cfg.mode == "triple":
        rec = BlockEmbedRecord((0, 0), UNITS, int(bits[0] @ [4, 2, 1]), float(r.margin[0].min()),
                               float(r.delta1[0, 0]), float(r.delta2[0, 0]), int(r.rounds[0]), bool(r.lifted[0]))
    else:
        rec = BlockEmbedRecord((0, 0), UNITS[r.unit[0]], int(bits[0]), float(r.margin[0]),
                               float(r.delta1[0]), float(r.delta2[0]), int(r.rounds[0]), bool(r.lifted[0]))
    return QuatMatrix.from_components(r.blocks[0]), rec


def extract_block(block: QuatMatrix, mode: str = "single"):
    bits, _ = extract_blocks(block.components()[None], mode)
    return int(bits[0]) if mode == "single" else bits[0]


# ---------------------------------------------------------------------------
# image level
# ---------------------------------------------------------------------------

def _grid_of(img: RgbImage) -> tuple[QuatMatrix, np.ndarray]:
    Q = encode_quaternion(img)
    return Q, partition(Q).blocks


def _payload(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    if w.ndim != 2 or not np.all((w == 0) | (w == 1)):
        raise ValueError("payload must be a 2-D 0/1 matrix")
    return w.astype(np.uint8).reshape(-1)


def _embed_image(img: RgbImage, bits: np.ndarray, key: WatermarkKey, cfg: EmbedConfig) -> WatermarkJob:
    Q, blocks = _grid_of(img)
    bm, bn = blocks.shape[:2]
    coords = key.schedule((bm, bn), bits.shape[0])
    sel = blocks[coords[:, 0], coords[:, 1]]
    r = embed_blocks(sel, bits, cfg)
    blocks[coords[:, 0], coords[:, 1]] = r.blocks
    full = np.array(Q.components())
    inner = assemble_array(blocks)
    full[: inner.shape[0], : inner.shape[1]] = inner
    marked = RgbImage(to_bytes(full[..., 1:]) / 255.0)

    records = []
    for n, (br, bc) in enumerate(coords.tolist()):
        if cfg.mode == "triple":
            for a in range(3):
                records.append(BlockEmbedRecord((br, bc), UNITS[a], int(bits[n, a]), float(r.margin[n, a]),
                                                float(r.delta1[n, a]), float(r.delta2[n, a]),
                                                int(r.rounds[n]), bool(r.lifted[n])))
        else:
            records.append(BlockEmbedRecord((br, bc), UNITS[r.unit[n]], int(bits[n]), float(r.margin[n]),
                                            float(r.delta1[n]), float(r.delta2[n]),
                                            int(r.rounds[n]), bool(r.lifted[n])))
    return WatermarkJob(marked, records, psnr(img, marked), cfg.mode, cfg.T)


def embed(img: RgbImage, w: np.ndarray, key: WatermarkKey, cfg: EmbedConfig = EmbedConfig()) -> WatermarkJob:
    """Embed a bit matrix (row-major) into keyed blocks; the image is returned on the 8-bit grid."""
    if cfg.mode == "triple":
        raise ValueError("use embed_triple for triple mode")
    return _embed_image(img, _payload(w), key, cfg)


def embed_triple(img: RgbImage, w3, key: WatermarkKey, cfg: EmbedConfig = EmbedConfig(mode="triple")) -> WatermarkJob:
    """Three equally sized payloads; payload ``a`` rides on unit ``a`` of each block."""
    planes = [_payload(w) for w in w3]
    if len(planes) != 3 or len({p.size for p in planes}) != 1:
        raise ValueError("triple mode needs three payloads of equal size")
    if cfg.mode != "triple":
        cfg = replace(cfg, mode="triple")
    return _embed_image(img, np.stack(planes, axis=1), key, cfg)


def _extract_image(img: RgbImage, key: WatermarkKey, count: int, mode: str, threads: int):
    _, blocks = _grid_of(img)
    coords = key.schedule(blocks.shape[:2], count)
    return extract_blocks(blocks[coords[:, 0], coords[:, 1]], mode, threads)


def _dims(dims: tuple[int, int]) -> tuple[int, int]:
    e, f = dims
    if e < 1 or f < 1:
        raise ValueError("payload dimensions must be positive")
    return e, f


def extract(img: RgbImage, key: WatermarkKey, dims: tuple[int, int], cfg: EmbedConfig = EmbedConfig()) -> np.ndarray:
    e, f = _dims(dims)
    bits, _ = _extract_image(img, key, e * f, "single", cfg.threads)
    return bits.reshape(e, f)


def extract_with_erasures(img: RgbImage, key: WatermarkKey, dims: tuple[int, int], threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    e, f = _dims(dims)
    bits, erased = _extract_image(img, key, e * f, "single", threads)
    return bits.reshape(e, f), erased.reshape(e, f)


def extract_triple(img: RgbImage, key: WatermarkKey, dims: tuple[int, int], cfg: EmbedConfig = EmbedConfig(mode="triple")) -> list[np.ndarray]:
    e, f = _dims(dims)
    bits, _ = _extract_image(img, key, e * f, "triple", cfg.threads)
    return [bits[:, a].reshape(e, f) for a in range(3)]


# ---------------------------------------------------------------------------
# coefficient-pair statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PairStats:
    """``coeffs[a, x-1]`` is the ``(M/4, N/4)`` matrix of ``(u_x1)_a``."""

    coeffs: np.ndarray
    degenerate: np.ndarray
    nc: dict[tuple[str, int, int], float] = field(default_factory=dict)

    def value(self, unit: str, x: int, y: int) -> float:
        return self.nc[(unit, min(x, y), max(x, y))]

    def rows(self) -> list[tuple[str, str, str, float]]:
        return [(a, f"u{x}1", f"u{y}1", self.nc[(a, x, y)]) for a in UNITS for x, y in PAIRS]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("unit", "x", "y", "nc"))
        for a, x, y, v in self.rows():
            w.writerow((a, x, y, f"{v:.6f}"))
        return buf.getvalue()


def analyze_pairs(img: RgbImage, threads: int = 1, rank_tol: float = 1e-12) -> PairStats:
    """NC between first-column coefficient matrices of the block QSVD.

    Blocks of numerical rank <= 1 (including all-black ones) are flagged as
    degenerate and left out of the correlations; NC is ``nan`` when no block
    remains.
    """
    _, blocks = _grid_of(img)
    bm, bn = blocks.shape[:2]
    U, S, _ = qsvd_batch(blocks.reshape(-1, 4, 4, 4), threads=threads)
    degenerate = S[:, 1] <= rank_tol * S[:, 0]
    coeffs = U[:, :, 0, 1:].transpose(2, 1, 0).reshape(3, 4, bm, bn)
    keep = ~degenerate.reshape(bm, bn)
    nc = {}
    for a, unit in enumerate(UNITS):
        for x, y in PAIRS:
            cx, cy = coeffs[a, x - 1][keep], coeffs[a, y - 1][keep]
            try:
                nc[(unit, x, y)] = ncc(cx, cy) if cx.size else math.nan
            except ValueError:
                nc[(unit, x, y)] = math.nan
    return PairStats(coeffs, degenerate.reshape(bm, bn), nc)
