"""RGB images as pure quaternion matrices, 4x4 block grids and quality metrics.

Files are binary netpbm: P6 for images (8-bit), P4 for bit matrices.  In P4 a
black pixel (1) stores payload bit 0, so a logo with a white background of
ones renders as expected in any viewer.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quaternion import FormatError, QuatMatrix

BLOCK = 4


@dataclass(frozen=True, eq=False)
class RgbImage:
    """``pixels`` has shape ``(M, N, 3)`` with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.pixels, dtype=np.float64)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise FormatError(f"expected an (M, N, 3) array, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise FormatError("channel values must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @classmethod
    def from_array(cls, a: np.ndarray, clamp: bool = True) -> RgbImage:
        a = np.asarray(a, dtype=np.float64)
        return cls(np.clip(a, 0.0, 1.0) if clamp else a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]

    @property
    def R(self) -> np.ndarray:
        return self.pixels[..., 0]

    @property
    def G(self) -> np.ndarray:
        return self.pixels[..., 1]

    @property
    def B(self) -> np.ndarray:
        return self.pixels[..., 2]

    def quantized(self) -> RgbImage:
        """The image as it reads back from an 8-bit file."""
        return RgbImage(to_bytes(self.pixels) / 255.0)

    def __eq__(self, other) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)


def to_bytes(a: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1], scale by 255, round half away from zero."""
    return np.floor(np.clip(a, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


# ---------------------------------------------------------------------------
# netpbm I/O
# ---------------------------------------------------------------------------

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _header(data: bytes, magic: bytes, count: int) -> tuple[list[int], int]:
    if data[:2] != magic:
        raise FormatError(f"not a {magic.decode()} file")
    pos = 2
    vals = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None or not m.group(1).isdigit():
            raise FormatError("malformed netpbm header")
        vals.append(int(m.group(1)))
        pos = m.end()
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise FormatError("missing whitespace after netpbm header")
    return vals, pos + 1


def parse_ppm(data: bytes) -> RgbImage:
    (w, h, maxval), pos = _header(data, b"P6", 3)
    if w < 1 or h < 1:
        raise FormatError("image dimensions must be positive")
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    need = w * h * 3
    if len(data) - pos < need:
        raise FormatError("truncated PPM payload")
    px = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return RgbImage(px.reshape(h, w, 3) / 255.0)


def format_ppm(img: RgbImage) -> bytes:
    h, w = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + to_bytes(img.pixels).tobytes()


def load_ppm(path: str | Path) -> RgbImage:
    return parse_ppm(Path(path).read_bytes())


def save_ppm(img: RgbImage, path: str | Path) -> None:
    Path(path).write_bytes(format_ppm(img))


def _check_bits(bits: np.ndarray) -> np.ndarray:
    b = np.asarray(bits)
    if b.ndim != 2 or 0 in b.shape:
        raise FormatError(f"bit matrix must be a nonempty 2-D array, got shape {b.shape}")
    if not np.all((b == 0) | (b == 1)):
        raise FormatError("bit matrix entries must be 0 or 1")
    return b.astype(np.uint8)


def parse_pbm(data: bytes) -> np.ndarray:
    (w, h), pos = _header(data, b"P4", 2)
    if w < 1 or h < 1:
        raise FormatError("bit matrix dimensions must be positive")
    stride = (w + 7) // 8
    if len(data) - pos < stride * h:
        raise FormatError("truncated PBM payload")
    raw = np.frombuffer(data, dtype=np.uint8, count=stride * h, offset=pos).reshape(h, stride)
    black = np.unpackbits(raw, axis=1)[:, :w]
    return (1 - black).astype(np.uint8)


def format_pbm(bits: np.ndarray) -> bytes:
    b = _check_bits(bits)
    h, w = b.shape
    return b"P4\n%d %d\n" % (w, h) + np.packbits(1 - b, axis=1).tobytes()


def load_pbm(path: str | Path) -> np.ndarray:
    return parse_pbm(Path(path).read_bytes())


def save_pbm(bits: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(format_pbm(bits))


def format_bit_grid(bits: np.ndarray) -> str:
    b = _check_bits(bits)
    return "".join("".join("01"[v] for v in row) + "\n" for row in b)


def parse_bit_grid(text: str) -> np.ndarray:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not rows or any(set(r) - {"0", "1"} for r in rows) or len({len(r) for r in rows}) != 1:
        raise FormatError("bit grid must be equal-length lines of 0/1")
    return np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)


def load_bits(path: str | Path) -> np.ndarray:
    """PBM (P4) or ASCII 0/1 grid, detected from the magic bytes."""
    data = Path(path).read_bytes()
    if data[:2] == b"P4":
        return parse_pbm(data)
    try:
        return parse_bit_grid(data.decode("ascii"))
    except UnicodeDecodeError as exc:
        raise FormatError("payload is neither PBM nor an ASCII bit grid") from exc


def save_bits(bits: np.ndarray, path: str | Path) -> None:
    """PBM for ``.pbm`` paths, ASCII grid otherwise."""
    if str(path).lower().endswith(".pbm"):
        save_pbm(bits, path)
    else:
        Path(path).write_text(format_bit_grid(bits))


# ---------------------------------------------------------------------------
# quaternion encoding and blocks
# ---------------------------------------------------------------------------

def encode_quaternion(img: RgbImage) -> QuatMatrix:
    """``Q = R i + G j + B k``."""
    return QuatMatrix.from_planes(np.zeros(img.shape), img.R, img.G, img.B)


def decode_quaternion(Q: QuatMatrix) -> RgbImage:
    """Drop the real plane and clamp."""
    return RgbImage.from_array(np.stack([Q.q1, Q.q2, Q.q3], axis=-1))


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """Component stack ``blocks`` of shape ``(bm, bn, 4, 4, 4)``.

    ``source_shape`` is the pre-crop size; the rows/columns beyond
    ``4*bm x 4*bn`` were cropped from the bottom/right.
    """

    blocks: np.ndarray
    source_shape: tuple[int, int]
    offset: tuple[int, int] = field(default=(0, 0))

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.blocks.shape[0], self.blocks.shape[1]

    @property
    def cropped(self) -> tuple[int, int]:
        """Rows and columns dropped by the crop rule."""
        bm, bn = self.grid_shape
        return self.source_shape[0] - BLOCK * bm, self.source_shape[1] - BLOCK * bn

    def flat(self) -> np.ndarray:
        return self.blocks.reshape(-1, BLOCK, BLOCK, 4)

    def block(self, r: int, c: int) -> QuatMatrix:
        return QuatMatrix.from_components(self.blocks[r, c])


def partition_array(comps: np.ndarray, size: int = BLOCK) -> np.ndarray:
    """``(M, N, 4)`` -> ``(M//size, N//size, size, size, 4)``, cropping the remainder."""
    M, N = comps.shape[:2]
    bm, bn = M // size, N // size
    a = comps[: bm * size, : bn * size]
    return a.reshape(bm, size, bn, size, 4).transpose(0, 2, 1, 3, 4).copy()


def assemble_array(blocks: np.ndarray) -> np.ndarray:
    bm, bn, s, t, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3, 4).reshape(bm * s, bn * t, 4)


def partition(Q: QuatMatrix, size: int = BLOCK) -> BlockGrid:
    if size != BLOCK:
        raise ValueError("only 4x4 blocks are supported")
    if Q.m < size or Q.n < size:
        raise FormatError(f"image smaller than one {size}x{size} block")
    return BlockGrid(partition_array(Q.components(), size), (Q.m, Q.n))


def reassemble(grid: BlockGrid, source: QuatMatrix | None = None) -> QuatMatrix:
    """Block grid back to a matrix; with ``source`` the cropped margin is restored."""
    inner = assemble_array(grid.blocks)
    if source is None:
        return QuatMatrix.from_components(inner)
    if source.shape != grid.source_shape:
        raise FormatError("source does not match the grid's original dimensions")
    full = np.array(source.components())
    full[: inner.shape[0], : inner.shape[1]] = inner
    return QuatMatrix.from_components(full)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def psnr(a: RgbImage, b: RgbImage) -> float:
    """Peak 1 over all three channels; identical images give ``inf``."""
    if a.shape != b.shape:
        raise FormatError(f"dimension mismatch {a.shape} vs {b.shape}")
    err = float(np.sum((a.pixels - b.pixels) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(a.pixels.size / err)


def ber(w: np.ndarray, w_star: np.ndarray) -> float:
    a, b = np.asarray(w), np.asarray(w_star)
    if a.shape != b.shape:
        raise FormatError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a != b)) / a.size


def ncc(x: np.ndarray, y: np.ndarray) -> float:
    """Uncentered normalized cross-correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise FormatError(f"dimension mismatch {x.shape} vs {y.shape}")
    sx, sy = np.max(np.abs(x), initial=0.0), np.max(np.abs(y), initial=0.0)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("NC is undefined for a zero-norm input")
    x, y = x / sx, y / sy  # rescale so tiny inputs do not underflow
    return float(np.sum(x * y)) / math.sqrt(float(np.sum(x * x)) * float(np.sum(y * y)))
