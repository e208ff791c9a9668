"""Deterministic image attacks.

Every attack returns an image on the 8-bit grid, i.e. what a decoder would
read back from the attacked file.  Noise attacks draw one counter-based
value per pixel (and channel), so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, ndimage

from .codec import RgbImage, to_bytes
from .rng import uniform01

# JPEG Annex K base tables
LUMA_Q = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)
CHROMA_Q = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.float64,
)

# BT.601 full range, 0..255 scale
_RGB2YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC2RGB = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)


def _grid(a: np.ndarray) -> RgbImage:
    return RgbImage(to_bytes(a) / 255.0)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quant_table(base: np.ndarray, quality: int) -> np.ndarray:
    if not 1 <= quality <= 100:
        raise ValueError("quality must be in [1, 100]")
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    return np.clip(np.floor((base * scale + 50) / 100), 1, 255)


def _blocks8(p: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    M, N = p.shape
    pm, pn = -M % 8, -N % 8
    p = np.pad(p, ((0, pm), (0, pn)), mode="edge")
    bm, bn = p.shape[0] // 8, p.shape[1] // 8
    return p.reshape(bm, 8, bn, 8).transpose(0, 2, 1, 3), (M, N)


def _unblocks8(b: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    bm, bn = b.shape[:2]
    return b.transpose(0, 2, 1, 3).reshape(bm * 8, bn * 8)[: shape[0], : shape[1]]


def dct_coefficients(img: RgbImage, quality: int) -> list[np.ndarray]:
    """Quantized DCT coefficient indices per YCbCr plane (for diagnostics)."""
    ycc = img.pixels * 255.0 @ _RGB2YCC.T
    ycc[..., 1:] += 128.0
    out = []
    for c in range(3):
        q = quant_table(LUMA_Q if c == 0 else CHROMA_Q, quality)
        b, _ = _blocks8(ycc[..., c] - 128.0)
        out.append(_round_half_away(fft.dctn(b, axes=(2, 3), norm="ortho") / q).astype(np.int64))
    return out


def jpeg_attack(img: RgbImage, quality: int) -> RgbImage:
    """Baseline JPEG quantization without subsampling or entropy coding."""
    quality = int(quality)
    ycc = img.pixels * 255.0 @ _RGB2YCC.T
    ycc[..., 1:] += 128.0
    planes = []
    for c in range(3):
        q = quant_table(LUMA_Q if c == 0 else CHROMA_Q, quality)
        b, shape = _blocks8(ycc[..., c] - 128.0)
        coef = _round_half_away(fft.dctn(b, axes=(2, 3), norm="ortho") / q) * q
        planes.append(_unblocks8(fft.idctn(coef, axes=(2, 3), norm="ortho"), shape) + 128.0)
    ycc = np.stack(planes, axis=-1)
    ycc[..., 1:] -= 128.0
    return _grid(ycc @ _YCC2RGB.T / 255.0)


def motion_kernel(length: float, angle_deg: float) -> np.ndarray:
    """Linear motion kernel with perpendicular anti-aliasing (MATLAB ``fspecial('motion')``)."""
    eps = math.sqrt(np.finfo(np.float64).eps)
    length = max(1.0, float(length))
    half = (length - 1) / 2
    phi = math.radians(angle_deg % 180)
    cphi, sphi = math.cos(phi), math.sin(phi)
    xsign = 1 if cphi >= 0 else -1
    width = 1.0
    sx = math.trunc(half * cphi + width * xsign - length * eps)
    sy = math.trunc(half * sphi + width - length * eps)
    xs = np.arange(0, sx + xsign, xsign) if xsign > 0 else np.arange(0, sx - 1, -1)
    x, y = np.meshgrid(xs.astype(np.float64), np.arange(0, sy + 1, dtype=np.float64))
    dist = y * cphi - x * sphi
    rad = np.hypot(x, y)
    last = (rad >= half) & (np.abs(dist) <= width)
    with np.errstate(divide="ignore", invalid="ignore"):
        x2last = half - np.abs((x[last] + dist[last] * sphi) / cphi)
    dist[last] = np.sqrt(dist[last] ** 2 + x2last**2)
    dist = np.maximum(width + eps - np.abs(dist), 0.0)
    r, c = dist.shape
    h = np.zeros((2 * r - 1, 2 * c - 1))
    h[:r, :c] = np.rot90(dist, 2)
    h[r - 1 :, c - 1 :] = dist
    h /= h.sum() + eps * length * length
    if cphi > 0:
        h = np.flipud(h)
    return h


def motion_blur_attack(img: RgbImage, length: float, angle_deg: float) -> RgbImage:
    if length < 1:
        raise ValueError("motion length must be >= 1")
    h = motion_kernel(length, angle_deg)
    out = np.stack(
        [ndimage.correlate(img.pixels[..., c], h, mode="nearest") for c in range(3)], axis=-1
    )
    return _grid(out)


def crop_attack(img: RgbImage, ratio: float) -> RgbImage:
    """Black out the top ``round(ratio * M)`` rows."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("crop ratio must be in (0, 1)")
    rows = math.floor(ratio * img.shape[0] + 0.5)
    out = img.pixels.copy()
    out[:rows] = 0.0
    return _grid(out)


def _bilinear_axis(a: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    n = a.shape[axis]
    src = (np.arange(out_len) + 0.5) * (n / out_len) - 0.5
    src = np.clip(src, 0.0, n - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n - 1)
    w = src - i0
    shape = [1] * a.ndim
    shape[axis] = out_len
    w = w.reshape(shape)
    return np.take(a, i0, axis=axis) * (1 - w) + np.take(a, i1, axis=axis) * w


def bilinear_resize(a: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Separable bilinear resampling with half-pixel centers and edge clamping."""
    return _bilinear_axis(_bilinear_axis(a, out_shape[0], 0), out_shape[1], 1)


def rescale_attack(img: RgbImage, factor: float) -> RgbImage:
    M, N = img.shape
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    small = (math.floor(factor * M + 0.5), math.floor(factor * N + 0.5))
    if min(small) < 1:
        raise ValueError("scale factor too small for the image")
    mid = bilinear_resize(img.pixels, small)
    return _grid(bilinear_resize(mid, (M, N)))


def speckle_attack(img: RgbImage, variance: float, seed: int) -> RgbImage:
    """``out = in * (1 + n)`` with zero-mean uniform ``n`` of the given variance."""
    if variance < 0:
        raise ValueError("variance must be >= 0")
    a = math.sqrt(3.0 * variance)
    u = uniform01(seed, np.arange(img.pixels.size)).reshape(img.pixels.shape)
    return _grid(img.pixels * (1.0 + (2.0 * u - 1.0) * a))


def salt_pepper_attack(img: RgbImage, density: float, seed: int) -> RgbImage:
    """Each pixel replaced (all channels) with probability ``density``, half 0 half 1."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must be in [0, 1]")
    M, N = img.shape
    idx = np.arange(M * N, dtype=np.uint64) * np.uint64(2)
    hit = (uniform01(seed, idx) < density).reshape(M, N)
    salt = (uniform01(seed, idx + np.uint64(1)) >= 0.5).reshape(M, N)
    out = img.pixels.copy()
    out[hit] = np.where(salt[hit], 1.0, 0.0)[:, None]
    return _grid(out)


KINDS = ("jpeg", "motion_blur", "crop", "rescale", "speckle", "salt_pepper")
_ALIASES = {"motion": "motion_blur", "scale": "rescale", "sp": "salt_pepper", "saltpepper": "salt_pepper"}
_ARITY = {"jpeg": 1, "motion_blur": 2, "crop": 1, "rescale": 1, "speckle": 1, "salt_pepper": 1}
NOISY = ("speckle", "salt_pepper")


def kind_tag(kind: str) -> int:
    """Per-kind constant mixed into default noise seeds."""
    return zlib.crc32(kind.encode()) * 0x9E3779B1 & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: tuple[float, ...]
    seed: int | None = field(default=None)

    def __post_init__(self) -> None:
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if len(self.params) != _ARITY[kind]:
            raise ValueError(f"{kind} takes {_ARITY[kind]} parameter(s)")
        p = self.params
        if kind == "jpeg" and not (1 <= p[0] <= 100 and float(p[0]).is_integer()):
            raise ValueError("jpeg quality must be an integer in [1, 100]")
        if kind == "motion_blur" and p[0] < 1:
            raise ValueError("motion length must be >= 1")
        if kind == "crop" and not 0 < p[0] < 1:
            raise ValueError("crop ratio must be in (0, 1)")
        if kind == "rescale" and p[0] <= 0:
            raise ValueError("scale factor must be positive")
        if kind == "speckle" and p[0] < 0:
            raise ValueError("variance must be >= 0")
        if kind == "salt_pepper" and not 0 <= p[0] <= 1:
            raise ValueError("density must be in [0, 1]")
        if self.seed is not None and not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def parse(cls, text: str) -> AttackSpec:
        """``kind:p1[,p2][,seed]``; a trailing seed is allowed for noise kinds only."""
        kind, sep, rest = text.partition(":")
        if not sep or not rest:
            raise ValueError(f"attack spec must look like kind:params, got {text!r}")
        kind = _ALIASES.get(kind.strip().lower(), kind.strip().lower())
        if kind not in KINDS:
            raise ValueError(f"unknown attack kind {kind!r}")
        parts = [s.strip() for s in rest.split(",")]
        seed = None
        if kind in NOISY and len(parts) == _ARITY[kind] + 1:
            seed = int(parts.pop(), 0)
        try:
            params = tuple(float(s) for s in parts)
        except ValueError as exc:
            raise ValueError(f"bad attack parameters in {text!r}") from exc
        return cls(kind, params, seed)

    def label(self) -> str:
        return f"{self.kind}:" + ",".join(f"{p:g}" for p in self.params)

    def apply(self, img: RgbImage, default_seed: int = 0) -> RgbImage:
        p = self.params
        seed = self.seed if self.seed is not None else (default_seed ^ kind_tag(self.kind))
        if self.kind == "jpeg":
            return jpeg_attack(img, int(p[0]))
        if self.kind == "motion_blur":
            return motion_blur_attack(img, p[0], p[1])
        if self.kind == "crop":
            return crop_attack(img, p[0])
        if self.kind == "rescale":
            return rescale_attack(img, p[0])
        if self.kind == "speckle":
            return speckle_attack(img, p[0], seed)
        return salt_pepper_attack(img, p[0], seed)
