"""Quaternion scalars, quaternion matrices and their real counterparts.

Two storage conventions are used throughout the package:

* ``QuatMatrix`` keeps the four real component planes ``(Q0, Q1, Q2, Q3)``
  as a ``(4, m, n)`` array.
* Numerical kernels work on *component arrays*: any ndarray whose trailing
  axis has length 4 and holds ``(w, x, y, z)``.  Leading axes are batch or
  matrix axes, so the same kernels serve scalars, vectors, matrices and
  stacks of image blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

EPS = np.finfo(np.float64).eps


class FormatError(ValueError):
    """Malformed dimensions or file contents."""


# ---------------------------------------------------------------------------
# component-array kernels
# ---------------------------------------------------------------------------

def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of component arrays, broadcasting over leading axes."""
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qconj(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out[..., 1:] *= -1.0
    return out


def qabs(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(a) ** 2, axis=-1))


def unit_phase(a: np.ndarray) -> np.ndarray:
    """``a/|a|`` elementwise, with the quaternion 1 where ``a`` is zero."""
    a = np.asarray(a, dtype=np.float64)
    r = qabs(a)
    out = np.zeros_like(a)
    nz = r > 0
    out[nz] = a[nz] / r[nz][..., None]
    out[~nz, 0] = 1.0
    return out


def qmatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion matrix product of component arrays ``(..., m, k, 4) @ (..., k, n, 4)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a0, a1, a2, a3 = (a[..., c] for c in range(4))
    b0, b1, b2, b3 = (b[..., c] for c in range(4))
    return np.stack(
        [
            a0 @ b0 - a1 @ b1 - a2 @ b2 - a3 @ b3,
            a0 @ b1 + a1 @ b0 + a2 @ b3 - a3 @ b2,
            a0 @ b2 - a1 @ b3 + a2 @ b0 + a3 @ b1,
            a0 @ b3 + a1 @ b2 - a2 @ b1 + a3 @ b0,
        ],
        axis=-1,
    )


def qherm(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose of a component array ``(..., m, n, 4)``."""
    return qconj(np.swapaxes(a, -2, -3))


# ---------------------------------------------------------------------------
# scalars
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quat:
    """A quaternion ``w + x i + y j + z k``."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> Quat:
        a = np.asarray(a, dtype=np.float64)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    def __mul__(self, other):
        if isinstance(other, Quat):
            return quat_mul(self, other)
        return Quat(self.w * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, other):
        return Quat(other * self.w, other * self.x, other * self.y, other * self.z)

    def __add__(self, other: Quat) -> Quat:
        return Quat(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Quat) -> Quat:
        return Quat(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Quat:
        return Quat(-self.w, -self.x, -self.y, -self.z)

    def __abs__(self) -> float:
        return quat_norm(self)

    def conj(self) -> Quat:
        return quat_conj(self)

    def inverse(self) -> Quat:
        return quat_inverse(self)

    def isclose(self, other: Quat, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0, atol=atol))


ONE = Quat(1.0)
I = Quat(0.0, 1.0)
J = Quat(0.0, 0.0, 1.0)
K = Quat(0.0, 0.0, 0.0, 1.0)


def quat_mul(a: Quat, b: Quat) -> Quat:
    return Quat(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_conj(a: Quat) -> Quat:
    return Quat(a.w, -a.x, -a.y, -a.z)


def quat_norm(a: Quat) -> float:
    return float(np.sqrt(a.w * a.w + a.x * a.x + a.y * a.y + a.z * a.z))


def quat_inverse(a: Quat) -> Quat:
    n2 = a.w * a.w + a.x * a.x + a.y * a.y + a.z * a.z
    if n2 == 0.0:
        raise ZeroDivisionError("inverse of the zero quaternion")
    c = quat_conj(a)
    return Quat(c.w / n2, c.x / n2, c.y / n2, c.z / n2)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuatMatrix:
    """Dense ``m x n`` quaternion matrix stored as four real planes."""

    planes: np.ndarray

    def __post_init__(self):
        p = np.array(self.planes, dtype=np.float64)
        if p.ndim != 3 or p.shape[0] != 4 or p.shape[1] < 1 or p.shape[2] < 1:
            raise FormatError(f"expected planes of shape (4, m, n), got {p.shape}")
        p.flags.writeable = False
        object.__setattr__(self, "planes", p)

    @classmethod
    def from_planes(cls, q0=None, q1=None, q2=None, q3=None) -> QuatMatrix:
        given = [q for q in (q0, q1, q2, q3) if q is not None]
        if not given:
            raise FormatError("at least one plane is required")
        shape = np.shape(np.atleast_2d(given[0]))
        planes = [
            np.zeros(shape) if q is None else np.atleast_2d(np.asarray(q, dtype=np.float64))
            for q in (q0, q1, q2, q3)
        ]
        if any(p.shape != shape for p in planes):
            raise FormatError("all four planes must share dimensions")
        return cls(np.stack(planes))

    @classmethod
    def from_components(cls, a: np.ndarray) -> QuatMatrix:
        return cls(np.moveaxis(np.asarray(a, dtype=np.float64), -1, 0))

    @classmethod
    def zeros(cls, m: int, n: int) -> QuatMatrix:
        return cls(np.zeros((4, m, n)))

    @classmethod
    def identity(cls, n: int) -> QuatMatrix:
        p = np.zeros((4, n, n))
        p[0] = np.eye(n)
        return cls(p)

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator, pure: bool = False) -> QuatMatrix:
        p = rng.uniform(0.0, 1.0, size=(4, m, n))
        if pure:
            p[0] = 0.0
        return cls(p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes.shape[1], self.planes.shape[2]

    @property
    def m(self) -> int:
        return self.planes.shape[1]

    @property
    def n(self) -> int:
        return self.planes.shape[2]

    @property
    def q0(self) -> np.ndarray:
        return self.planes[0]

    @property
    def q1(self) -> np.ndarray:
        return self.planes[1]

    @property
    def q2(self) -> np.ndarray:
        return self.planes[2]

    @property
    def q3(self) -> np.ndarray:
        return self.planes[3]

    def components(self) -> np.ndarray:
        """Writable ``(m, n, 4)`` component array."""
        return np.ascontiguousarray(np.moveaxis(self.planes, 0, -1))

    @property
    def is_pure(self) -> bool:
        return bool(np.all(self.planes[0] == 0.0))

    def __eq__(self, other) -> bool:
        return isinstance(other, QuatMatrix) and np.array_equal(self.planes, other.planes)

    __hash__ = None

    def entry(self, r: int, c: int) -> Quat:
        return Quat.from_array(self.planes[:, r, c])

    @property
    def T(self) -> QuatMatrix:
        return QuatMatrix(np.swapaxes(self.planes, 1, 2))

    @property
    def H(self) -> QuatMatrix:
        p = np.swapaxes(self.planes, 1, 2).copy()
        p[1:] *= -1.0
        return QuatMatrix(p)

    def __matmul__(self, other: QuatMatrix) -> QuatMatrix:
        return quat_matmul(self, other)

    def __add__(self, other: QuatMatrix) -> QuatMatrix:
        return QuatMatrix(self.planes + other.planes)

    def __sub__(self, other: QuatMatrix) -> QuatMatrix:
        return QuatMatrix(self.planes - other.planes)

    def scale(self, c: float) -> QuatMatrix:
        return QuatMatrix(self.planes * c)

    def __repr__(self) -> str:
        return f"QuatMatrix({self.m}x{self.n})"


def quat_matmul(a: QuatMatrix, b: QuatMatrix) -> QuatMatrix:
    if a.n != b.m:
        raise FormatError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return QuatMatrix.from_components(qmatmul(a.components(), b.components()))


def frob_norm(q: QuatMatrix) -> float:
    return float(np.sqrt(np.sum(q.planes**2)))


# ---------------------------------------------------------------------------
# real counterparts
# ---------------------------------------------------------------------------

def to_full_counterpart(q: QuatMatrix) -> np.ndarray:
    """The ``4m x 4n`` JRS-symmetric real counterpart.

    Only used as a test oracle; production code never builds it.
    """
    q0, q1, q2, q3 = q.planes
    return np.block(
        [
            [q0, q2, q1, q3],
            [-q2, q0, q3, -q1],
            [-q1, -q3, q0, q2],
            [-q3, q1, -q2, q0],
        ]
    )


def from_full_counterpart(r: np.ndarray) -> QuatMatrix:
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 2 or r.shape[0] % 4 or r.shape[1] % 4:
        raise FormatError(f"counterpart shape {r.shape} not divisible by 4")
    m, n = r.shape[0] // 4, r.shape[1] // 4
    return from_compact(CompactReal("column", r[:, :n], m, n))


@dataclass(frozen=True, eq=False)
class CompactReal:
    """Block-column (``4m x n``) or block-row (``m x 4n``) real form."""

    variant: Literal["column", "row"]
    data: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        if self.variant not in ("column", "row"):
            raise FormatError(f"unknown variant {self.variant!r}")
        d = np.array(self.data, dtype=np.float64)
        want = (4 * self.m, self.n) if self.variant == "column" else (self.m, 4 * self.n)
        if d.shape != want:
            raise FormatError(f"{self.variant} data must be {want}, got {d.shape}")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @classmethod
    def from_array(cls, data: np.ndarray, variant: Literal["column", "row"] = "column") -> CompactReal:
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise FormatError("compact data must be 2-D")
        if variant == "column":
            if data.shape[0] % 4:
                raise FormatError(f"{data.shape[0]} rows not divisible by 4")
            return cls(variant, data, data.shape[0] // 4, data.shape[1])
        if data.shape[1] % 4:
            raise FormatError(f"{data.shape[1]} columns not divisible by 4")
        return cls(variant, data, data.shape[0], data.shape[1] // 4)


def to_compact(q: QuatMatrix, variant: Literal["column", "row"] = "column") -> CompactReal:
    q0, q1, q2, q3 = q.planes
    if variant == "column":
        data = np.concatenate([q0, -q2, -q1, -q3], axis=0)
    elif variant == "row":
        data = np.concatenate([q0, q2, q1, q3], axis=1)
    else:
        raise FormatError(f"unknown variant {variant!r}")
    return CompactReal(variant, data, q.m, q.n)


def from_compact(c: CompactReal) -> QuatMatrix:
    m, n, d = c.m, c.n, c.data
    if c.variant == "column":
        q0, q2, q1, q3 = d[:m], -d[m : 2 * m], -d[2 * m : 3 * m], -d[3 * m :]
    else:
        q0, q2, q1, q3 = d[:, :n], d[:, n : 2 * n], d[:, 2 * n : 3 * n], d[:, 3 * n :]
    # 0 - x would turn +0.0 into -0.0; negation keeps the round trip bit-exact
    return QuatMatrix(np.stack([q0, q1, q2, q3]))
