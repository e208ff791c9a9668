"""Quaternion unitary transformations with operation accounting.

Every routine accepts component arrays with arbitrary leading batch axes, so
one call can build or apply thousands of transforms (one per image block).
Scalar :class:`~qsvdwm.quaternion.Quat` inputs are accepted where that is
convenient for callers.

Cost accounting follows the calibration units of the transformation cost
table: generating an ``H3`` costs 11 assignments / 46 real flops, applying it
to one pair in H^2 costs 4 / 184; the generalized Givens matrix costs 9 / 69
and 2 / 120.  Applying a transform of length ``l`` to one row or column is
charged ``ceil(l / 2)`` apply units.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .quaternion import (
    EPS,
    CompactReal,
    Quat,
    QuatMatrix,
    from_compact,
    qabs,
    qconj,
    qherm,
    qmatmul,
    qmul,
    to_compact,
    unit_phase,
)

ZERO_TOL = 16.0


class Cost(NamedTuple):
    assignments: int
    flops: int


COSTS: dict[str, dict[str, Cost]] = {
    "H3": {"generate": Cost(11, 46), "apply": Cost(4, 184)},
    "givens": {"generate": Cost(9, 69), "apply": Cost(2, 120)},
    # not in the cost table; H1/H2 borrow the H3 units
    "H1": {"generate": Cost(11, 46), "apply": Cost(4, 184)},
    "H2": {"generate": Cost(11, 46), "apply": Cost(4, 184)},
    # one unit quaternion: |z| and four divisions; applying it is one
    # quaternion product (16 mul + 12 add) per entry
    "phase": {"generate": Cost(1, 12), "apply": Cost(1, 28)},
}


class OpLedger:
    """Counters of assignments and real flops, keyed by transform kind and phase.

    Phases are ``generate``, ``apply`` (to the matrix being reduced) and
    ``accumulate`` (into the unitary factors).  ``skip`` records transforms
    that were not needed.  Counters only grow until :meth:`reset`.
    """

    def __init__(self) -> None:
        self._c: Counter = Counter()

    def charge(self, kind: str, phase: str, units: int = 1) -> None:
        if units < 0:
            raise ValueError("units must be nonnegative")
        if units == 0:
            return
        cost = COSTS[kind]["apply" if phase == "accumulate" else phase]
        self._c[(kind, phase, "count")] += units
        self._c[(kind, phase, "assignments")] += cost.assignments * units
        self._c[(kind, phase, "flops")] += cost.flops * units

    def record_skip(self, kind: str, n: int = 1) -> None:
        if n:
            self._c[(kind, "skip", "count")] += n

    def get(self, kind: str, phase: str, counter: str = "flops") -> int:
        return self._c[(kind, phase, counter)]

    def total(self, counter: str = "flops", phases: Iterable[str] | None = None) -> int:
        phases = None if phases is None else set(phases)
        return sum(
            v
            for (k, p, c), v in self._c.items()
            if c == counter and (phases is None or p in phases)
        )

    @property
    def real_flops(self) -> int:
        return self.total("flops")

    @property
    def assignments(self) -> int:
        return self.total("assignments")

    def merge(self, other: OpLedger) -> None:
        self._c.update(other._c)

    def reset(self) -> None:
        self._c.clear()

    def as_dict(self) -> dict[str, int]:
        return {f"{k}.{p}.{c}": v for (k, p, c), v in sorted(self._c.items())}

    def report(self) -> str:
        """Flat ``kind.phase.counter=value`` text, one entry per line, sorted."""
        lines = [f"{key}={val}" for key, val in self.as_dict().items()]
        lines.append(f"total.all.assignments={self.assignments}")
        lines.append(f"total.all.flops={self.real_flops}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> OpLedger:
        led = cls()
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("total."):
                continue
            key, val = line.split("=")
            kind, phase, counter = key.split(".")
            led._c[(kind, phase, counter)] = int(val)
        return led

    def __eq__(self, other) -> bool:
        return isinstance(other, OpLedger) and +self._c == +other._c

    def __repr__(self) -> str:
        return f"OpLedger(assignments={self.assignments}, flops={self.real_flops})"


def _charge(ledger: OpLedger | None, kind: str, phase: str, units: int) -> None:
    if ledger is not None:
        ledger.charge(kind, phase, int(units))


def _qarray(x) -> np.ndarray:
    if isinstance(x, Quat):
        return x.as_array()
    if isinstance(x, QuatMatrix):
        return x.components()
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], Quat):
        return np.stack([q.as_array() for q in x])
    return np.asarray(x, dtype=np.float64)


def _batch_count(a: np.ndarray, core_ndim: int) -> int:
    return int(np.prod(a.shape[: a.ndim - core_ndim], dtype=np.int64))


# ---------------------------------------------------------------------------
# phase matrices
# ---------------------------------------------------------------------------

def phase_matrix(z) -> np.ndarray:
    """Diagonal of the phase matrix: ``g_l = conj(z_l)/|z_l|``, or 1 where ``z_l = 0``.

    Returns a component array shaped like ``z``; ``g_l * z_l = |z_l|``.
    """
    return unit_phase(qconj(_qarray(z)))


# ---------------------------------------------------------------------------
# generalized Givens
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GeneralizedGivens:
    """2x2 quaternion unitary ``[[q11, q12], [q21, q22]]`` (component arrays)."""

    q11: np.ndarray
    q12: np.ndarray
    q21: np.ndarray
    q22: np.ndarray

    @classmethod
    def identity(cls, batch_shape=()) -> GeneralizedGivens:
        one = np.zeros(batch_shape + (4,))
        one[..., 0] = 1.0
        zero = np.zeros(batch_shape + (4,))
        return cls(one, zero, zero.copy(), one.copy())

    def matrix(self) -> QuatMatrix:
        a = np.stack([np.stack([self.q11, self.q12]), np.stack([self.q21, self.q22])])
        if a.ndim != 3:
            raise ValueError("matrix() needs an unbatched transform")
        return QuatMatrix.from_components(a)

    def entry(self, name: str) -> Quat:
        return Quat.from_array(getattr(self, name))


def _givens(x1: np.ndarray, x2: np.ndarray) -> GeneralizedGivens:
    n1, n2 = qabs(x1), qabs(x2)
    nx = np.hypot(n1, n2)
    safe = np.where(nx > 0, nx, 1.0)[..., None]
    q11 = x1 / safe
    q21 = x2 / safe
    a11 = qabs(q11)[..., None]
    a21 = qabs(q21)[..., None]
    case_a = (n1 <= n2)[..., None]
    # case (a): q12 = |q21|, q22 = -|q12| q21^{-H} q11^H = -q21 conj(q11) / |q21|
    # case (b): q22 = |q11|, q12 = -|q11| q11^{-H} q21^H = -q11 conj(q21) / |q11|
    real_a = np.zeros_like(q11)
    real_a[..., 0] = a21[..., 0]
    real_b = np.zeros_like(q11)
    real_b[..., 0] = a11[..., 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        q22_a = -qmul(q21, qconj(q11)) / np.where(a21 > 0, a21, 1.0)
        q12_b = -qmul(q11, qconj(q21)) / np.where(a11 > 0, a11, 1.0)
    q12 = np.where(case_a, real_a, q12_b)
    q22 = np.where(case_a, q22_a, real_b)
    return GeneralizedGivens(q11, q12, q21, q22)


def make_givens(x1, x2, ledger: OpLedger | None = None) -> GeneralizedGivens:
    """Generalized Givens matrix G with ``G^H [x1, x2] = [||x||, 0]``.

    ``x2`` must be nonzero; callers skip the rotation otherwise.
    """
    a1, a2 = _qarray(x1), _qarray(x2)
    if np.any(qabs(a2) == 0.0):
        raise ValueError("make_givens requires x2 != 0; skip the rotation instead")
    g = _givens(a1, a2)
    _charge(ledger, "givens", "generate", _batch_count(a2, 1))
    return g


def _bcast(q: np.ndarray, extra: int) -> np.ndarray:
    return q.reshape(q.shape[:-1] + (1,) * extra + (4,))


def givens_left(g: GeneralizedGivens, x: np.ndarray, extra: int = 0) -> np.ndarray:
    """``G^H x`` for ``x`` of shape ``(..., 2, *extra_axes, 4)``."""
    q11, q12, q21, q22 = (_bcast(q, extra) for q in (g.q11, g.q12, g.q21, g.q22))
    axis = -2 - extra
    x1, x2 = np.take(x, 0, axis=axis), np.take(x, 1, axis=axis)
    y1 = qmul(qconj(q11), x1) + qmul(qconj(q21), x2)
    y2 = qmul(qconj(q12), x1) + qmul(qconj(q22), x2)
    return np.stack([y1, y2], axis=axis)


def givens_right(g: GeneralizedGivens, x: np.ndarray, extra: int = 0) -> np.ndarray:
    """``x G`` for row pairs ``x`` of shape ``(..., *extra_axes, 2, 4)``."""
    q11, q12, q21, q22 = (_bcast(q, extra) for q in (g.q11, g.q12, g.q21, g.q22))
    x1, x2 = x[..., 0, :], x[..., 1, :]
    y1 = qmul(x1, q11) + qmul(x2, q21)
    y2 = qmul(x1, q12) + qmul(x2, q22)
    return np.stack([y1, y2], axis=-2)


def apply_givens_pair(
    g: GeneralizedGivens, x, side: str = "left", ledger: OpLedger | None = None
) -> np.ndarray:
    """Apply ``g`` to one pair: ``G^H x`` (left) or ``x G`` (right, row pair)."""
    xa = _qarray(x)
    if xa.shape[-2:] != (2, 4):
        raise ValueError(f"expected a quaternion pair, got shape {xa.shape}")
    if side == "left":
        y = givens_left(g, xa)
    elif side == "right":
        y = givens_right(g, xa)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    _charge(ledger, "givens", "apply", _batch_count(xa, 2))
    return y


# ---------------------------------------------------------------------------
# Householder reflectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HouseholderReflector:
    """``T = D_post (I - 2 u u^H) D_pre`` with optional diagonal phase matrices.

    H1 has no phases, H2 has ``D_pre = G`` (and real ``u``), H3 has
    ``D_post = G``.  All arrays are component arrays of shape ``(..., l, 4)``.
    """

    kind: str
    u: np.ndarray
    pre: np.ndarray | None = None
    post: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.u.shape[-2]

    def adjoint(self) -> HouseholderReflector:
        return HouseholderReflector(
            self.kind,
            self.u,
            pre=None if self.post is None else qconj(self.post),
            post=None if self.pre is None else qconj(self.pre),
        )

    def matrix(self) -> QuatMatrix:
        if self.u.ndim != 2:
            raise ValueError("matrix() needs an unbatched reflector")
        eye = np.zeros((self.size, self.size, 4))
        eye[..., 0] = np.eye(self.size)
        return QuatMatrix.from_components(reflect_left(self, eye))


def make_householder(
    kind: str, y, v=None, ledger: OpLedger | None = None
) -> HouseholderReflector:
    """Reflector mapping ``y`` onto the direction of the real unit vector ``v``.

    ``H1`` maps ``y`` to ``alpha v`` with ``|alpha| = ||y||``; alpha takes the
    phase opposite to ``v^T y`` so ``y - alpha v`` never cancels.  ``H2`` and
    ``H3`` map ``y`` to ``||y|| v`` for nonnegative ``v`` (default ``e1``).
    For H3 the phase matrix is computed from ``z = H1 y = alpha v`` in closed
    form rather than from the rounded product.
    """
    if kind not in ("H1", "H2", "H3"):
        raise ValueError(f"unknown reflector kind {kind!r}")
    ya = _qarray(y)
    ell = ya.shape[-2]
    if v is None:
        v = np.zeros(ell)
        v[0] = 1.0
    v = np.asarray(v, dtype=np.float64)
    if not np.isclose(np.linalg.norm(v), 1.0, rtol=0, atol=8 * EPS * ell):
        raise ValueError("target direction v must be a real unit vector")
    ny = np.sqrt(np.sum(ya**2, axis=(-2, -1)))
    if np.any(ny == 0.0):
        raise ValueError("make_householder requires ||y|| > 0")
    _charge(ledger, kind, "generate", _batch_count(ya, 2))

    vq = np.zeros(ell * 4).reshape(ell, 4)
    vq[:, 0] = v
    if kind == "H2":
        g = phase_matrix(ya)
        gy = qmul(g, ya)
        x = ny[..., None, None] * vq
        return HouseholderReflector("H2", _unit(gy - x), pre=g)

    w = np.sum(v[:, None] * ya, axis=-2)  # v^T y
    alpha = -ny[..., None] * unit_phase(w)
    x = alpha[..., None, :] * v[:, None]
    u = _unit(ya - x)
    if kind == "H1":
        return HouseholderReflector("H1", u)
    z = alpha[..., None, :] * v[:, None]
    return HouseholderReflector("H3", u, post=phase_matrix(z))


def _unit(d: np.ndarray) -> np.ndarray:
    nd = np.sqrt(np.sum(d**2, axis=(-2, -1)))[..., None, None]
    return np.where(nd > 0, d / np.where(nd > 0, nd, 1.0), 0.0)


def reflect_left(h: HouseholderReflector, x: np.ndarray) -> np.ndarray:
    """``T x`` for ``x`` of shape ``(..., l, c, 4)``."""
    if h.pre is not None:
        x = qmul(h.pre[..., :, None, :], x)
    u = h.u[..., :, None, :]
    w = np.sum(qmul(qconj(u), x), axis=-3)  # u^H x, shape (..., c, 4)
    x = x - 2.0 * qmul(u, w[..., None, :, :])
    if h.post is not None:
        x = qmul(h.post[..., :, None, :], x)
    return x


def reflect_right(h: HouseholderReflector, x: np.ndarray) -> np.ndarray:
    """``x T`` for ``x`` of shape ``(..., r, l, 4)``."""
    if h.post is not None:
        x = qmul(x, h.post[..., None, :, :])
    u = h.u[..., None, :, :]
    w = np.sum(qmul(x, u), axis=-2)  # x u, shape (..., r, 4)
    x = x - 2.0 * qmul(w[..., :, None, :], qconj(u))
    if h.pre is not None:
        x = qmul(x, h.pre[..., None, :, :])
    return x


def apply_householder(
    h: HouseholderReflector, m, side: str = "left", ledger: OpLedger | None = None
):
    """Apply ``h`` to a matrix slice from the left (``T M``) or right (``M T``).

    ``m`` may be a :class:`CompactReal`, a :class:`QuatMatrix` or a component
    array; the result has the same type.  Cost: ``ceil(l/2)`` apply units per
    column (left) or row (right).
    """
    if isinstance(m, CompactReal):
        out = apply_householder(h, from_compact(m), side, ledger)
        return to_compact(out, m.variant)
    if isinstance(m, QuatMatrix):
        return QuatMatrix.from_components(apply_householder(h, m.components(), side, ledger))
    x = np.asarray(m, dtype=np.float64)
    ell = h.size
    units = math.ceil(ell / 2)
    if side == "left":
        if x.shape[-3] != ell:
            raise ValueError(f"reflector of size {ell} cannot act on {x.shape[-3]} rows")
        y = reflect_left(h, x)
        _charge(ledger, h.kind, "apply", units * _batch_count(x, 3) * x.shape[-2])
    elif side == "right":
        if x.shape[-2] != ell:
            raise ValueError(f"reflector of size {ell} cannot act on {x.shape[-2]} columns")
        y = reflect_right(h, x)
        _charge(ledger, h.kind, "apply", units * _batch_count(x, 3) * x.shape[-3])
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return y


def householder_matrix_error(h: HouseholderReflector) -> float:
    """``||T^H T - I||_F`` for an unbatched reflector."""
    t = h.matrix().components()
    g = qmatmul(qherm(t), t)
    g[..., 0] -= np.eye(h.size)
    return float(np.sqrt(np.sum(g**2)))


def as_quats(a: np.ndarray) -> list[Quat]:
    return [Quat.from_array(r) for r in np.asarray(a).reshape(-1, 4)]


def zero_tolerance(norm) -> np.ndarray:
    """Magnitude at or below which an entry counts as zero inside a transform."""
    return ZERO_TOL * EPS * np.asarray(norm)


__all__: Sequence[str] = [
    "COSTS",
    "Cost",
    "GeneralizedGivens",
    "HouseholderReflector",
    "OpLedger",
    "apply_givens_pair",
    "apply_householder",
    "givens_left",
    "givens_right",
    "make_givens",
    "make_householder",
    "phase_matrix",
    "reflect_left",
    "reflect_right",
]
