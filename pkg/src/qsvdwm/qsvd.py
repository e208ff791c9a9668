"""Structure-preserving quaternion SVD.

The reduction to real bidiagonal form alternates left and right ``H3``
reflectors and switches to generalized Givens matrices once only two
quaternions remain to be rotated; trailing phase matrices make the last
entries real.  For a 4x4 block the sequence is::

    H3(left) -> H3(right) -> H3(left) -> Givens(right) -> Givens(left)
             -> phase(right) -> phase(left)

All kernels are batched: ``qsvd_batch`` factors a stack of equally sized
matrices in one pass, which is how the watermark pipeline processes every
4x4 block of an image at once.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quaternion import (
    EPS,
    CompactReal,
    FormatError,
    QuatMatrix,
    frob_norm,
    qabs,
    qconj,
    qherm,
    qmatmul,
    qmul,
    to_compact,
    unit_phase,
)
from .transforms import (
    GeneralizedGivens,
    HouseholderReflector,
    OpLedger,
    ZERO_TOL,
    _givens,
    givens_left,
    givens_right,
    reflect_left,
    reflect_right,
)


@dataclass(frozen=True, eq=False)
class QsvdFactors:
    """``Q = U diag(S) V^H`` with ``S`` nonnegative and descending."""

    U: QuatMatrix
    S: np.ndarray
    V: QuatMatrix

    def reconstruct(self) -> QuatMatrix:
        return QuatMatrix.from_components(
            reconstruct_batch(self.U.components(), self.S, self.V.components())
        )


@dataclass(frozen=True, eq=False)
class BidiagResult:
    """``Q = U_acc B V_acc^H`` with ``B`` real upper bidiagonal."""

    B: np.ndarray
    U_acc: CompactReal
    V_acc: CompactReal


# ---------------------------------------------------------------------------
# batched reduction
# ---------------------------------------------------------------------------

def _phase_left(X, Ua, s, g, active, ledger):
    """Left-multiply row ``s`` by ``g`` (where active) and update ``L^H``."""
    X[:, s, s:] = qmul(g[:, None, :], X[:, s, s:])
    Ua[:, :, s] = qmul(Ua[:, :, s], qconj(g)[:, None, :])
    n_act = int(active.sum())
    if ledger is not None:
        ledger.charge("phase", "generate", n_act)
        ledger.charge("phase", "apply", n_act * (X.shape[2] - s))
        ledger.charge("phase", "accumulate", n_act * Ua.shape[1])


def _phase_right(X, Va, s, col, g, active, ledger):
    X[:, s:, col] = qmul(X[:, s:, col], g[:, None, :])
    Va[:, :, col] = qmul(Va[:, :, col], g[:, None, :])
    n_act = int(active.sum())
    if ledger is not None:
        ledger.charge("phase", "generate", n_act)
        ledger.charge("phase", "apply", n_act * (X.shape[1] - s))
        ledger.charge("phase", "accumulate", n_act * Va.shape[1])


def _masked_phase(z, active):
    """Phase making ``g z`` real nonnegative where active, identity elsewhere."""
    g = unit_phase(qconj(z))
    g[~active] = (1.0, 0.0, 0.0, 0.0)
    return g


def _h3_from(y, active):
    """Batched H3 reflectors for vectors ``y`` (nb, l, 4); identity where inactive."""
    ny = np.sqrt(np.sum(y**2, axis=(1, 2)))
    alpha = -ny[:, None] * unit_phase(y[:, 0])
    d = y.copy()
    d[:, 0] -= alpha
    nd = np.sqrt(np.sum(d**2, axis=(1, 2)))
    ok = active & (nd > 0)
    u = np.zeros_like(y)
    u[ok] = d[ok] / nd[ok][:, None, None]
    post = np.zeros_like(y)
    post[..., 0] = 1.0
    post[:, 0] = unit_phase(qconj(alpha))
    post[~ok] = np.where(np.arange(4) == 0, 1.0, 0.0)
    return HouseholderReflector("H3", u, post=post), ny


def _classify(y, tol_scale):
    """Split a batch of pivot vectors into (full transform, phase only, skip)."""
    nrm = np.sqrt(np.sum(y**2, axis=(1, 2)))
    tol = tol_scale * EPS * nrm
    if y.shape[1] > 1:
        below = qabs(y[:, 1:]).max(axis=1)
    else:
        below = np.zeros(y.shape[0])
    pivot_imag = np.sqrt(np.sum(y[:, 0, 1:] ** 2, axis=-1))
    full = below > tol
    phase = ~full & (pivot_imag > tol)
    return full, phase, ~(full | phase)


def _left_step(X, Ua, s, use_givens, ledger):
    nb, m, n, _ = X.shape
    ell = m - s
    y = X[:, s:, s].copy()
    full, phase, skip = _classify(y, ZERO_TOL)
    if ledger is not None:
        ledger.record_skip("left", int(skip.sum()))

    if ell == 1:
        _phase_left(X, Ua, s, _masked_phase(y[:, 0], phase), phase, ledger)
        X[phase, s, s] = (qabs(y[phase, 0])[:, None] * np.array([1.0, 0, 0, 0]))
        return

    if ell == 2 and m == n and use_givens:
        g = _givens(y[:, 0], y[:, 1])
        ident = GeneralizedGivens.identity((nb,))
        g = GeneralizedGivens(
            *(np.where(full[:, None], getattr(g, f), getattr(ident, f)) for f in ("q11", "q12", "q21", "q22"))
        )
        X[:, s:, s:] = givens_left(g, X[:, s:, s:], extra=1)
        Ua[:, :, s : s + 2] = givens_right(g, Ua[:, :, s : s + 2], extra=1)
        nf = int(full.sum())
        if ledger is not None:
            ledger.charge("givens", "generate", nf)
            ledger.charge("givens", "apply", nf * (n - s))
            ledger.charge("givens", "accumulate", nf * m)
        nx = np.sqrt(np.sum(y[full] ** 2, axis=(1, 2)))
        X[full, s, s] = nx[:, None] * np.array([1.0, 0, 0, 0])
        X[full, s + 1, s] = 0.0
        if phase.any():
            _phase_left(X, Ua, s, _masked_phase(y[:, 0], phase), phase, ledger)
            X[phase, s, s] = qabs(y[phase, 0])[:, None] * np.array([1.0, 0, 0, 0])
        return

    h, ny = _h3_from(y, full)
    X[:, s:, s:] = reflect_left(h, X[:, s:, s:])
    Ua[:, :, s:] = reflect_right(h.adjoint(), Ua[:, :, s:])
    nf = int(full.sum())
    units = math.ceil(ell / 2)
    if ledger is not None:
        ledger.charge("H3", "generate", nf)
        ledger.charge("H3", "apply", nf * units * (n - s))
        ledger.charge("H3", "accumulate", nf * units * m)
    X[full, s, s] = ny[full][:, None] * np.array([1.0, 0, 0, 0])
    X[full, s + 1 :, s] = 0.0
    if phase.any():
        _phase_left(X, Ua, s, _masked_phase(y[:, 0], phase), phase, ledger)
        X[phase, s, s] = qabs(y[phase, 0])[:, None] * np.array([1.0, 0, 0, 0])


def _right_step(X, Va, s, use_givens, ledger):
    nb, m, n, _ = X.shape
    ell = n - s - 1
    # the reflector is built from the conjugated row: r T^H = ||r|| e1^T
    y = qconj(X[:, s, s + 1 :])
    full, phase, skip = _classify(y, ZERO_TOL)
    if ledger is not None:
        ledger.record_skip("right", int(skip.sum()))

    def finish_phase():
        if phase.any():
            _phase_right(X, Va, s, s + 1, _masked_phase(qconj(y[:, 0]), phase), phase, ledger)
            X[phase, s, s + 1] = qabs(y[phase, 0])[:, None] * np.array([1.0, 0, 0, 0])

    if ell == 1:
        finish_phase()
        return

    if ell == 2 and use_givens:
        g = _givens(y[:, 0], y[:, 1])
        ident = GeneralizedGivens.identity((nb,))
        g = GeneralizedGivens(
            *(np.where(full[:, None], getattr(g, f), getattr(ident, f)) for f in ("q11", "q12", "q21", "q22"))
        )
        X[:, s:, s + 1 :] = givens_right(g, X[:, s:, s + 1 :], extra=1)
        Va[:, :, s + 1 :] = givens_right(g, Va[:, :, s + 1 :], extra=1)
        nf = int(full.sum())
        if ledger is not None:
            ledger.charge("givens", "generate", nf)
            ledger.charge("givens", "apply", nf * (m - s))
            ledger.charge("givens", "accumulate", nf * n)
        nx = np.sqrt(np.sum(y[full] ** 2, axis=(1, 2)))
        X[full, s, s + 1] = nx[:, None] * np.array([1.0, 0, 0, 0])
        X[full, s, s + 2] = 0.0
        finish_phase()
        return

    h, ny = _h3_from(y, full)
    w = h.adjoint()
    X[:, s:, s + 1 :] = reflect_right(w, X[:, s:, s + 1 :])
    Va[:, :, s + 1 :] = reflect_right(w, Va[:, :, s + 1 :])
    nf = int(full.sum())
    units = math.ceil(ell / 2)
    if ledger is not None:
        ledger.charge("H3", "generate", nf)
        ledger.charge("H3", "apply", nf * units * (m - s))
        ledger.charge("H3", "accumulate", nf * units * n)
    X[full, s, s + 1] = ny[full][:, None] * np.array([1.0, 0, 0, 0])
    X[full, s, s + 2 :] = 0.0
    finish_phase()


def bidiagonalize_batch(
    X: np.ndarray, ledger: OpLedger | None = None, use_givens: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce a stack ``(nb, m, n, 4)`` with ``m >= n``.

    Returns ``(B, U_acc, V_acc)`` as component arrays, where ``B`` is the
    reduced quaternion stack (real up to rounding, upper bidiagonal).
    """
    X = np.array(X, dtype=np.float64, copy=True)
    nb, m, n, _ = X.shape
    if m < n:
        raise ValueError("bidiagonalize needs m >= n")
    Ua = np.zeros((nb, m, m, 4))
    Ua[..., 0] = np.eye(m)
    Va = np.zeros((nb, n, n, 4))
    Va[..., 0] = np.eye(n)
    for s in range(n):
        _left_step(X, Ua, s, use_givens, ledger)
        if s <= n - 2:
            _right_step(X, Va, s, use_givens, ledger)
    return X, Ua, Va


def _bidiag_part(X: np.ndarray) -> np.ndarray:
    """Real upper-bidiagonal part of a reduced stack."""
    n = X.shape[2]
    mask = np.eye(X.shape[1], n, dtype=bool) | np.eye(X.shape[1], n, k=1, dtype=bool)
    return np.where(mask, X[..., 0], 0.0)


def bidiagonalize(Q: QuatMatrix, ledger: OpLedger | None = None, use_givens: bool = True) -> BidiagResult:
    if Q.m < Q.n:
        raise ValueError("bidiagonalize needs m >= n; factor Q^H instead")
    X, Ua, Va = bidiagonalize_batch(Q.components()[None], ledger, use_givens)
    return BidiagResult(
        B=_bidiag_part(X)[0],
        U_acc=to_compact(QuatMatrix.from_components(Ua[0])),
        V_acc=to_compact(QuatMatrix.from_components(Va[0])),
    )


def real_bidiagonal_svd(B: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``B = u_b diag(d_b) v_b^T`` via LAPACK; works on stacks too."""
    u, d, vt = np.linalg.svd(np.asarray(B, dtype=np.float64), full_matrices=True)
    return u, d, np.swapaxes(vt, -1, -2)


# ---------------------------------------------------------------------------
# full factorization
# ---------------------------------------------------------------------------

def _qsvd_tall(X, ledger, use_givens):
    R, Ua, Va = bidiagonalize_batch(X, ledger, use_givens)
    ub, d, vb = real_bidiagonal_svd(_bidiag_part(R))
    U = np.stack([Ua[..., c] @ ub for c in range(4)], axis=-1)
    V = np.stack([Va[..., c] @ vb for c in range(4)], axis=-1)
    # V's first row is real by construction; fix the remaining sign freedom
    flip = np.where(V[:, 0, :, 0] < 0, -1.0, 1.0)
    V *= flip[:, None, :, None]
    U[:, :, : flip.shape[1]] *= flip[:, None, :, None]
    return U, d, V


def qsvd_batch(
    X: np.ndarray,
    ledger: OpLedger | None = None,
    use_givens: bool = True,
    threads: int = 1,
    chunk: int = 2048,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """QSVD of every matrix in a stack ``(nb, m, n, 4)``.

    Returns component arrays ``U (nb, m, m, 4)``, ``S (nb, min(m, n))`` and
    ``V (nb, n, n, 4)``.  Chunks run on ``threads`` workers with private
    ledgers; the result does not depend on the thread count.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 4 or X.shape[-1] != 4 or 0 in X.shape:
        raise FormatError(f"expected a nonempty (nb, m, n, 4) stack, got {X.shape}")
    nb, m, n, _ = X.shape
    tall = m >= n
    work = X if tall else qherm(X)
    bounds = [(i, min(i + chunk, nb)) for i in range(0, nb, chunk)]
    ledgers = [OpLedger() for _ in bounds]

    def run(k):
        lo, hi = bounds[k]
        return _qsvd_tall(work[lo:hi], ledgers[k], use_givens)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, range(len(bounds))))
    else:
        parts = [run(k) for k in range(len(bounds))]
    if ledger is not None:
        for led in ledgers:
            ledger.merge(led)
    U = np.concatenate([p[0] for p in parts])
    S = np.concatenate([p[1] for p in parts])
    V = np.concatenate([p[2] for p in parts])
    if not tall:
        U, V = V, U
    return U, S, V


def qsvd(Q: QuatMatrix, ledger: OpLedger | None = None, use_givens: bool = True) -> QsvdFactors:
    """``Q = U diag(S) V^H`` for any quaternion matrix."""
    U, S, V = qsvd_batch(Q.components()[None], ledger, use_givens)
    return QsvdFactors(
        QuatMatrix.from_components(U[0]), S[0], QuatMatrix.from_components(V[0])
    )


def reconstruct_batch(U: np.ndarray, S: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``U diag(S) V^H`` for component stacks (also unbatched)."""
    k = S.shape[-1]
    US = U[..., :k, :] * S[..., None, :, None]
    return qmatmul(US, qherm(V[..., :k, :]))


def residual(Q: QuatMatrix, F: QsvdFactors) -> float:
    return frob_norm(Q - F.reconstruct())


def unitarity_error(M: QuatMatrix) -> float:
    a = M.components()
    g = qmatmul(qherm(a), a)
    g[..., 0] -= np.eye(M.n)
    return float(np.sqrt(np.sum(g**2)))


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    k: int
    m: int
    n: int
    wall_ns: int
    flops: int
    assignments: int
    residual: float
    bidiag_flops: int


BENCH_HEADER = ("k", "m", "n", "wall_ns", "flops", "assignments", "residual")


def bench_qsvd(
    a: int = 9,
    b: int = 6,
    k_max: int = 10,
    trials: int = 1,
    seed: int = 0,
    use_givens: bool = True,
) -> list[BenchRow]:
    """Time ``qsvd`` on random ``ak x bk`` matrices for ``k = 1..k_max``.

    Components are uniform on [0, 1).  ``wall_ns`` is the fastest of
    ``trials`` runs; the ledger counts come from a single run.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(1, k_max + 1):
        m, n = a * k, b * k
        Q = QuatMatrix.random(m, n, rng)
        best = None
        for t in range(max(1, trials)):
            led = OpLedger()
            t0 = time.perf_counter_ns()
            F = qsvd(Q, led, use_givens)
            dt = time.perf_counter_ns() - t0
            best = dt if best is None else min(best, dt)
            if t == 0:
                ledger = led
                res = residual(Q, F)
        rows.append(
            BenchRow(
                k, m, n, best,
                ledger.real_flops,
                ledger.assignments,
                res,
                ledger.total("flops", phases=("generate", "apply")),
            )
        )
    return rows


def write_bench_csv(rows: list[BenchRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in rows:
            w.writerow([r.k, r.m, r.n, r.wall_ns, r.flops, r.assignments, repr(float(r.residual))])
