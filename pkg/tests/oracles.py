"""Independent reference implementations used only by the tests."""

import numpy as np

# multiplication table of the basis (1, i, j, k): BASIS[a][b] = (sign, index)
BASIS = [
    [(1, 0), (1, 1), (1, 2), (1, 3)],
    [(1, 1), (-1, 0), (1, 3), (-1, 2)],
    [(1, 2), (-1, 3), (-1, 0), (1, 1)],
    [(1, 3), (1, 2), (-1, 1), (-1, 0)],
]


def table_mul(p, q):
    out = [0.0] * 4
    for a in range(4):
        for b in range(4):
            s, c = BASIS[a][b]
            out[c] += s * p[a] * q[b]
    return np.array(out)


def full_counterpart(planes):
    """Real counterpart assembled entry by entry from 4x4 blocks."""
    q0, q1, q2, q3 = planes
    m, n = q0.shape
    R = np.zeros((4 * m, 4 * n))
    for r in range(m):
        for c in range(n):
            a, b, cc, d = q0[r, c], q1[r, c], q2[r, c], q3[r, c]
            blk = np.array(
                [
                    [a, cc, b, d],
                    [-cc, a, d, -b],
                    [-b, -d, a, cc],
                    [-d, b, -cc, a],
                ]
            )
            R[r::m, c::n] = blk
    return R


def quat_matmul_loops(A, B):
    """Triple-loop quaternion product on component arrays (m, k, 4) x (k, n, 4)."""
    m, k, _ = A.shape
    n = B.shape[1]
    C = np.zeros((m, n, 4))
    for i in range(m):
        for j in range(n):
            for t in range(k):
                C[i, j] += table_mul(A[i, t], B[t, j])
    return C


def block_svd_values(planes):
    """Distinct singular values from the full counterpart (each appears 4 times)."""
    s = np.linalg.svd(full_counterpart(planes), compute_uv=False)
    return s[::4]
