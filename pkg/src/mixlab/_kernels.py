"""Hot loops: sparse-triplet assembly for the space-time systems and the
fixed-step RK4 integrator used by the Falkner-Skan shooting.

Each kernel has a numba version and a pure-numpy version with identical
output. Set ``MIXLAB_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("MIXLAB_DISABLE_NUMBA", "").strip().lower()
    return _HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


# --------------------------------------------------------------------------
# primal system: unknown (i, j) -> i * nr + j
# --------------------------------------------------------------------------

def _primal_numpy(nt, nr, ht, h, rho):
    N = nt * nr
    I, J = np.meshgrid(np.arange(nt), np.arange(nr), indexing="ij")
    I = I.ravel()
    J = J.ravel()
    P = rho[J]
    row = np.arange(N)
    ident = (J == 0) | (J == nr - 1) | ((P > 0) & (I == 0)) | ((P < 0) & (I == nt - 1))
    eq = ~ident
    c2 = 1.0 / (h * h)

    rows = [row[ident], row[eq], row[eq], row[eq]]
    cols = [row[ident], row[eq] - 1, row[eq] + 1, row[eq]]
    vals = [np.ones(ident.sum()), np.full(eq.sum(), -c2), np.full(eq.sum(), -c2),
            2.0 * c2 + np.abs(P[eq]) / ht]
    fwd = eq & (P > 0)
    bwd = eq & (P < 0)
    rows += [row[fwd], row[bwd]]
    cols += [row[fwd] - nr, row[bwd] + nr]
    vals += [-P[fwd] / ht, P[bwd] / ht]
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals))


def _adjoint_numpy(nt, nr, ht, h, rho):
    # width W = nr + 1: cols 0..m-1 (rho<0), m = Phi(0-), m+1 = Phi(0+), m+2.. (rho>0)
    m = (nr - 1) // 2
    W = nr + 1
    rows, cols, vals = [], [], []
    c2 = 1.0 / (h * h)
    jj = np.array([j for j in range(nr) if j != m])
    cc = np.where(jj < m, jj, jj + 1)
    P = rho[jj]
    lc = np.where(jj - 1 == m, m + 1, np.where(jj - 1 < m, jj - 1, jj))
    rc = np.where(jj + 1 == m, m, np.where(jj + 1 < m, jj + 1, jj + 2))
    for i in range(nt):
        base = i * W
        ident = (jj == 0) | (jj == nr - 1) | ((P > 0) & (i == nt - 1)) | ((P < 0) & (i == 0))
        eq = ~ident
        r = base + cc
        rows += [r[ident], r[eq], r[eq], r[eq]]
        cols += [r[ident], base + lc[eq], base + rc[eq], r[eq]]
        vals += [np.ones(ident.sum()), np.full(eq.sum(), -c2), np.full(eq.sum(), -c2),
                 2.0 * c2 + np.abs(P[eq]) / ht]
        fwd = eq & (P > 0)
        bwd = eq & (P < 0)
        rows += [r[fwd], r[bwd]]
        cols += [r[fwd] + W, r[bwd] - W]
        vals += [-P[fwd] / ht, P[bwd] / ht]
        # value-jump row and derivative-jump row
        rows.append(np.array([base + m, base + m]))
        cols.append(np.array([base + m + 1, base + m]))
        vals.append(np.array([1.0, -1.0]))
        k = 0.5 / h
        rows.append(np.full(6, base + m + 1))
        cols.append(base + np.array([m + 1, m + 2, m + 3, m, m - 1, m - 2]))
        vals.append(np.array([-3 * k, 4 * k, -k, -3 * k, 4 * k, -k]))
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals))


def _rk4_numpy(beta, fpp0, h, n):
    y = np.array([0.0, 0.0, fpp0])
    out = np.full((n + 1, 3), np.nan)
    out[0] = y

    def rhs(v):
        return np.array([v[1], v[2], -v[0] * v[2] - beta * (1.0 - v[1] * v[1])])

    for s in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(y) < 1e8):
            return out, False
        out[s + 1] = y
    return out, True


if _HAVE_NUMBA:

    @njit(cache=True)
    def _primal_numba(nt, nr, ht, h, rho):
        N = nt * nr
        rows = np.empty(4 * N, np.int64)
        cols = np.empty(4 * N, np.int64)
        vals = np.empty(4 * N)
        c2 = 1.0 / (h * h)
        k = 0
        for i in range(nt):
            for j in range(nr):
                r = i * nr + j
                p = rho[j]
                if j == 0 or j == nr - 1 or (p > 0 and i == 0) or (p < 0 and i == nt - 1):
                    rows[k] = r; cols[k] = r; vals[k] = 1.0; k += 1
                    continue
                rows[k] = r; cols[k] = r - 1; vals[k] = -c2; k += 1
                rows[k] = r; cols[k] = r + 1; vals[k] = -c2; k += 1
                rows[k] = r; cols[k] = r; vals[k] = 2.0 * c2 + abs(p) / ht; k += 1
                if p > 0:
                    rows[k] = r; cols[k] = r - nr; vals[k] = -p / ht; k += 1
                elif p < 0:
                    rows[k] = r; cols[k] = r + nr; vals[k] = p / ht; k += 1
        return rows[:k], cols[:k], vals[:k]

    @njit(cache=True)
    def _adjoint_numba(nt, nr, ht, h, rho):
        m = (nr - 1) // 2
        W = nr + 1
        cap = 4 * nt * W + 8 * nt
        rows = np.empty(cap, np.int64)
        cols = np.empty(cap, np.int64)
        vals = np.empty(cap)
        c2 = 1.0 / (h * h)
        k = 0
        for i in range(nt):
            base = i * W
            for j in range(nr):
                if j == m:
                    continue
                c = j if j < m else j + 1
                r = base + c
                p = rho[j]
                if j == 0 or j == nr - 1 or (p > 0 and i == nt - 1) or (p < 0 and i == 0):
                    rows[k] = r; cols[k] = r; vals[k] = 1.0; k += 1
                    continue
                if j - 1 == m:
                    lc = m + 1
                elif j - 1 < m:
                    lc = j - 1
                else:
                    lc = j
                if j + 1 == m:
                    rc = m
                elif j + 1 < m:
                    rc = j + 1
                else:
                    rc = j + 2
                rows[k] = r; cols[k] = base + lc; vals[k] = -c2; k += 1
                rows[k] = r; cols[k] = base + rc; vals[k] = -c2; k += 1
                rows[k] = r; cols[k] = r; vals[k] = 2.0 * c2 + abs(p) / ht; k += 1
                if p > 0:
                    rows[k] = r; cols[k] = r + W; vals[k] = -p / ht; k += 1
                else:
                    rows[k] = r; cols[k] = r - W; vals[k] = p / ht; k += 1
            rows[k] = base + m; cols[k] = base + m + 1; vals[k] = 1.0; k += 1
            rows[k] = base + m; cols[k] = base + m; vals[k] = -1.0; k += 1
            q = 0.5 / h
            r = base + m + 1
            rows[k] = r; cols[k] = base + m + 1; vals[k] = -3 * q; k += 1
            rows[k] = r; cols[k] = base + m + 2; vals[k] = 4 * q; k += 1
            rows[k] = r; cols[k] = base + m + 3; vals[k] = -q; k += 1
            rows[k] = r; cols[k] = base + m; vals[k] = -3 * q; k += 1
            rows[k] = r; cols[k] = base + m - 1; vals[k] = 4 * q; k += 1
            rows[k] = r; cols[k] = base + m - 2; vals[k] = -q; k += 1
        return rows[:k], cols[:k], vals[:k]

    @njit(cache=True)
    def _rk4_numba(beta, fpp0, h, n):
        out = np.full((n + 1, 3), np.nan)
        a, b, c = 0.0, 0.0, fpp0
        out[0, 0] = a; out[0, 1] = b; out[0, 2] = c
        for s in range(n):
            k1a, k1b, k1c = b, c, -a * c - beta * (1.0 - b * b)
            a2, b2, c2 = a + 0.5 * h * k1a, b + 0.5 * h * k1b, c + 0.5 * h * k1c
            k2a, k2b, k2c = b2, c2, -a2 * c2 - beta * (1.0 - b2 * b2)
            a3, b3, c3 = a + 0.5 * h * k2a, b + 0.5 * h * k2b, c + 0.5 * h * k2c
            k3a, k3b, k3c = b3, c3, -a3 * c3 - beta * (1.0 - b3 * b3)
            a4, b4, c4 = a + h * k3a, b + h * k3b, c + h * k3c
            k4a, k4b, k4c = b4, c4, -a4 * c4 - beta * (1.0 - b4 * b4)
            a += (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
            b += (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
            c += (h / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
            if not (abs(a) < 1e8 and abs(b) < 1e8 and abs(c) < 1e8):
                return out, False
            out[s + 1, 0] = a; out[s + 1, 1] = b; out[s + 1, 2] = c
        return out, True


def primal_triplets(nt: int, nr: int, ht: float, h: float, rho: np.ndarray):
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    if numba_enabled():
        return _primal_numba(nt, nr, ht, h, rho)
    return _primal_numpy(nt, nr, ht, h, rho)


def adjoint_triplets(nt: int, nr: int, ht: float, h: float, rho: np.ndarray):
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    if numba_enabled():
        return _adjoint_numba(nt, nr, ht, h, rho)
    return _adjoint_numpy(nt, nr, ht, h, rho)


def rk4_falkner_skan(beta: float, fpp0: float, h: float, n: int):
    """Integrate f''' + f f'' + beta (1 - f'^2) = 0 from (0, 0, fpp0).

    Returns ``(samples, ok)``; ``ok`` is False on blow-up, in which case the
    rows after the failure are NaN.
    """
    if numba_enabled():
        return _rk4_numba(float(beta), float(fpp0), float(h), int(n))
    return _rk4_numpy(float(beta), float(fpp0), float(h), int(n))
