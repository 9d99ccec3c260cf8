"""Float kernels: projected Gauss-Seidel for the envelope obstacle problem and
per-node mixed areas of gradient polygons.

Each kernel has a loop implementation (compiled by numba when enabled) and a
numpy implementation used by the fallback path.
"""
from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, maybe_njit


def _psor_loop(k, b, f, max_iter, tol, relax):
    n = f.shape[0]
    phi = f.copy()
    for it in range(max_iter):
        change = 0.0
        for v in range(n):
            s = b[v]
            for u in range(n):
                if u != v:
                    s -= k[v, u] * phi[u]
            target = s / k[v, v]
            new = phi[v] + relax * (target - phi[v])
            if new > f[v]:
                new = f[v]
            d = abs(new - phi[v])
            if d > change:
                change = d
            phi[v] = new
        if change < tol:
            return phi, it + 1
    return phi, max_iter


def _psor_numpy(k, b, f, max_iter, tol, relax):
    # Same sweep order as the loop kernel, with the inner sum vectorized.
    n = f.shape[0]
    phi = f.astype(np.float64).copy()
    diag = np.diag(k).copy()
    for it in range(max_iter):
        change = 0.0
        for v in range(n):
            s = b[v] - (k[v] @ phi - diag[v] * phi[v])
            target = s / diag[v]
            new = min(phi[v] + relax * (target - phi[v]), f[v])
            change = max(change, abs(new - phi[v]))
            phi[v] = new
        if change < tol:
            return phi, it + 1
    return phi, max_iter


psor_jit = maybe_njit(_psor_loop)


def psor(k, b, f, max_iter=100000, tol=1e-13, relax=1.0):
    """Greatest ``phi <= f`` with ``k @ phi <= b`` for a Z-matrix ``k``.

    Starts from ``phi = f`` and sweeps downward; returns ``(phi, sweeps)``.
    """
    k = np.ascontiguousarray(k, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if USE_NUMBA:
        return psor_jit(k, b, f, max_iter, tol, relax)
    return _psor_numpy(k, b, f, max_iter, tol, relax)


def _mixed_area_loop(p, q):
    m = p.shape[0]
    k = p.shape[1]
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for j in range(k):
            jn = (j + 1) % k
            acc += p[i, j, 0] * q[i, jn, 1] - p[i, j, 1] * q[i, jn, 0]
            acc += q[i, j, 0] * p[i, jn, 1] - q[i, j, 1] * p[i, jn, 0]
        out[i] = 0.25 * acc
    return out


def mixed_area_numpy(p, q):
    """Polarized signed shoelace area of closed polygons, one per row.

    ``p`` and ``q`` have shape ``(m, k, 2)``; works for object arrays too.
    """
    pn = np.roll(p, -1, axis=1)
    qn = np.roll(q, -1, axis=1)
    cross = (p[..., 0] * qn[..., 1] - p[..., 1] * qn[..., 0]
             + q[..., 0] * pn[..., 1] - q[..., 1] * pn[..., 0])
    return cross.sum(axis=1) / 4


mixed_area_jit = maybe_njit(_mixed_area_loop)


def mixed_area(p, q):
    if p.dtype == object or q.dtype == object:
        return mixed_area_numpy(p, q)
    if USE_NUMBA:
        return mixed_area_jit(np.ascontiguousarray(p, dtype=np.float64),
                              np.ascontiguousarray(q, dtype=np.float64))
    return mixed_area_numpy(p, q)
