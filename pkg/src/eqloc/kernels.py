"""Integer hot loops: lattice points in boxes and batched exact mat-vec checks.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
The backend is picked once at import time: numba is used when it imports and
``EQLOC_NUMBA`` is not set to ``0``.  Both backends return identical arrays
(same rows, same order), which the test suite checks.
"""

from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("EQLOC_NUMBA", "1").lower() not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - depends on environment
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


# --------------------------------------------------------------------------
# lattice points of {x : lo <= x <= hi, A x >= b}
# --------------------------------------------------------------------------


def _box_points_numpy(A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    n = lo.shape[0]
    if np.any(hi < lo):
        return np.zeros((0, n), dtype=np.int64)
    axes = [np.arange(lo[i], hi[i] + 1, dtype=np.int64) for i in range(n)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    if A.shape[0] == 0:
        return grid
    ok = np.all(grid @ A.T >= b, axis=1)
    return grid[ok]


if njit is not None:

    @njit(cache=True)
    def _box_points_numba(A, b, lo, hi):  # pragma: no cover - compiled
        n = lo.shape[0]
        m = A.shape[0]
        total = 1
        for i in range(n):
            if hi[i] < lo[i]:
                return np.zeros((0, n), dtype=np.int64)
            total *= hi[i] - lo[i] + 1
        out = np.empty((total, n), dtype=np.int64)
        x = lo.copy()
        count = 0
        for _ in range(total):
            ok = True
            for r in range(m):
                s = 0
                for i in range(n):
                    s += A[r, i] * x[i]
                if s < b[r]:
                    ok = False
                    break
            if ok:
                for i in range(n):
                    out[count, i] = x[i]
                count += 1
            # odometer, last coordinate fastest (matches meshgrid 'ij' order)
            k = n - 1
            while k >= 0:
                x[k] += 1
                if x[k] <= hi[k]:
                    break
                x[k] = lo[k]
                k -= 1
        return out[:count].copy()


def box_points(A, b, lo, hi, backend: str | None = None) -> np.ndarray:
    """Integer points x with lo <= x <= hi and A @ x >= b, in lexicographic order."""
    A = np.asarray(A, dtype=np.int64).reshape(-1, len(lo))
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    use = backend or BACKEND
    if use == "numba":
        if njit is None:
            raise RuntimeError("numba backend requested but unavailable")
        return _box_points_numba(A, b, lo, hi)
    return _box_points_numpy(A, b, lo, hi)


# --------------------------------------------------------------------------
# batched exact check  M @ c_i == f_i
# --------------------------------------------------------------------------


def _matvec_check_numpy(M: np.ndarray, C: np.ndarray, F: np.ndarray) -> np.ndarray:
    return np.all(C @ M.T == F, axis=1)


if njit is not None:

    @njit(cache=True)
    def _matvec_check_numba(M, C, F):  # pragma: no cover - compiled
        k = C.shape[0]
        rows, cols = M.shape
        out = np.empty(k, dtype=np.bool_)
        for t in range(k):
            ok = True
            for r in range(rows):
                s = 0
                for c in range(cols):
                    s += M[r, c] * C[t, c]
                if s != F[t, r]:
                    ok = False
                    break
            out[t] = ok
        return out


def matvec_check(M, C, F, backend: str | None = None) -> np.ndarray:
    """Row-wise exact test of M @ C[t] == F[t] in int64."""
    M = np.ascontiguousarray(M, dtype=np.int64)
    C = np.ascontiguousarray(C, dtype=np.int64)
    F = np.ascontiguousarray(F, dtype=np.int64)
    use = backend or BACKEND
    if use == "numba":
        if njit is None:
            raise RuntimeError("numba backend requested but unavailable")
        return _matvec_check_numba(M, C, F)
    return _matvec_check_numpy(M, C, F)
