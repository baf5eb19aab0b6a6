from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from eqloc import kernels

needs_numba = pytest.mark.skipif(kernels.njit is None, reason="numba not available")


def test_box_points_brute_force():
    A = np.array([[1, 1], [-1, 2]])
    b = np.array([0, -3])
    got = kernels.box_points(A, b, [-3, -3], [3, 3], backend="numpy")
    expected = [(x, y) for x in range(-3, 4) for y in range(-3, 4) if x + y >= 0 and -x + 2 * y >= -3]
    assert [tuple(r) for r in got] == expected


def test_box_points_empty_box():
    got = kernels.box_points(np.zeros((0, 2)), [], [1, 0], [0, 3], backend="numpy")
    assert got.shape == (0, 2)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_box_points_backends_identical(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    A = rng.integers(-3, 4, size=(4, n))
    b = rng.integers(-6, 1, size=4)
    lo, hi = [-4] * n, [4] * n
    a = kernels.box_points(A, b, lo, hi, backend="numpy")
    c = kernels.box_points(A, b, lo, hi, backend="numba")
    assert np.array_equal(a, c)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_matvec_check_backends_identical(seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-2, 3, size=(6, 4))
    C = rng.integers(-2, 3, size=(200, 4))
    F = C @ M.T
    F[::3, 0] += 1
    a = kernels.matvec_check(M, C, F, backend="numpy")
    c = kernels.matvec_check(M, C, F, backend="numba")
    assert np.array_equal(a, c)
    assert a.sum() == 200 - len(range(0, 200, 3))


def _backend_with(value: str) -> str:
    env = dict(os.environ, EQLOC_NUMBA=value)
    out = subprocess.run(
        [sys.executable, "-c", "from eqloc import kernels; print(kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return out.stdout.strip()


def test_env_flag_forces_numpy():
    assert _backend_with("0") == "numpy"


@needs_numba
def test_env_flag_default_uses_numba():
    assert _backend_with("1") == "numba"


def test_numba_request_without_numba(monkeypatch):
    monkeypatch.setattr(kernels, "njit", None)
    with pytest.raises(RuntimeError):
        kernels.matvec_check(np.eye(2), np.eye(2), np.eye(2), backend="numba")
