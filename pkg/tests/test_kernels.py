import os
import subprocess
import sys

import numpy as np
import pytest

from preq import _pykernels, kernels
from randomops import ginibre

ckernels = pytest.importorskip("preq._ckernels")
BACKENDS = [_pykernels, ckernels]


def _linear(rng, n):
    return ginibre(rng, n * n, scale=2.0), rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_iterate_affine_agree(rng, n):
    P, q = _linear(rng, n)
    P = P / (1.1 * np.linalg.norm(P, 2))
    x0 = rng.standard_normal(n * n) + 0j
    a, b = (m.iterate_affine(P, q, x0, 200) for m in BACKENDS)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    # oracle: plain loop
    x = x0.copy()
    for _ in range(200):
        x = P @ x + q
    np.testing.assert_allclose(a[-1], x, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_rk4_affine_agree(rng, n):
    L, c = _linear(rng, n)
    x0 = rng.standard_normal(n * n) + 0j
    a, b = (m.rk4_affine(L, c, x0, 1e-3, 500) for m in BACKENDS)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_rk4_normalized_agree(rng, n):
    L, _ = _linear(rng, n)
    x0 = np.eye(n, dtype=complex).reshape(-1) / n
    a, b = (m.rk4_normalized(L, x0, 1e-3, 500, n) for m in BACKENDS)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("record", [False, True])
def test_em_block_agree(rng, record):
    m, s, n = 300, 7, 2
    F = np.array([np.eye(n) + 1e-2 * ginibre(rng, n) for _ in range(s)])
    S = 0.1 * ginibre(rng, n)
    z = rng.standard_normal((s, m, n)) + 1j * rng.standard_normal((s, m, n))
    phi0 = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    out = []
    for mod in BACKENDS:
        phi = phi0.copy()
        mom = np.zeros((s, n, n), dtype=complex)
        paths = np.zeros((s, m, n), dtype=complex) if record else None
        mod.em_block(phi, F, S, z, mom, paths)
        out.append((phi, mom, paths))
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-11, atol=1e-11)
    if record:
        np.testing.assert_allclose(out[0][2], out[1][2], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(out[0][2][-1], out[0][0])
    # oracle: step-by-step update
    phi = phi0.copy()
    for k in range(s):
        phi = phi @ F[k].T + z[k] @ S.T
    np.testing.assert_allclose(out[1][0], phi, rtol=1e-12, atol=1e-12)


def test_default_backend_is_compiled():
    if os.environ.get("PREQ_PURE_PYTHON", "") not in ("", "0"):
        assert kernels.BACKEND == "python"
    else:
        assert kernels.BACKEND == "cython"


def test_environment_forces_fallback():
    env = dict(os.environ, PREQ_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from preq import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
