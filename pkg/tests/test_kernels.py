"""The numba and numpy kernel twins must agree, and the env flag must select numpy."""
import os
import subprocess
import sys

import numpy as np
import pytest

from g2dlda import _kernels

pytestmark = pytest.mark.skipif(_kernels.NUMBA_KERNELS is None, reason="numba unavailable")


def _case(seed, M=40, d=6):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((M, d)), rng.standard_normal(d), rng.integers(1, 9, M).astype(float)


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0, 5.0])
@pytest.mark.parametrize("sigma", [0.0, 0.1])
def test_weighted_gram_agrees(p, sigma):
    cols, w, _ = _case(1)
    H_np, s_np = _kernels.NUMPY_KERNELS["weighted_gram"](cols, w, p, sigma, 1e-12, False)
    H_nb, s_nb = _kernels.NUMBA_KERNELS["weighted_gram"](cols, w, p, sigma, 1e-12, False)
    assert s_np == s_nb == _kernels.OK
    np.testing.assert_allclose(H_nb, H_np, rtol=1e-12, atol=1e-12 * np.abs(H_np).max())


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0, 5.0])
def test_offsets_and_sums_agree(p):
    cols, w, counts = _case(2)
    h_np, _ = _kernels.NUMPY_KERNELS["reweighted_offsets"](cols, counts, w, p, 1e-12, False)
    h_nb, _ = _kernels.NUMBA_KERNELS["reweighted_offsets"](cols, counts, w, p, 1e-12, False)
    np.testing.assert_allclose(h_nb, h_np, rtol=1e-12)
    a = _kernels.NUMPY_KERNELS["lp_sums"](cols, cols[:5], counts[:5], w, p)
    b = _kernels.NUMBA_KERNELS["lp_sums"](cols, cols[:5], counts[:5], w, p)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@pytest.mark.parametrize("clamp", [False, True])
def test_degenerate_status_agrees(clamp):
    cols, w, counts = _case(3)
    cols[4] = 0.0
    cols[4, 0] = 1.0
    w[0] = 0.0
    for name, args in (
        ("weighted_gram", (cols, w, 1.0, 0.1, 1e-12, clamp)),
        ("reweighted_offsets", (cols, counts, w, 0.5, 1e-12, clamp)),
    ):
        r_np = _kernels.NUMPY_KERNELS[name](*args)
        r_nb = _kernels.NUMBA_KERNELS[name](*args)
        want = _kernels.OK if clamp else _kernels.DEGENERATE
        assert r_np[1] == r_nb[1] == want
        if clamp:
            np.testing.assert_allclose(r_nb[0], r_np[0], rtol=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, G2DLDA_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c", "import g2dlda; print(g2dlda.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
