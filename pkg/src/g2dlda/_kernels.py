"""Hot inner loops for the Lp reweighting step.

Two implementations of each kernel live here: a numba ``@njit`` loop and a
vectorized numpy path.  The active backend is picked once at import time from
the ``G2DLDA_BACKEND`` environment variable (``numba`` or ``numpy``); when it
is unset numba is used if it imports cleanly.

Column data is passed *row-stacked*: ``cols`` has shape ``(M, d)`` and row
``m`` is one d-dimensional column Z_ijk (or V_ik) of the original matrices.

Every kernel returns a status code alongside its result; ``DEGENERATE`` means
a reweighting denominator fell below ``tau`` and the caller must perturb.  With
``clamp`` set, such denominators are floored at ``tau`` instead.
"""
import os

import numpy as np

OK = 0
DEGENERATE = 1


def _numpy_weighted_gram(cols, w, p, sigma, tau, clamp=False):
    d = cols.shape[1]
    proj = np.abs(cols @ w)
    aw = np.abs(w)
    if p < 2.0:
        if clamp:
            proj = np.maximum(proj, tau)
            aw = np.maximum(aw, tau)
        elif (proj.size and proj.min() < tau) or (sigma > 0.0 and aw.min() < tau):
            return np.zeros((d, d)), DEGENERATE
    weights = proj ** (p - 2.0)
    H = (cols * weights[:, None]).T @ cols
    H = 0.5 * (H + H.T)
    if sigma > 0.0:
        H[np.diag_indices(d)] += sigma * aw ** (p - 2.0)
    return H, OK


def _numpy_reweighted_offsets(cols, counts, w, p, tau, clamp=False):
    proj = cols @ w
    a = np.abs(proj)
    if p < 1.0:
        if clamp:
            a = np.maximum(a, tau)
        elif a.size and a.min() < tau:
            return np.zeros(cols.shape[1]), DEGENERATE
    coef = counts * a ** (p - 1.0) * np.sign(proj)
    coef[proj == 0.0] = 0.0
    return cols.T @ coef, OK


def _numpy_lp_sums(zcols, vcols, counts, w, p):
    within = np.sum(np.abs(zcols @ w) ** p)
    between = np.sum(counts * np.abs(vcols @ w) ** p)
    return within, between


try:
    if os.environ.get("G2DLDA_BACKEND", "numba").lower() == "numpy":
        raise ImportError("numba disabled by G2DLDA_BACKEND")
    from numba import njit
except ImportError:
    njit = None


if njit is not None:

    # The numba twins fuse the elementwise reweighting (power, sign, tau
    # checks) into single passes and hand the dense products to BLAS via
    # np.dot, which beats any hand-written triple loop for the Gram matrix.

    @njit(cache=True, inline="always")
    def _powp(a, p):
        # same fast paths numpy's power takes, so both backends round alike
        if p == 1.0:
            return a
        if p == 2.0:
            return a * a
        return a ** p

    @njit(cache=True)
    def _numba_weighted_gram(cols, w, p, sigma, tau, clamp=False):
        M, d = cols.shape
        if p < 2.0 and sigma > 0.0 and not clamp:
            for k in range(d):
                if abs(w[k]) < tau:
                    return np.zeros((d, d)), DEGENERATE
        proj = np.dot(cols, w)
        scaled = np.empty((M, d))
        for m in range(M):
            a = abs(proj[m])
            if p < 2.0 and a < tau:
                if not clamp:
                    return np.zeros((d, d)), DEGENERATE
                a = tau
            wt = a ** (p - 2.0)
            for k in range(d):
                scaled[m, k] = wt * cols[m, k]
        H = np.dot(scaled.T, cols)
        for i in range(d):
            for j in range(i + 1, d):
                v = 0.5 * (H[i, j] + H[j, i])
                H[i, j] = v
                H[j, i] = v
            if sigma > 0.0:
                aw = abs(w[i])
                if p < 2.0 and aw < tau:
                    aw = tau
                H[i, i] += sigma * aw ** (p - 2.0)
        return H, OK

    @njit(cache=True)
    def _numba_reweighted_offsets(cols, counts, w, p, tau, clamp=False):
        M, d = cols.shape
        proj = np.dot(cols, w)
        coef = np.zeros(M)
        for m in range(M):
            s = proj[m]
            a = abs(s)
            if p < 1.0 and a < tau:
                if not clamp:
                    return np.zeros(d), DEGENERATE
                a = tau
            if s > 0.0:
                coef[m] = counts[m] * a ** (p - 1.0)
            elif s < 0.0:
                coef[m] = -counts[m] * a ** (p - 1.0)
        return np.dot(cols.T, coef), OK

    @njit(cache=True)
    def _numba_lp_sums(zcols, vcols, counts, w, p):
        zp = np.dot(zcols, w)
        within = 0.0
        for m in range(zp.shape[0]):
            within += _powp(abs(zp[m]), p)
        vp = np.dot(vcols, w)
        between = 0.0
        for m in range(vp.shape[0]):
            between += counts[m] * _powp(abs(vp[m]), p)
        return within, between

    BACKEND = "numba"
    weighted_gram = _numba_weighted_gram
    reweighted_offsets = _numba_reweighted_offsets
    lp_sums = _numba_lp_sums
else:
    BACKEND = "numpy"
    weighted_gram = _numpy_weighted_gram
    reweighted_offsets = _numpy_reweighted_offsets
    lp_sums = _numpy_lp_sums


NUMPY_KERNELS = {
    "weighted_gram": _numpy_weighted_gram,
    "reweighted_offsets": _numpy_reweighted_offsets,
    "lp_sums": _numpy_lp_sums,
}
NUMBA_KERNELS = (
    {
        "weighted_gram": _numba_weighted_gram,
        "reweighted_offsets": _numba_reweighted_offsets,
        "lp_sums": _numba_lp_sums,
    }
    if njit is not None
    else None
)
