"""Hot loops: Born-rule shot binning and chained two-level rotations.

Each kernel has a numba ``@njit`` form and a pure-numpy form with the same
signature.  The active pair is chosen once at import:

    EXPCTL_BACKEND=numpy   force the numpy path
    EXPCTL_BACKEND=numba   require numba (ImportError if missing)

With the variable unset numba is used when importable.  Both paths are
always importable as ``*_numpy`` / ``*_numba`` so tests and the benchmark
can compare them directly.
"""
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def born_counts_numpy(cdf, u):
    """Histogram of outcome indices for uniforms ``u`` under cumulative ``cdf``.

    Outcome ``k`` is chosen when ``cdf[k-1] <= u < cdf[k]``.  ``cdf[-1]``
    must be exactly 1.0 so every ``u`` in [0, 1) lands on a valid index.
    """
    idx = np.searchsorted(cdf, u, side="right")
    return np.bincount(idx, minlength=cdf.shape[0]).astype(np.int64)


def rotate_rows_numpy(mat, his, los, phis, chis):
    """Apply two-level rotations to the rows of ``mat`` in order, in place.

    Rotation ``j`` acts on rows ``(his[j], los[j])`` as
    ``lo <- cos*lo - e^{-i chi} sin*hi`` and ``hi <- cos*hi + e^{i chi} sin*lo``.
    """
    for j in range(his.shape[0]):
        h, l = his[j], los[j]
        c, s = np.cos(phis[j]), np.sin(phis[j])
        ph = np.exp(1j * chis[j])
        row_l = mat[l].copy()
        row_h = mat[h].copy()
        mat[l] = c * row_l - np.conj(ph) * s * row_h
        mat[h] = c * row_h + ph * s * row_l
    return mat


if HAS_NUMBA:

    @numba.njit(cache=True)
    def born_counts_numba(cdf, u):
        n = cdf.shape[0]
        counts = np.zeros(n, dtype=np.int64)
        for j in range(u.shape[0]):
            x = u[j]
            lo = 0
            hi = n
            # first index with cdf[idx] > x
            while lo < hi:
                mid = (lo + hi) // 2
                if cdf[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            counts[lo] += 1
        return counts

    @numba.njit(cache=True)
    def rotate_rows_numba(mat, his, los, phis, chis):
        ncol = mat.shape[1]
        for j in range(his.shape[0]):
            h = his[j]
            l = los[j]
            c = np.cos(phis[j])
            s = np.sin(phis[j])
            ph = np.exp(1j * chis[j])
            phc = np.conj(ph)
            for k in range(ncol):
                xl = mat[l, k]
                xh = mat[h, k]
                mat[l, k] = c * xl - phc * s * xh
                mat[h, k] = c * xh + ph * s * xl
        return mat

else:  # pragma: no cover
    born_counts_numba = None
    rotate_rows_numba = None


def _select_backend():
    requested = os.environ.get("EXPCTL_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not HAS_NUMBA:
            raise ImportError("EXPCTL_BACKEND=numba but numba is not installed")
        return "numba"
    if requested:
        raise ValueError(f"EXPCTL_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _select_backend()

if BACKEND == "numba":
    born_counts = born_counts_numba
    rotate_rows = rotate_rows_numba
else:
    born_counts = born_counts_numpy
    rotate_rows = rotate_rows_numpy
