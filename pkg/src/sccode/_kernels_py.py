"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is unavailable or ``SCCODE_PURE_PYTHON=1`` is set.
"""

import numpy as np


def zero_crossing_update(S, G, step, pin_zeros=True):
    """In-place sub-gradient step on code rows ``S`` with gradient ``G``.

    Coordinates whose step would flip sign are set to exactly zero; with
    ``pin_zeros`` coordinates already at zero never move.
    """
    t = S - step * G
    t[S * t < 0.0] = 0.0
    if pin_zeros:
        pinned = S == 0.0
        t[pinned] = S[pinned]  # keeps the sign bit of -0.0, as the compiled loop does
    S[...] = t
    return S


def partial_distances(X, M):
    """Pairwise Euclidean distances over co-observed coordinates.

    ``d(i, j) = sqrt(N / |S_ij| * sum_{n in S_ij} (x_i(n) - x_j(n))^2)`` with
    ``S_ij`` the coordinates observed in both rows; ``inf`` when empty.
    Sums accumulate left to right (``cumsum``) so results match the compiled
    loop bit for bit.
    """
    n, N = X.shape
    Mb = M.astype(bool)
    out = np.empty((n, n))
    for i in range(n):
        both = Mb & Mb[i]
        diff = np.where(both, X[i] - X, 0.0)
        d2 = np.cumsum(diff * diff, axis=1)[:, -1]
        cnt = both.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[i] = np.where(cnt > 0, np.sqrt(d2 * N / np.maximum(cnt, 1)), np.inf)
    return out


def knn_fill(X, M, order, k, fallback, out):
    """Fill unobserved entries of ``out`` from nearest observers.

    ``order[i]`` lists candidate neighbours of row ``i`` nearest first.  For
    each unobserved ``(i, n)`` the value is the mean of feature ``n`` over
    the first ``k`` candidates observing it, or ``fallback[i, n]`` when no
    candidate does.
    """
    Mb = M.astype(bool)
    for i in range(X.shape[0]):
        miss = ~Mb[i]
        if not miss.any():
            continue
        nb = order[i]
        obs = Mb[nb][:, miss]
        take = obs & (np.cumsum(obs, axis=0) <= k)
        vals = np.cumsum(np.where(take, X[nb][:, miss], 0.0), axis=0)[-1]
        cnt = take.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[i, miss] = np.where(cnt > 0, vals / np.maximum(cnt, 1), fallback[i, miss])
    return out
