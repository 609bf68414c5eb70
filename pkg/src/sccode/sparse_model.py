"""Dictionary / sparse-code state and the reconstruction and l1 loss terms.

A dictionary is an ``N x P`` float64 array with unit-norm columns; codes are
``P`` vectors (one sample) or ``B x P`` arrays (one row per sample).  Every
function below accepts either layout and reduces over the last axis, so
batch calls return one value per row.

The reconstruction loss for one sample is::

    J1 = c(M) * || m * (x - D s) ||^2,   c(M) = M / N   (j1_scale="as_paper")
                                         c(M) = N / M   (j1_scale="inverse")

with ``M`` the number of observed features, and the sparsity penalty is
``J2 = ||s||_1 / N``.
"""

import numpy as np

from .errors import ContractViolation, NumericDegeneracyError

J1_SCALES = ("as_paper", "inverse")


def init_dictionary(rng, n_features, n_atoms):
    """Gaussian dictionary with unit-norm columns."""
    return normalize_columns(rng.normal(size=(n_features, n_atoms)))


def init_codes(rng, n_samples, n_atoms, stddev=0.1):
    """Dense N(0, stddev^2) codes; every coordinate starts active."""
    s = rng.normal(size=(n_samples, n_atoms), scale=stddev)
    s[s == 0.0] = stddev
    return s


def reconstruct(D, s):
    """``D @ s`` for a single code, or one reconstruction per code row."""
    return np.asarray(s) @ np.asarray(D).T


def j1_factor(mask, j1_scale="as_paper"):
    mask = np.asarray(mask, dtype=bool)
    N = mask.shape[-1]
    M = mask.sum(axis=-1)
    if j1_scale == "as_paper":
        return M / N
    if j1_scale == "inverse":
        return N / M
    raise ContractViolation(f"j1_scale must be one of {J1_SCALES}, got {j1_scale!r}")


def masked_residual(D, s, x, mask):
    """``m * (x - D s)``; unobserved entries of ``x`` are never read."""
    return np.where(mask, np.asarray(x) - reconstruct(D, s), 0.0)


def recon_loss(D, s, x, mask, j1_scale="as_paper"):
    r = masked_residual(D, s, x, mask)
    return j1_factor(mask, j1_scale) * np.einsum("...n,...n->...", r, r)


def l1_penalty(s, n_features):
    return np.abs(np.asarray(s)).sum(axis=-1) / n_features


def grad_code(D, s, x, mask, lam1, lam2, j1_scale="as_paper"):
    """Gradient of ``lam1*J1 + lam2*J2`` w.r.t. the code(s); sign(0) = 0."""
    D = np.asarray(D)
    N = D.shape[0]
    c = j1_factor(mask, j1_scale)
    r = masked_residual(D, s, x, mask)
    g = (-2.0 * lam1) * (np.asarray(c)[..., None] * r) @ D
    return g + (lam2 / N) * np.sign(s)


def grad_dict(D, S, X, masks, lam1, j1_scale="as_paper"):
    """Batch-averaged gradient of ``lam1*J1`` w.r.t. the dictionary."""
    S = np.atleast_2d(S)
    X = np.atleast_2d(X)
    masks = np.atleast_2d(masks)
    if S.shape[0] == 0:
        raise ContractViolation("grad_dict needs a nonempty batch")
    c = j1_factor(masks, j1_scale)
    r = masked_residual(D, S, X, masks)
    return (-2.0 * lam1 / S.shape[0]) * (c[:, None] * r).T @ S


def normalize_columns(D):
    """Scale every column to unit Euclidean norm."""
    D = np.asarray(D, dtype=np.float64)
    norms = np.linalg.norm(D, axis=0)
    zero = np.flatnonzero(~(norms > 0))
    if zero.size:
        raise NumericDegeneracyError(f"dictionary column(s) {zero.tolist()} have zero norm")
    return D / norms
