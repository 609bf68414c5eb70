"""Baseline imputers: zero fill, unsupervised / supervised means and same-class KNN.

``impute`` fills a training set and returns the statistics needed to fill
test data with :func:`impute_test`.  Test labels are unknown, so the
supervised kinds fall back to the unsupervised per-feature mean there.

KNN distance between samples ``i`` and ``j`` is the Euclidean distance over
their co-observed coordinates ``S_ij`` scaled by ``sqrt(N / |S_ij|)``;
samples without common coordinates are infinitely far apart.  Ties go to
the smaller sample index.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import MaskedDataset
from .errors import ContractViolation

logger = logging.getLogger(__name__)

KINDS = ("zero_fill", "mean_unsupervised", "mean_supervised", "knn")


@dataclass(frozen=True)
class ImputerKind:
    kind: str
    k: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown imputer {self.kind!r}; expected one of {KINDS}")
        if self.kind == "knn" and self.k < 1:
            raise ContractViolation("knn needs k >= 1")

    @classmethod
    def parse(cls, text):
        """``zf``, ``mu``, ``ms`` or ``knn10``-style short names, or full kind names."""
        short = {"zf": "zero_fill", "mu": "mean_unsupervised", "ms": "mean_supervised"}
        t = text.strip().lower()
        if t in short:
            return cls(short[t])
        if t.startswith("knn"):
            rest = t[3:].lstrip("(_").rstrip(")")
            return cls("knn", int(rest) if rest else 10)
        return cls(t)

    @property
    def name(self):
        return f"knn{self.k}" if self.kind == "knn" else {
            "zero_fill": "zf", "mean_unsupervised": "mu", "mean_supervised": "ms"}[self.kind]


@dataclass(frozen=True, eq=False)
class FittedImputer:
    kind: ImputerKind
    feature_means: np.ndarray
    class_means: np.ndarray


def _masked_mean(X, M):
    cnt = M.sum(axis=0)
    tot = np.where(M, X, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)


def fit_statistics(train, kind):
    X, M = train.features, train.mask
    mu = _masked_mean(X, M)
    if np.isnan(mu).any():
        logger.warning("features %s observed by no sample; filling with 0",
                       np.flatnonzero(np.isnan(mu)).tolist())
        mu = np.where(np.isnan(mu), 0.0, mu)
    cm = np.empty((train.num_classes, train.n_features))
    for c in range(train.num_classes):
        sel = train.labels == c
        cm[c] = _masked_mean(X[sel], M[sel])
        missing = np.isnan(cm[c])
        if missing.any() and sel.any():
            logger.warning("class %d: features %s unobserved; using unsupervised mean",
                           c, np.flatnonzero(missing).tolist())
        cm[c] = np.where(missing, mu, cm[c])
    return FittedImputer(kind, mu, cm)


def _fill(dataset, values):
    return MaskedDataset(np.where(dataset.mask, dataset.features, values),
                         np.ones_like(dataset.mask), dataset.labels, dataset.num_classes)


def impute(train, kind):
    """Fully observed copy of ``train`` plus the fitted statistics."""
    if isinstance(kind, str):
        kind = ImputerKind.parse(kind)
    fitted = fit_statistics(train, kind)
    if kind.kind == "zero_fill":
        return _fill(train, 0.0), fitted
    if kind.kind == "mean_unsupervised":
        return _fill(train, fitted.feature_means[None, :]), fitted
    class_fill = fitted.class_means[train.labels]
    if kind.kind == "mean_supervised":
        return _fill(train, class_fill), fitted

    out = np.where(train.mask, train.features, 0.0)
    for c in range(train.num_classes):
        idx = np.flatnonzero(train.labels == c)
        if idx.size == 0:
            continue
        Xc = np.ascontiguousarray(out[idx])
        Mc = np.ascontiguousarray(train.mask[idx])
        dist = kernels.partial_distances(Xc, Mc)
        order = np.ascontiguousarray(np.argsort(dist, axis=1, kind="stable"), dtype=np.intp)
        filled = Xc.copy()
        kernels.knn_fill(Xc, Mc, order, kind.k, np.ascontiguousarray(class_fill[idx]), filled)
        out[idx] = filled
    return _fill(train, out), fitted


def impute_test(test, fitted):
    """Fill test data with training statistics; supervised kinds use the unsupervised mean."""
    if test.is_complete:
        return test
    if fitted.kind.kind == "zero_fill":
        return _fill(test, 0.0)
    return _fill(test, fitted.feature_means[None, :])
