"""Per-sample separability certificates and exhaustive RIP constants.

For a binary model with margin ``f`` (``logit_1 - logit_0``) and a
reconstruction ``xh`` of a complete sample ``x`` whose missing coordinates
are ``m``, the checks are:

* type I:   ``eps > |<w_m, e_m>|``                     with ``e_m = x_m - xh_m``
* type II:  ``eps > |<w_m, x_m>| + |<w_m, xh_m>|``
* MLP:      ``eps > A * max_j |<W1_m[:, j], e_m>|``     (as usually stated)
* MLP (l2): ``eps > A * ||W1_m.T e_m||``               (the Lipschitz-sound form)
* RIP:      ``eps > 2 ||w_m||_1 sqrt(K / (1 - delta))``

where ``eps = |f(xh)|``.  All comparisons are strict and exact.

The certificates reason about a reconstruction that agrees with the
observed coordinates, so by default ``xh`` is taken as the learned
reconstruction on missing coordinates and the observed values elsewhere.
Under that convention ``f(x) - f(xh)`` depends only on ``e_m`` and each
certificate, together with a correctly classified reconstruction, implies a
correctly classified complete sample.
"""

import csv
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .classifier import predict, product_constant_A
from .errors import BudgetExceeded, ContractViolation, UnsupportedConfiguration

DEFAULT_RIP_BUDGET = 10**6


@dataclass(eq=False)
class ConditionReport:
    """Struct-of-arrays, one entry per sample.

    ``e_m_inner``, ``g``, ``type1_holds`` and ``type2_holds`` refer to the
    input-space weight vector and are only defined for linear models; for
    an MLP they are NaN / False.  ``mlp_bound`` and friends are None for
    linear models.
    """

    epsilon: np.ndarray
    e_m_inner: np.ndarray
    g: np.ndarray
    type1_holds: np.ndarray
    type2_holds: np.ndarray
    recon_correct: np.ndarray
    full_correct: np.ndarray
    recon_label: np.ndarray
    full_label: np.ndarray
    w_m_l1: np.ndarray
    recon_norm: np.ndarray
    full_norm: np.ndarray
    mlp_bound: np.ndarray = None
    mlp_bound_l2: np.ndarray = None
    mlp_holds: np.ndarray = None
    mlp_l2_holds: np.ndarray = None
    constant_A: float = None

    @property
    def n_samples(self):
        return self.epsilon.shape[0]

    @property
    def linear(self):
        return self.mlp_bound is None

    def rows(self):
        """One dict per sample, for CSV export."""
        cols = ["epsilon", "e_m_inner", "g", "type1_holds", "type2_holds",
                "recon_correct", "full_correct"]
        if not self.linear:
            cols += ["mlp_bound", "mlp_bound_l2", "mlp_holds", "mlp_l2_holds"]
        for i in range(self.n_samples):
            row = {"sample": i}
            for c in cols:
                v = getattr(self, c)[i]
                row[c] = int(v) if isinstance(v, (bool, np.bool_)) else float(v)
            yield row


def check_conditions(model, complete, mask, reconstructions, observed_from_data=True):
    """Evaluate every separability certificate on each sample.

    ``complete`` is a fully observed :class:`MaskedDataset` (features and
    labels), ``mask`` the observation mask used during training and
    ``reconstructions`` the learned ``D s_i`` (one row per sample).
    """
    clf = getattr(model, "classifier", model)
    if clf.n_classes != 2:
        raise UnsupportedConfiguration(
            f"separability checks need a binary classifier, got {clf.n_classes} classes")
    X = np.asarray(complete.features, dtype=np.float64)
    y = np.asarray(complete.labels)
    mask = np.asarray(mask, dtype=bool)
    Xh = np.asarray(reconstructions, dtype=np.float64)
    if mask.shape != X.shape or Xh.shape != X.shape:
        raise ContractViolation(
            f"features {X.shape}, mask {mask.shape} and reconstructions {Xh.shape} must agree")
    if observed_from_data:
        Xh = np.where(mask, X, Xh)
    miss = ~mask

    ph = predict(clf, Xh)
    pf = predict(clf, X)
    eps = np.abs(ph.binary_margin)
    n = X.shape[0]
    nan = np.full(n, np.nan)
    false = np.zeros(n, dtype=bool)

    if clf.depth == 0:
        w, _ = clf.binary_head()
        a = np.where(miss, X, 0.0) @ w
        b = np.where(miss, Xh, 0.0) @ w
        e_inner = np.abs(a - b)
        g = np.abs(a) + np.abs(b)
        w_l1 = miss.astype(np.float64) @ np.abs(w)
        report = ConditionReport(eps, e_inner, g, eps > e_inner, eps > g,
                                 ph.label == y, pf.label == y, ph.label, pf.label,
                                 w_l1, np.linalg.norm(Xh, axis=1), np.linalg.norm(X, axis=1))
        return report

    A = product_constant_A(clf)
    W1 = clf.layers[0][0]
    proj = np.where(miss, X - Xh, 0.0) @ W1  # row i: W1_m.T e_m
    bound = A * np.abs(proj).max(axis=1)
    bound_l2 = A * np.linalg.norm(proj, axis=1)
    return ConditionReport(eps, nan, nan, false, false.copy(), ph.label == y, pf.label == y,
                           ph.label, pf.label, nan.copy(), np.linalg.norm(Xh, axis=1),
                           np.linalg.norm(X, axis=1), bound, bound_l2, eps > bound,
                           eps > bound_l2, A)


@dataclass(eq=False)
class ConditionHistogram:
    counts: np.ndarray  # (eps bins, g bins)
    eps_edges: np.ndarray
    g_edges: np.ndarray
    pct_condition_met: float
    accuracy_given_met: float
    accuracy_given_not_met: float
    pct_eps_gt_g: float
    n_met: int
    n_not_met: int

    def summary(self):
        return {k: getattr(self, k) for k in (
            "pct_condition_met", "accuracy_given_met", "accuracy_given_not_met",
            "pct_eps_gt_g", "n_met", "n_not_met")}


def _edges(v, bins):
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def condition_histogram(report, bins=20):
    """2-D histogram of ``(eps, g)`` with accuracy split by the type II condition.

    A sample "meets the condition" when ``eps > g`` and its reconstruction is
    correctly classified; accuracies refer to the complete samples.  A
    fraction over an empty group is NaN.  ``pct_eps_gt_g`` counts ``eps > g``
    alone.
    """
    n = report.n_samples
    if n == 0:
        raise ContractViolation("empty condition report")
    if not report.linear:
        raise UnsupportedConfiguration("the (eps, g) histogram needs a linear classifier")
    eps, g = report.epsilon, report.g
    ee, ge = _edges(eps, bins), _edges(g, bins)
    counts, _, _ = np.histogram2d(eps, g, bins=[ee, ge])
    met = report.type2_holds & report.recon_correct
    full = report.full_correct

    def frac(sel):
        return float(full[sel].mean()) if sel.any() else float("nan")

    return ConditionHistogram(counts.astype(np.int64), ee, ge, float(met.mean()), frac(met),
                              frac(~met), float(report.type2_holds.mean()),
                              int(met.sum()), int((~met).sum()))


def write_report_csv(report, path):
    rows = list(report.rows())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["sample"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_histogram_json(hist, path):
    doc = dict(hist.summary())
    doc.update(counts=hist.counts.tolist(), eps_edges=hist.eps_edges.tolist(),
               g_edges=hist.g_edges.tolist())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class RipReport:
    order: int
    delta: float
    violated: bool
    max_support: tuple
    min_support: tuple
    lambda_max: float
    lambda_min: float
    n_supports: int

    def __str__(self):
        if self.violated:
            return f"RIP violated (delta >= 1) at order {self.order}: delta = {self.delta:.6g}"
        return f"delta_{self.order} = {self.delta:.6g}"


def rip_constant_exhaustive(D, K, budget=DEFAULT_RIP_BUDGET, chunk=20000):
    """Restricted isometry constant of order ``K`` by enumerating every support.

    Supports of size exactly ``K`` suffice: by eigenvalue interlacing the
    Gram spectrum of a smaller support lies inside that of any superset.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise ContractViolation("dictionary must be 2-D")
    P = D.shape[1]
    K = int(K)
    if not 1 <= K <= P:
        raise ContractViolation(f"order K={K} must lie in [1, {P}]")
    total = math.comb(P, K)
    if total > budget:
        raise BudgetExceeded(f"C({P}, {K}) = {total} supports exceeds the budget of {budget}")

    best_hi, best_lo = -np.inf, np.inf
    arg_hi = arg_lo = None
    supports = itertools.combinations(range(P), K)
    while True:
        block = np.array(list(itertools.islice(supports, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        sub = D[:, block].transpose(1, 0, 2)  # (n, N, K)
        lam = np.linalg.eigvalsh(np.matmul(sub.transpose(0, 2, 1), sub))
        i_hi = int(np.argmax(lam[:, -1]))
        i_lo = int(np.argmin(lam[:, 0]))
        if lam[i_hi, -1] > best_hi:
            best_hi, arg_hi = float(lam[i_hi, -1]), tuple(int(t) for t in block[i_hi])
        if lam[i_lo, 0] < best_lo:
            best_lo, arg_lo = float(lam[i_lo, 0]), tuple(int(t) for t in block[i_lo])

    delta = max(best_hi - 1.0, 1.0 - best_lo, 0.0)
    return RipReport(K, delta, delta >= 1.0, arg_hi, arg_lo, best_hi, best_lo, total)


def rip_bound(w_m_l1, K, delta):
    """``2 ||w_m||_1 sqrt(K / (1 - delta))``; infinite where ``delta >= 1``."""
    delta = np.asarray(delta, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * np.asarray(w_m_l1) * np.sqrt(K / (1.0 - delta))
    return np.where(delta < 1.0, out, np.inf)


def check_rip_condition(report, rip, K=None):
    """Per-sample RIP certificate.

    ``rip`` is a :class:`RipReport`, a scalar ``delta`` or one ``delta`` per
    sample (e.g. computed on each sample's missing-row sub-dictionary).  The
    certificate needs ``||x|| <= 1`` and ``||xh|| <= 1``; samples violating
    that, or with ``delta >= 1``, are reported as not certified.
    """
    if not report.linear:
        raise UnsupportedConfiguration("the RIP certificate needs a linear classifier")
    if isinstance(rip, RipReport):
        delta, K = rip.delta, rip.order if K is None else K
    else:
        delta = rip
        if K is None:
            raise ContractViolation("K is required when delta is given directly")
    delta = np.broadcast_to(np.asarray(delta, dtype=np.float64), report.epsilon.shape)
    bound = rip_bound(report.w_m_l1, K, delta)
    normalized = (report.full_norm <= 1.0) & (report.recon_norm <= 1.0)
    return (report.epsilon > bound) & normalized & (delta < 1.0)
