"""Simultaneous classification and coding, test-time coding, and the
sequential (impute-then-train) sparse baseline.

One iteration processes one mini-batch.  Classifier and dictionary
gradients are averaged over the batch; each code row moves with its own
per-sample gradient (``J0 + lam1*J1 + lam2*J2`` of that sample), so the
``1/I`` normalisation of the global cost is absorbed into ``lr_code``.
"""

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .classifier import backward, cross_entropy, forward, init_classifier, predict
from .errors import ContractViolation, DivergenceError, NumericDegeneracyError
from .numerics import RngStream
from .sparse_model import (
    J1_SCALES,
    grad_code,
    grad_dict,
    init_codes,
    init_dictionary,
    l1_penalty,
    normalize_columns,
    recon_loss,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lam1: float = 1.0
    lam2: float = 1.0
    lr_theta: float = 0.1
    lr_dict: float = 0.1
    lr_code: float = 0.1
    lr_code_test: float = 0.1
    momentum: float = 0.5
    n_iter: int = 1000
    n_iter_test: int = 200
    batch_size: int = 100
    seed: int = 0
    n_atoms: int = 0  # 0: square dictionary (P = N)
    j1_scale: str = "as_paper"
    pin_zeros: bool = True
    code_init_stddev: float = 0.1
    log_every: int = 10

    def __post_init__(self):
        if self.lam1 < 0 or self.lam2 < 0:
            raise ContractViolation("lam1 and lam2 must be >= 0")
        for name in ("lr_theta", "lr_dict", "lr_code", "lr_code_test", "code_init_stddev"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ContractViolation("momentum must lie in [0, 1)")
        if self.n_iter < 0 or self.n_iter_test < 0:
            raise ContractViolation("iteration counts must be >= 0")
        if self.batch_size < 1 or self.log_every < 1:
            raise ContractViolation("batch_size and log_every must be >= 1")
        if self.j1_scale not in J1_SCALES:
            raise ContractViolation(f"j1_scale must be one of {J1_SCALES}")

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


@dataclass(eq=False)
class TrainedModel:
    classifier: object
    dictionary: np.ndarray = None
    train_codes: np.ndarray = None
    loss_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))
    sparsity_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    classifier_trace: np.ndarray = None

    def reconstructions(self):
        return self.train_codes @ self.dictionary.T

    def nonzeros(self):
        return np.count_nonzero(self.train_codes, axis=1)


@dataclass(eq=False)
class IterationState:
    """Snapshot passed to training callbacks after each iteration."""

    iteration: int
    batch: np.ndarray
    classifier: object
    dictionary: np.ndarray
    codes: np.ndarray
    losses: tuple


@dataclass(eq=False)
class TestResult:
    reconstructions: np.ndarray
    labels: np.ndarray
    codes: np.ndarray = None


def batches(rng, n, batch_size):
    """Endless stream of index batches; reshuffled at every epoch."""
    while True:
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield perm[start:start + batch_size]


class _Momentum:
    """SGD with heavy-ball momentum: ``v = m*v + g; p -= lr*v``."""

    def __init__(self, params, lr, momentum):
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, v, g in zip(params, self.velocity, grads):
            v *= self.momentum
            v += g
            p -= self.lr * v


def batch_losses(clf, D, S, X, M, y, cfg):
    """Per-sample ``(J0, J1, J2)`` arrays on a batch plus the forward cache."""
    N = D.shape[0]
    pred, cache = forward(clf, S @ D.T)
    j0 = cross_entropy(pred, y)
    j1 = recon_loss(D, S, X, M, cfg.j1_scale)
    j2 = l1_penalty(S, N)
    return j0, j1, j2, cache


def batch_objective(clf, D, S, X, M, y, cfg):
    """Global cost restricted to a batch: ``mean(J0 + lam1*J1) + mean(lam2*J2)``."""
    j0, j1, j2, _ = batch_losses(clf, D, S, X, M, y, cfg)
    return float(np.mean(j0 + cfg.lam1 * j1) + np.mean(cfg.lam2 * j2))


def objective_gradients(clf, D, S, X, M, y, cfg):
    """Gradients of :func:`batch_objective`.

    Returns ``(theta_grads, dict_grad, code_grads)``; ``code_grads`` row ``i``
    is the gradient of sample ``i``'s own cost, i.e. ``B`` times the
    derivative of the batch mean.
    """
    j0, j1, j2, cache = batch_losses(clf, D, S, X, M, y, cfg)
    theta_grads, gin = backward(clf, cache, y)
    gD = gin.T @ S / S.shape[0] + grad_dict(D, S, X, M, cfg.lam1, cfg.j1_scale)
    gS = gin @ D + grad_code(D, S, X, M, cfg.lam1, cfg.lam2, cfg.j1_scale)
    return theta_grads, gD, gS


def _check_finite(it, j0, j1, j2):
    vals = (float(np.mean(j0)), float(np.mean(j1)), float(np.mean(j2)))
    if not all(np.isfinite(vals)):
        raise DivergenceError(it, *vals)
    return vals


def zero_crossing_step(code, grad, step, pin_zeros=True):
    """One zero-crossing sub-gradient update of a code row (or rows); returns a new array."""
    S = np.array(code, dtype=np.float64, order="C", ndmin=2, copy=True)
    G = np.ascontiguousarray(np.broadcast_to(grad, S.shape), dtype=np.float64)
    kernels.zero_crossing_update(S, G, float(step), bool(pin_zeros))
    return S if np.ndim(code) == 2 else S[0]


def _normalize(D, it):
    try:
        return normalize_columns(D)
    except NumericDegeneracyError as exc:
        raise NumericDegeneracyError(f"iteration {it}: {exc}") from None


def _init_state(train, hidden, cfg):
    if train.n_samples == 0:
        raise ContractViolation("training set is empty")
    N = train.n_features
    P = cfg.n_atoms or N
    rng = RngStream(cfg.seed)
    D = init_dictionary(rng.child(1), N, P)
    S = init_codes(rng.child(2), train.n_samples, P, cfg.code_init_stddev)
    clf = init_classifier(rng.child(3), N, list(hidden), train.num_classes)
    return rng, D, S, clf


def train_simultaneous(train, hidden=(), cfg=TrainConfig(), callback=None):
    """Jointly learn classifier, dictionary and sparse codes on incomplete data.

    Each iteration takes one mini-batch and (a) updates the classifier with
    momentum SGD and the dictionary with a plain gradient step followed by
    column normalisation, codes held fixed; then (b) with the new classifier
    and dictionary fixed, moves the batch's codes by one zero-crossing step
    on their per-sample gradient.
    """
    rng, D, S, clf = _init_state(train, hidden, cfg)
    X, M, y = train.observed(), train.mask, train.labels
    opt = _Momentum(clf.params(), cfg.lr_theta, cfg.momentum)
    stream = batches(rng.child(4), train.n_samples, cfg.batch_size)
    losses, sparsity = [], []

    for it in range(cfg.n_iter):
        B = next(stream)
        Sb, Xb, Mb, yb = S[B], X[B], M[B], y[B]

        j0, j1, j2, cache = batch_losses(clf, D, Sb, Xb, Mb, yb, cfg)
        vals = _check_finite(it, j0, j1, j2)
        if it % cfg.log_every == 0:
            losses.append((it,) + vals)
            sparsity.append((it, np.count_nonzero(S) / S.shape[0]))

        theta_grads, gin = backward(clf, cache, yb)
        gD = gin.T @ Sb / len(B) + grad_dict(D, Sb, Xb, Mb, cfg.lam1, cfg.j1_scale)
        opt.step(clf.params(), theta_grads)
        D = _normalize(D - cfg.lr_dict * gD, it)

        pred, cache = forward(clf, Sb @ D.T)
        _, gin = backward(clf, cache, yb)
        gS = gin @ D + grad_code(D, Sb, Xb, Mb, cfg.lam1, cfg.lam2, cfg.j1_scale)
        kernels.zero_crossing_update(Sb, gS, cfg.lr_code, cfg.pin_zeros)
        S[B] = Sb

        if callback is not None:
            callback(IterationState(it, B, clf, D, S, vals))

    return TrainedModel(clf, D, S, np.array(losses).reshape(-1, 4),
                        np.array(sparsity).reshape(-1, 2))


def sparse_code(D, data, cfg, n_iter=None, lr=None, rng=None):
    """Codes for (incomplete) observations with the dictionary held fixed.

    Minimises ``lam1*J1 + lam2*J2`` per sample by zero-crossing sub-gradient
    steps from a random dense start.
    """
    n_iter = cfg.n_iter_test if n_iter is None else n_iter
    lr = cfg.lr_code_test if lr is None else lr
    rng = rng or RngStream(cfg.seed).child(5)
    S = init_codes(rng, data.n_samples, D.shape[1], cfg.code_init_stddev)
    X, M = data.observed(), data.mask
    for it in range(n_iter):
        gS = grad_code(D, S, X, M, cfg.lam1, cfg.lam2, cfg.j1_scale)
        kernels.zero_crossing_update(S, gS, lr, cfg.pin_zeros)
        if not np.all(np.isfinite(S)):
            raise DivergenceError(it, 0.0, float(np.mean(recon_loss(D, S, X, M, cfg.j1_scale))),
                                  float(np.mean(l1_penalty(S, D.shape[0]))))
    return S


def code_and_classify_test(test, model, cfg):
    """Reconstruct test samples by sparse coding, then classify the reconstructions.

    Fully observed test data is classified directly without coding.
    """
    if test.is_complete:
        x = test.features
        return TestResult(x, predict(model.classifier, x).label)
    S = sparse_code(model.dictionary, test, cfg)
    xhat = S @ model.dictionary.T
    return TestResult(xhat, predict(model.classifier, xhat).label, S)


def train_classifier(X, y, n_classes, hidden=(), cfg=TrainConfig(), rng=None):
    """Momentum SGD on the cross-entropy alone, on fully observed inputs."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    rng = rng or RngStream(cfg.seed).child(6)
    clf = init_classifier(rng.child(0), X.shape[1], list(hidden), n_classes)
    opt = _Momentum(clf.params(), cfg.lr_theta, cfg.momentum)
    stream = batches(rng.child(1), X.shape[0], cfg.batch_size)
    trace = []
    for it in range(cfg.n_iter):
        B = next(stream)
        pred, cache = forward(clf, X[B])
        j0 = cross_entropy(pred, y[B])
        if it % cfg.log_every == 0:
            trace.append((it, _check_finite(it, j0, 0.0, 0.0)[0]))
        grads, _ = backward(clf, cache, y[B])
        opt.step(clf.params(), grads)
    return clf, np.array(trace).reshape(-1, 2)


def train_sequential(train, hidden=(), cfg=TrainConfig(), callback=None):
    """Unsupervised dictionary learning and coding, then classifier training.

    Stage 1 never reads labels: it alternates a dictionary step on
    ``lam1*J1`` (with column normalisation) and a zero-crossing code step on
    ``lam1*J1 + lam2*J2``.  Stage 2 trains the classifier on the fixed
    reconstructions ``D s_i``.
    """
    rng, D, S, _ = _init_state(train, hidden, cfg)
    X, M = train.observed(), train.mask
    N = train.n_features
    stream = batches(rng.child(4), train.n_samples, cfg.batch_size)
    losses, sparsity = [], []

    for it in range(cfg.n_iter):
        B = next(stream)
        Sb, Xb, Mb = S[B], X[B], M[B]
        j1 = recon_loss(D, Sb, Xb, Mb, cfg.j1_scale)
        j2 = l1_penalty(Sb, N)
        vals = _check_finite(it, 0.0, j1, j2)
        if it % cfg.log_every == 0:
            losses.append((it, np.nan, vals[1], vals[2]))
            sparsity.append((it, np.count_nonzero(S) / S.shape[0]))
        D = _normalize(D - cfg.lr_dict * grad_dict(D, Sb, Xb, Mb, cfg.lam1, cfg.j1_scale), it)
        gS = grad_code(D, Sb, Xb, Mb, cfg.lam1, cfg.lam2, cfg.j1_scale)
        kernels.zero_crossing_update(Sb, gS, cfg.lr_code, cfg.pin_zeros)
        S[B] = Sb
        if callback is not None:
            callback(IterationState(it, B, None, D, S, vals))

    clf, ctrace = train_classifier(S @ D.T, train.labels, train.num_classes, hidden, cfg,
                                   rng.child(6))
    return TrainedModel(clf, D, S, np.array(losses).reshape(-1, 4),
                        np.array(sparsity).reshape(-1, 2), ctrace)
