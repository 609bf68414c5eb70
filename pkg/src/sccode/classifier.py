"""Softmax classifiers: logistic regression and ReLU multilayer perceptrons.

Hidden layer ``l`` maps ``x(l-1) -> relu(x(l-1) @ W_l + B_l)`` with
``W_l`` of shape ``(N_{l-1}, N_l)``.  The head is ``logits = x(L) @ head_w.T
+ head_b`` with ``head_w`` of shape ``(C, N_L)``.  With no hidden layers the
model is multinomial logistic regression on the raw input.

All functions accept a single sample (1-D) or a batch (2-D, one row per
sample).  Parameter gradients are averaged over the batch; input gradients
are returned per sample.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .numerics import spectral_norm


@dataclass(eq=False)
class MlpClassifier:
    layers: list = field(default_factory=list)  # [(W, B), ...]
    head_w: np.ndarray = None
    head_b: np.ndarray = None

    @property
    def n_inputs(self):
        return self.layers[0][0].shape[0] if self.layers else self.head_w.shape[1]

    @property
    def n_classes(self):
        return self.head_w.shape[0]

    @property
    def depth(self):
        return len(self.layers)

    @property
    def hidden_widths(self):
        return [W.shape[1] for W, _ in self.layers]

    def params(self):
        """Flat list of parameter arrays (views, in backprop order)."""
        out = []
        for W, B in self.layers:
            out += [W, B]
        return out + [self.head_w, self.head_b]

    def copy(self):
        return MlpClassifier([(W.copy(), B.copy()) for W, B in self.layers],
                             self.head_w.copy(), self.head_b.copy())

    def binary_head(self):
        """``(w, b)`` of the margin ``logit_1 - logit_0`` on the last hidden layer."""
        if self.n_classes != 2:
            raise ContractViolation("binary margin needs exactly two classes")
        return self.head_w[1] - self.head_w[0], float(self.head_b[1] - self.head_b[0])


def init_classifier(rng, n_inputs, hidden, n_classes):
    """Gaussian weights with stddev ``1/sqrt(fan_in)``; zero biases."""
    layers = []
    fan_in = n_inputs
    for width in hidden:
        layers.append((rng.normal(size=(fan_in, width), scale=1.0 / np.sqrt(fan_in)),
                       np.zeros(width)))
        fan_in = width
    head_w = rng.normal(size=(n_classes, fan_in), scale=1.0 / np.sqrt(fan_in))
    return MlpClassifier(layers, head_w, np.zeros(n_classes))


@dataclass(eq=False)
class Prediction:
    logits: np.ndarray
    probabilities: np.ndarray
    label: np.ndarray
    binary_margin: np.ndarray = None


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def logsumexp(z):
    z = np.asarray(z, dtype=np.float64)
    zmax = z.max(axis=-1)
    return zmax + np.log(np.exp(z - zmax[..., None]).sum(axis=-1))


def forward(clf, x):
    """Evaluate the network; returns ``(Prediction, cache)``."""
    h = np.asarray(x, dtype=np.float64)
    acts = [h]
    pre = []
    for W, B in clf.layers:
        a = h @ W + B
        pre.append(a)
        h = np.maximum(a, 0.0)
        acts.append(h)
    logits = h @ clf.head_w.T + clf.head_b
    probs = softmax(logits)
    margin = logits[..., 1] - logits[..., 0] if logits.shape[-1] == 2 else None
    pred = Prediction(logits, probs, np.argmax(logits, axis=-1), margin)
    return pred, (acts, pre, probs)


def predict(clf, x):
    return forward(clf, x)[0]


def cross_entropy(pred, y):
    """``-log p(y)`` per sample, via log-sum-exp on the logits."""
    z = pred.logits
    y = np.asarray(y)
    zy = np.take_along_axis(np.atleast_2d(z), np.atleast_1d(y)[:, None], axis=1)[:, 0]
    out = logsumexp(np.atleast_2d(z)) - zy
    return out if z.ndim == 2 else float(out[0])


def backward(clf, cache, y):
    """Exact gradients of the cross-entropy.

    Returns ``(param_grads, grad_input)`` where ``param_grads`` follows
    :meth:`MlpClassifier.params` order (batch-averaged) and ``grad_input``
    has one row per sample.
    """
    acts, pre, probs = cache
    single = probs.ndim == 1
    P = np.atleast_2d(probs)
    y = np.atleast_1d(np.asarray(y))
    n = P.shape[0]
    delta = P.copy()
    delta[np.arange(n), y] -= 1.0
    hL = np.atleast_2d(acts[-1])
    grads = [delta.T @ hL / n, delta.mean(axis=0)]
    g = delta @ clf.head_w
    for l in range(clf.depth - 1, -1, -1):
        W, _ = clf.layers[l]
        g = g * (np.atleast_2d(pre[l]) > 0.0)
        h_prev = np.atleast_2d(acts[l])
        grads = [h_prev.T @ g / n, g.mean(axis=0)] + grads
        g = g @ W.T
    return grads, (g[0] if single else g)


def accuracy(clf, x, y):
    """Fraction of argmax predictions equal to ``y`` (ties go to the lower label)."""
    y = np.asarray(y)
    if y.size == 0:
        raise ContractViolation("accuracy of an empty sample set")
    return float(np.mean(predict(clf, x).label == y))


def product_constant_A(clf, tol=1e-10, max_iter=1000):
    """``||w|| * prod_{l>=2} ||W_l||_2`` for the binary margin head."""
    w, _ = clf.binary_head()
    A = float(np.linalg.norm(w))
    for W, _ in clf.layers[1:]:
        A *= spectral_norm(W, tol=tol, max_iter=max_iter)
    return A
