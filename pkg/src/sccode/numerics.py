"""Dense linear-algebra helpers, seeded random streams and spectral norms.

Matrices are plain ``numpy.ndarray`` objects (float64, C order).  Random
numbers come from :class:`RngStream`, a thin wrapper over numpy's PCG64
bit generator (PCG-XSL-RR 128/64) seeded through ``SeedSequence`` so that
independent child streams can be derived from ``(seed, key...)`` tuples.
"""

import numpy as np

from .errors import ContractViolation

DTYPE = np.float64


class RngStream:
    """Deterministic random stream.

    The exact algorithm is numpy's ``PCG64`` seeded by
    ``SeedSequence(entropy=seed, spawn_key=key)``.  Normal variates use
    numpy's ziggurat sampler.  Equal ``(seed, key)`` pairs yield identical
    sequences on every platform numpy supports.
    """

    def __init__(self, seed, key=()):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ContractViolation(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *key):
        """Independent stream addressed by ``key`` below this one."""
        return RngStream(self.seed, self.key + tuple(key))

    def normal(self, size=None, scale=1.0):
        return self._gen.normal(0.0, scale, size=size)

    def uniform(self, size=None):
        return self._gen.random(size=size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, size, replace=False):
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def as_matrix(a):
    a = np.asarray(a, dtype=DTYPE)
    if a.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def matmul(a, b):
    """Matrix product with an explicit dimension check."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2:
        raise ContractViolation(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def gaussian_fill(rng, rows, cols, stddev=1.0):
    """``rows x cols`` matrix of i.i.d. N(0, stddev^2) entries drawn from ``rng``."""
    if not stddev > 0:
        raise ContractViolation(f"stddev must be positive, got {stddev}")
    return rng.normal(size=(rows, cols), scale=stddev)


def spectral_norm(m, tol=1e-10, max_iter=1000, rng=None):
    """Largest singular value of ``m`` by power iteration on ``m.T @ m``.

    The start vector is drawn from ``rng`` (default: ``RngStream(0)``) so the
    result is reproducible.  Iteration stops once the relative change of the
    estimate drops below ``tol`` or after ``max_iter`` steps.
    """
    m = as_matrix(m)
    if m.size == 0:
        raise ContractViolation("spectral_norm of an empty matrix")
    if not tol > 0:
        raise ContractViolation(f"tol must be positive, got {tol}")
    if not np.any(m):
        return 0.0
    if rng is None:
        rng = RngStream(0)
    v = rng.normal(size=m.shape[1])
    v /= np.linalg.norm(v)
    sigma = np.linalg.norm(m @ v)
    for _ in range(max_iter):
        u = m.T @ (m @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # start vector landed in the null space
            return 0.0
        v = u / nu
        new_sigma = np.linalg.norm(m @ v)
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return float(sigma)
