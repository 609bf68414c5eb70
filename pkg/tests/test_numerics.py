import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sccode.errors import ContractViolation
from sccode.numerics import RngStream, gaussian_fill, matmul, spectral_norm


def loop_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0.0
            for k in range(a.shape[1]):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def test_matmul_identity_and_hand_case():
    A = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(matmul(np.eye(3), A), A)
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(5, 7)), rng.normal(size=(7, 3))
    np.testing.assert_allclose(matmul(a, b), loop_matmul(a, b), atol=1e-12, rtol=0)


def test_matmul_shape_mismatch():
    with pytest.raises(ContractViolation):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associative(rng):
    for _ in range(20):
        a, b, c = rng.normal(size=(4, 5)), rng.normal(size=(5, 6)), rng.normal(size=(6, 3))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10)


def test_spectral_norm_simple_cases():
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-12)
    assert spectral_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, abs=1e-12)
    assert spectral_norm(np.zeros((3, 2))) == 0.0


def jacobi_singular_values(m, sweeps=100):
    # one-sided Jacobi on the columns; independent of LAPACK's SVD path
    a = np.array(m, dtype=float)
    n = a.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = a[:, p] @ a[:, p]
                beta = a[:, q] @ a[:, q]
                gamma = a[:, p] @ a[:, q]
                off = max(off, abs(gamma) / np.sqrt(alpha * beta))
                if gamma == 0.0:
                    continue
                zeta = (beta - alpha) / (2 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1 + zeta * zeta)) if zeta else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
        if off < 1e-15:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def test_spectral_norm_matches_jacobi_oracle(rng):
    m = rng.normal(size=(6, 4))
    assert spectral_norm(m) == pytest.approx(jacobi_singular_values(m)[0], abs=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_spectral_norm_dominates_random_directions(seed):
    r = np.random.default_rng(seed)
    m = r.normal(size=(5, 4))
    v = r.normal(size=4)
    assert spectral_norm(m) >= np.linalg.norm(m @ v) / np.linalg.norm(v) - 1e-9


def test_gaussian_fill_deterministic_and_moments():
    a = gaussian_fill(RngStream(42), 100, 100, 1.0)
    b = gaussian_fill(RngStream(42), 100, 100, 1.0)
    assert a.tobytes() == b.tobytes()
    assert abs(a.mean()) < 4 * 1.0 / 100
    assert 0.94 <= a.var() <= 1.06
    c = gaussian_fill(RngStream(7), 100, 100, 2.5)
    assert abs(c.mean()) < 4 * 2.5 / 100


def test_rng_stream_children_independent_and_reproducible():
    r = RngStream(3)
    a = r.child(1).normal(size=5)
    b = RngStream(3).child(1).normal(size=5)
    c = r.child(2).normal(size=5)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


def test_rng_stream_rejects_bad_seed():
    with pytest.raises(ContractViolation):
        RngStream(-1)
    with pytest.raises(ContractViolation):
        RngStream(2**64)
