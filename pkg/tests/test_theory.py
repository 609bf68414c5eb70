import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sccode.classifier import MlpClassifier, init_classifier
from sccode.data import MaskedDataset
from sccode.errors import BudgetExceeded, ContractViolation, UnsupportedConfiguration
from sccode.numerics import RngStream
from sccode.theory import (
    check_conditions,
    check_rip_condition,
    condition_histogram,
    rip_bound,
    rip_constant_exhaustive,
    write_histogram_json,
    write_report_csv,
)


def linear(w, b=0.0):
    w = np.asarray(w, dtype=float)
    return MlpClassifier([], np.vstack([np.zeros_like(w), w]), np.array([0.0, b]))


def complete(X, y):
    X = np.asarray(X, dtype=float)
    return MaskedDataset(X, np.ones_like(X, bool), y, 2)


def test_hand_instance_type_two():
    clf = linear([1.0, 1.0])
    ds = complete([[0.6, 0.3]], [1])
    rep = check_conditions(clf, ds, np.array([[True, False]]), np.array([[0.0, 0.4]]))
    assert rep.epsilon[0] == pytest.approx(1.0)
    assert rep.g[0] == pytest.approx(0.7)
    assert rep.e_m_inner[0] == pytest.approx(0.1)
    assert rep.type2_holds[0] and rep.type1_holds[0]
    assert rep.recon_correct[0] and rep.full_correct[0]


def test_boundary_counts_as_not_satisfied():
    clf = linear([0.0, 1.0])
    ds = complete([[0.0, 0.5]], [1])
    rep = check_conditions(clf, ds, np.array([[True, False]]), np.array([[0.0, 0.25]]))
    assert rep.epsilon[0] == 0.25 and rep.e_m_inner[0] == 0.25
    assert not rep.type1_holds[0]


def test_no_missing_features():
    r = np.random.default_rng(0)
    X = r.normal(size=(20, 4))
    clf = linear(r.normal(size=4), 0.1)
    y = r.integers(0, 2, 20)
    rep = check_conditions(clf, complete(X, y), np.ones((20, 4), bool), r.normal(size=(20, 4)))
    np.testing.assert_array_equal(rep.e_m_inner, 0.0)
    np.testing.assert_array_equal(rep.g, 0.0)
    np.testing.assert_array_equal(rep.type1_holds, rep.epsilon > 0)
    np.testing.assert_array_equal(rep.full_correct, rep.recon_correct)


def test_multiclass_rejected():
    clf = init_classifier(RngStream(0), 3, [], 3)
    ds = MaskedDataset(np.zeros((1, 3)), np.ones((1, 3), bool), [0], 3)
    with pytest.raises(UnsupportedConfiguration):
        check_conditions(clf, ds, np.ones((1, 3), bool), np.zeros((1, 3)))


def random_problem(seed, n=60, N=8, hidden=()):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, N)) * r.uniform(0.05, 1.0)
    M = r.random((n, N)) > r.uniform(0.1, 0.9)
    Xh = X + r.normal(size=(n, N)) * r.uniform(0.0, 0.5)
    clf = init_classifier(RngStream(seed), N, list(hidden), 2)
    clf.head_b[:] = r.normal(size=2) * 0.1
    y = r.integers(0, 2, n)
    return clf, complete(X, y), M, Xh


@given(st.integers(0, 10**6))
def test_linear_implication_chain(seed):
    clf, ds, M, Xh = random_problem(seed)
    rep = check_conditions(clf, ds, M, Xh)
    assert np.all(rep.g >= rep.e_m_inner)
    assert not np.any(rep.type2_holds & ~rep.type1_holds)
    assert not np.any(rep.recon_correct & rep.type1_holds & ~rep.full_correct)
    # a certified sample keeps its predicted label
    cert = rep.type1_holds
    np.testing.assert_array_equal(rep.recon_label[cert], rep.full_label[cert])
    for delta in (0.0, 0.3, 0.99):
        rip = check_rip_condition(rep, delta, K=3)
        assert not np.any(rip & ~rep.type2_holds)


@given(st.integers(0, 10**6))
def test_mlp_implication(seed):
    clf, ds, M, Xh = random_problem(seed, hidden=(6, 5))
    rep = check_conditions(clf, ds, M, Xh)
    assert np.all(rep.mlp_bound <= rep.mlp_bound_l2 * (1 + 1e-12))
    assert not np.any(rep.recon_correct & rep.mlp_l2_holds & ~rep.full_correct)
    assert np.isnan(rep.g).all() and not rep.type1_holds.any()


def test_report_invariant_to_sample_order():
    clf, ds, M, Xh = random_problem(3)
    perm = np.random.default_rng(1).permutation(ds.n_samples)
    a = check_conditions(clf, ds, M, Xh)
    b = check_conditions(clf, ds.subset(perm), M[perm], Xh[perm])
    for name in ("epsilon", "e_m_inner", "g", "type1_holds", "type2_holds", "full_correct"):
        np.testing.assert_array_equal(getattr(a, name)[perm], getattr(b, name))


def test_histogram_summary_and_conservation():
    clf, ds, M, Xh = random_problem(5, n=200)
    rep = check_conditions(clf, ds, M, Xh)
    h = condition_histogram(rep, bins=7)
    assert h.counts.shape == (7, 7) and h.counts.sum() == rep.n_samples
    assert h.n_met + h.n_not_met == rep.n_samples
    assert h.accuracy_given_met == 1.0 or math.isnan(h.accuracy_given_met)
    for v in (h.pct_condition_met, h.pct_eps_gt_g):
        assert 0.0 <= v <= 1.0


def test_histogram_all_met():
    clf = linear([1.0, 0.0])
    X = np.array([[1.0, 3.0], [2.0, -1.0]])
    rep = check_conditions(clf, complete(X, [1, 1]), np.array([[True, False]] * 2), X)
    h = condition_histogram(rep)
    assert h.pct_condition_met == 1.0 and h.accuracy_given_met == 1.0
    assert math.isnan(h.accuracy_given_not_met)


def test_exports(tmp_path):
    clf, ds, M, Xh = random_problem(6, n=10)
    rep = check_conditions(clf, ds, M, Xh)
    write_report_csv(rep, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].startswith("sample,epsilon,e_m_inner,g") and len(lines) == 11
    write_histogram_json(condition_histogram(rep, 4), tmp_path / "h.json")
    doc = json.loads((tmp_path / "h.json").read_text())
    assert sum(map(sum, doc["counts"])) == 10


class TestRip:
    def test_orthonormal_is_exact_zero(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(8, 8)))
        for K in (1, 2, 3):
            assert rip_constant_exhaustive(np.eye(8), K).delta == 0.0
            assert rip_constant_exhaustive(Q, K).delta < 1e-14

    def test_monotone_in_order(self):
        D = np.random.default_rng(1).normal(size=(6, 9))
        D /= np.linalg.norm(D, axis=0)
        deltas = [rip_constant_exhaustive(D, K).delta for K in range(1, 5)]
        assert deltas[0] < 1e-15
        assert all(b >= a for a, b in zip(deltas, deltas[1:]))

    def test_extremal_support_attains_delta(self):
        D = np.random.default_rng(2).normal(size=(5, 7))
        D /= np.linalg.norm(D, axis=0)
        rep = rip_constant_exhaustive(D, 2, chunk=4)
        T = list(rep.max_support)
        lam, vec = np.linalg.eigh(D[:, T].T @ D[:, T])
        assert lam[-1] == pytest.approx(rep.lambda_max, abs=1e-12)
        assert rep.n_supports == 21

    def test_violated_flag_and_budget(self):
        D = np.ones((3, 4)) / math.sqrt(3)
        rep = rip_constant_exhaustive(D, 2)
        assert rep.violated and "violated" in str(rep)
        with pytest.raises(BudgetExceeded, match=r"C\(40, 10\)"):
            rip_constant_exhaustive(np.eye(40), 10)
        with pytest.raises(ContractViolation):
            rip_constant_exhaustive(np.eye(3), 4)

    def test_rip_condition_limits(self):
        clf = linear([1.0, 0.0, 0.0])
        X = np.array([[0.5, 0.2, 0.1], [0.3, -0.4, 0.0]])
        M = np.array([[True, False, False], [True, False, True]])
        rep = check_conditions(clf, complete(X, [1, 1]), M, X * 0.9)
        np.testing.assert_array_equal(rep.w_m_l1, 0.0)
        np.testing.assert_array_equal(check_rip_condition(rep, 0.5, K=2), [True, True])
        np.testing.assert_array_equal(check_rip_condition(rep, 1.0, K=2), [False, False])
        assert np.isinf(rip_bound(1.0, 2, 1.0)) and rip_bound(1.0, 2, 1 - 1e-12) > 1e6
        big = check_conditions(clf, complete(X * 10, [1, 1]), M, X * 10)
        assert not check_rip_condition(big, 0.1, K=2).any()
        with pytest.raises(ContractViolation):
            check_rip_condition(rep, 0.1)
