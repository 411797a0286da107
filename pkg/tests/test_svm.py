import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartpso._backend import smo_solve
from cartpso.errors import BadSigma, DimensionMismatch, SingleClass, ValidationError
from cartpso.svm import (
    ConvergenceWarning,
    SvmMulticlassModel,
    Standardizer,
    decision_value,
    dual_objective,
    kernel_matrix,
    predict_binary,
    predict_multiclass,
    rbf_kernel,
    train_binary,
    train_multiclass,
)
from cartpso.synthetic import blobs, ring
from oracles import kkt_violation, projected_gradient_dual, rbf


def full_alpha(model, X):
    """Recover the dense multiplier vector from the stored support vectors."""
    alpha = np.zeros(len(X))
    for sv, coef in zip(model.support_vectors, model.dual_coeffs):
        i = int(np.flatnonzero((X == sv).all(axis=1))[0])
        alpha[i] = abs(coef)
    return alpha


def random_problem(rng):
    n = int(rng.integers(2, 13))
    X = rng.normal(size=(n, int(rng.integers(1, 4))))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[0], y[-1] = 1.0, -1.0
    return X, y, float(10 ** rng.uniform(-1, 2)), float(10 ** rng.uniform(-0.5, 0.5))


def test_rbf_kernel_values():
    assert rbf_kernel([0, 0], [0, 0], 1.0) == 1.0
    assert rbf_kernel([0.0], [2.0], 1.0) == pytest.approx(math.exp(-2))
    assert rbf_kernel([1, 2], [3, 4], 2.0) == pytest.approx(math.exp(-8 / 8))
    with pytest.raises(BadSigma):
        rbf_kernel([0], [1], 0.0)
    with pytest.raises(DimensionMismatch):
        rbf_kernel([0, 1], [1], 1.0)


def test_kernel_matrix_matches_naive_oracle():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(7, 3))
    Z = rng.normal(size=(4, 3))
    np.testing.assert_allclose(kernel_matrix(X, Z, 0.7), rbf(X, Z, 0.7), rtol=1e-12)
    np.testing.assert_allclose(kernel_matrix(X, X, 0.7), rbf(X, X, 0.7), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20))
def test_gram_is_symmetric_psd(seed, sigma):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(int(rng.integers(1, 15)), 3))
    K = kernel_matrix(X, X, sigma)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    np.linalg.cholesky(K + 1e-8 * np.eye(len(K)))


def test_two_point_closed_form():
    X = np.array([[0.0], [2.0]])
    m = train_binary(X, [1, -1], c=10.0, sigma=1.0)
    expected = 1 / (1 - math.exp(-2))
    np.testing.assert_allclose(np.abs(m.dual_coeffs), [expected, expected], atol=1e-3)
    assert abs(m.bias) <= 1e-3
    assert m.converged
    assert decision_value(m, [0.0]) == pytest.approx(1.0, abs=1e-6)
    assert decision_value(m, [2.0]) == pytest.approx(-1.0, abs=1e-6)
    assert predict_binary(m, [1.0]) == 1  # zero decision value maps to +1


def test_two_point_box_constraint_binds():
    m = train_binary(np.array([[0.0], [2.0]]), [1, -1], c=0.5, sigma=1.0)
    np.testing.assert_allclose(np.abs(m.dual_coeffs), [0.5, 0.5])


@pytest.mark.parametrize("seed", range(20))
def test_smo_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    X, y, c, sigma = random_problem(rng)
    m = train_binary(X, y, c, sigma)
    K = rbf(X, X, sigma)
    alpha = full_alpha(m, X)
    got = dual_objective(alpha, y, K)
    _, ref = projected_gradient_dual(K, y, c)
    assert got <= ref + 1e-9 * max(1.0, abs(ref))
    assert abs(got - ref) <= 1e-4 * max(abs(ref), 1e-12)
    assert kkt_violation(alpha, y, K, m.bias, c) <= 10 * 1e-3
    assert abs(float(alpha @ y)) <= 1e-9
    assert (alpha >= 0).all() and (alpha <= c + 1e-12).all()


def test_solver_respects_iteration_cap():
    rng = np.random.default_rng(0)
    X, y = ring(seed=0)
    K = kernel_matrix(X, X, 0.5)
    alpha, b, it, converged = smo_solve(K, np.where(y == 1, 1.0, -1.0), 100.0, 1e-9, 3)
    assert it == 3 and not converged
    with pytest.warns(ConvergenceWarning):
        m = train_binary(X, np.where(y == 1, 1, -1), c=100.0, sigma=0.5, tol=1e-12,
                         max_passes=0)
    assert not m.converged


def test_train_binary_validation():
    X = np.zeros((3, 2))
    with pytest.raises(SingleClass):
        train_binary(X, [1, 1, 1])
    with pytest.raises(ValidationError):
        train_binary(X, [0, 1, 1])
    with pytest.raises(DimensionMismatch):
        train_binary(X, [1, -1])
    with pytest.raises(BadSigma):
        train_binary(X, [1, -1, 1], sigma=-1)


def test_ring_needs_a_nonlinear_kernel():
    X, y = ring(seed=2)
    m = train_multiclass(X, y, c=10.0, sigma=0.7)
    assert np.mean(np.array(m.predict(X)) == y) == 1.0


def test_multiclass_blobs_and_pairs():
    X, y = blobs([(0, 0), (4, 0), (0, 4)], n_per_class=20, scale=0.4, seed=1)
    m = train_multiclass(X, y, c=1.0, sigma=1.0)
    assert m.pairs == [(0, 1), (0, 2), (1, 2)]
    assert np.mean(np.array(m.predict(X)) == y) == 1.0
    assert predict_multiclass(m, X[0]) == y[0]


def test_multiclass_string_labels_and_json_roundtrip():
    X, y = blobs([(0, 0), (3, 3)], n_per_class=15, seed=2)
    labels = np.where(y == 1, "normal", "abnormal")
    m = train_multiclass(X, labels, classes=["normal", "abnormal"])
    m.feature_indices = [3, 7]
    m.metadata = {"note": "x"}
    text = m.to_json()
    back = SvmMulticlassModel.from_json(text)
    assert back.classes == ["normal", "abnormal"]
    assert back.feature_indices == [3, 7]
    assert back.to_json() == text
    assert back.predict(X) == m.predict(X)
    assert json.loads(text)["format"] == "cartpso-svm-1"


def test_model_format_is_checked():
    with pytest.raises(ValidationError):
        SvmMulticlassModel.from_dict({"format": "other"})


def test_vote_tie_breaks_on_decision_strength():
    # a three-way tie where each pair model returns a constant decision value
    class Const:
        def __init__(self, v):
            self.v = v
            self.converged = True

        def decision_function(self, X):
            return np.full(len(X), self.v)

    # 0 beats 1 (+0.2), 2 beats 0 (-0.9), 1 beats 2 (+0.5): one vote each
    m = SvmMulticlassModel(["a", "b", "c"], [Const(0.2), Const(-0.9), Const(0.5)],
                           [(0, 1), (0, 2), (1, 2)])
    assert m.predict(np.zeros((1, 2))) == ["c"]
    # equal strengths fall back to the lowest class position
    m = SvmMulticlassModel(["a", "b", "c"], [Const(0.5), Const(-0.5), Const(0.5)],
                           [(0, 1), (0, 2), (1, 2)])
    assert m.predict(np.zeros((1, 2))) == ["a"]


def test_standardizer():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = Standardizer.fit(X)
    np.testing.assert_array_equal(s.transform(X), [[-1.0, 0.0], [1.0, 0.0]])
    assert Standardizer.from_dict(s.to_dict()).transform([[2.0, 7.0]]).tolist() == [[0.0, 2.0]]


def test_multiclass_dimension_check():
    X, y = blobs([(0, 0), (3, 3)], n_per_class=5, seed=0)
    m = train_multiclass(X, y)
    with pytest.raises(DimensionMismatch):
        m.predict(np.zeros((1, 3)))


def test_nonconvergence_is_summarized():
    X, y = ring(seed=0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m = train_multiclass(X, y, c=1000.0, sigma=0.1, tol=1e-15, max_passes=0)
    assert not m.converged
    msgs = [str(w.message) for w in caught if w.category is ConvergenceWarning]
    assert msgs == ["1 pairwise model(s) did not converge"]


def test_training_is_deterministic():
    X, y = ring(seed=5)
    a = train_multiclass(X, y, c=3.0, sigma=0.8, seed=1).to_json()
    b = train_multiclass(X, y, c=3.0, sigma=0.8, seed=99).to_json()
    assert a == b
