import itertools
import warnings

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from visdecode.core import DecodingError, DimensionError, MlpSettings, RegressorSpec
from visdecode.regressors import (
    AdamState,
    KNNRegressor,
    LinearRegression,
    MLPRegressor,
    MlpParams,
    PolyKernelRidge,
    Ridge,
    TrainingError,
    adam_step,
    fit,
    kernel_ridge_fit,
    knn_predict,
    make_regressor,
    mlp_backward,
    mlp_fit,
    mlp_forward,
    mlp_loss,
    polynomial_kernel,
    predict,
    solve_least_squares,
)


# -- oracles ---------------------------------------------------------------


def explicit_poly2_features(X, gamma, coef):
    """Feature map whose inner product equals (gamma <a,b> + coef) ** 2."""
    n, d = X.shape
    cols = [gamma * X[:, i] ** 2 for i in range(d)]
    cols += [np.sqrt(2.0) * gamma * X[:, i] * X[:, j] for i, j in itertools.combinations(range(d), 2)]
    cols += [np.sqrt(2.0 * coef * gamma) * X[:, i] for i in range(d)]
    cols.append(np.full(n, coef))
    return np.column_stack(cols)


def feature_map_ridge_predict(X, Y, Q, lam, gamma, coef):
    Phi = explicit_poly2_features(X, gamma, coef)
    W = np.linalg.solve(Phi.T @ Phi + lam * np.eye(Phi.shape[1]), Phi.T @ Y)
    return explicit_poly2_features(Q, gamma, coef) @ W


def central_difference(loss, params, h=1e-6):
    grads = []
    arrays = [np.array(p, copy=True) for p in params]
    for t, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        for ix in np.ndindex(arr.shape):
            old = arr[ix]
            arr[ix] = old + h
            up = loss(MlpParams(*arrays))
            arr[ix] = old - h
            down = loss(MlpParams(*arrays))
            arr[ix] = old
            g[ix] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def rel_err(a, b):
    denom = np.linalg.norm(a) + np.linalg.norm(b)
    return 0.0 if denom == 0 else np.linalg.norm(a - b) / denom


# -- least squares / ridge -------------------------------------------------


def test_linear_exact_line_through_origin():
    m = LinearRegression().fit([[1.0], [2.0]], [[2.0], [4.0]])
    npt.assert_allclose(m.coef_, [[2.0]], atol=1e-9)
    npt.assert_allclose(m.intercept_, [0.0], atol=1e-9)


def test_predict_linear_arithmetic():
    m = LinearRegression().fit([[0.0], [1.0]], [[1.0], [3.0]])
    npt.assert_allclose(m.predict([[3.0]]), [[7.0]])


def test_ridge_closed_form_slope():
    # w = sum(xy) / (sum(x^2) + lam) = 2 / 3 for centered x
    m = Ridge(alpha=1.0).fit([[1.0], [-1.0]], [[1.0], [-1.0]])
    npt.assert_allclose(m.coef_, [[2.0 / 3.0]], atol=1e-12)
    npt.assert_allclose(m.intercept_, [0.0], atol=1e-12)


def test_ridge_small_lambda_matches_ols():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 5))
    Y = rng.standard_normal((40, 3))
    ols = LinearRegression().fit(X, Y)
    ridge = Ridge(alpha=1e-9).fit(X, Y)
    npt.assert_allclose(ridge.coef_, ols.coef_, atol=1e-6)
    npt.assert_allclose(ridge.intercept_, ols.intercept_, atol=1e-6)


def test_exactly_determined_has_zero_residual():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    Y = np.array([[1.0], [5.0], [2.0]])
    W, b = solve_least_squares(X, Y, 0.0)
    npt.assert_allclose(X @ W.T + b, Y, atol=1e-10)


def test_huge_lambda_shrinks_to_means():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 4))
    Y = rng.standard_normal((30, 2)) + [3.0, -1.0]
    W, b = solve_least_squares(X, Y, 1e12)
    assert np.abs(W).max() < 1e-9
    npt.assert_allclose(b, Y.mean(0), atol=1e-9)


def test_planted_weights_recovered():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((50, 8))
    W_true = rng.standard_normal((3, 8))
    b_true = rng.standard_normal(3)
    W, b = solve_least_squares(X, X @ W_true.T + b_true, 0.0)
    npt.assert_allclose(W, W_true, atol=1e-8)
    npt.assert_allclose(b, b_true, atol=1e-8)


def test_residual_orthogonality():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((60, 6))
    Y = rng.standard_normal((60, 4))
    W, b = solve_least_squares(X, Y, 0.0)
    Xc = X - X.mean(0)
    npt.assert_allclose(Xc.T @ (Y - X @ W.T - b), 0.0, atol=1e-8)


@pytest.mark.parametrize("shape", [(30, 5), (12, 40)])
def test_ridge_primal_and_dual_agree(shape):
    rng = np.random.default_rng(7)
    X = rng.standard_normal(shape)
    Y = rng.standard_normal((shape[0], 3))
    W, b = solve_least_squares(X, Y, 0.7)
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    W_ref = np.linalg.solve(Xc.T @ Xc + 0.7 * np.eye(shape[1]), Xc.T @ Yc).T
    npt.assert_allclose(W, W_ref, atol=1e-10)
    npt.assert_allclose(b, Y.mean(0) - W_ref @ X.mean(0), atol=1e-10)


def test_penalized_intercept_option():
    X = np.array([[1.0], [-1.0]])
    Y = np.array([[3.0], [1.0]])
    W, b = solve_least_squares(X, Y, 1.0, penalize_intercept=True)
    # [x, 1] design is orthogonal: w = 2/3, b = 4/3
    npt.assert_allclose(W, [[2.0 / 3.0]])
    npt.assert_allclose(b, [4.0 / 3.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_ridge_norm_monotone_in_lambda(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((25, 6))
    Y = rng.standard_normal((25, 2))
    norms = [np.linalg.norm(solve_least_squares(X, Y, lam)[0]) for lam in (0.01, 0.1, 1, 10)]
    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


def test_rank_deficient_ols_is_minimum_norm():
    rng = np.random.default_rng(8)
    base = rng.standard_normal((20, 2))
    X = np.hstack([base, base[:, :1]])  # duplicated column
    Y = base @ [[1.0], [2.0]]
    W, _ = solve_least_squares(X, Y, 0.0)
    npt.assert_allclose(W, [[0.5, 2.0, 0.5]], atol=1e-8)


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        solve_least_squares(np.ones((3, 1)), np.ones((3, 1)), -1.0)


# -- kNN -------------------------------------------------------------------


def test_knn_symmetric_midpoint():
    X = np.array([[0.0], [2.0]])
    Y = np.array([[0.0], [2.0]])
    npt.assert_allclose(knn_predict(X, Y, 2, [1.0]), [1.0])


def test_knn_k1_is_nearest_target():
    X = np.array([[0.0], [5.0], [9.0]])
    Y = np.array([[1.0], [2.0], [3.0]])
    npt.assert_allclose(knn_predict(X, Y, 1, [6.0]), [2.0])


def test_knn_inverse_distance_weights():
    # distances 1 and 3: (1*0 + 4/3) / (4/3) = 1
    X = np.array([[1.0], [-3.0]])
    Y = np.array([[0.0], [4.0]])
    npt.assert_allclose(knn_predict(X, Y, 2, [0.0]), [1.0])


def test_knn_exact_matches_dominate():
    X = np.array([[0.0], [0.0], [1.0]])
    Y = np.array([[2.0], [4.0], [100.0]])
    npt.assert_allclose(knn_predict(X, Y, 3, [0.0]), [3.0])
    m = KNNRegressor(n_neighbors=2).fit(X, Y)
    npt.assert_allclose(m.predict([[1.0]]), [[100.0]])


def test_knn_all_equidistant_gives_column_means():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    Y = np.arange(8.0).reshape(4, 2)
    m = KNNRegressor(n_neighbors=4).fit(X, Y)
    npt.assert_allclose(m.predict([[0.0, 0.0]]), [Y.mean(0)])


def test_knn_estimator_matches_function():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((30, 4))
    Y = rng.standard_normal((30, 3))
    Q = rng.standard_normal((7, 4))
    m = KNNRegressor(n_neighbors=5).fit(X, Y)
    expected = np.array([knn_predict(X, Y, 5, q) for q in Q])
    npt.assert_allclose(m.predict(Q), expected, rtol=1e-12)


def test_knn_k_larger_than_n():
    with pytest.raises(DecodingError):
        KNNRegressor(n_neighbors=5).fit(np.zeros((3, 1)), np.zeros((3, 1)))


# -- polynomial kernel ridge -----------------------------------------------


def test_polynomial_kernel_values():
    assert polynomial_kernel([0, 0], [0, 0], 1.0, 10.0, 2) == 100.0
    assert polynomial_kernel([1, 2], [3, 4], 1.0, 0.0, 1) == 11.0
    assert polynomial_kernel([1, 2], [3, 4], 0.5, 10.0, 2) == pytest.approx(240.25)


def test_kernel_ridge_scalar_hand_solve():
    m = PolyKernelRidge(alpha=1.0, degree=2, coef0=0.0, gamma=1.0).fit([[1.0]], [[1.0]])
    npt.assert_allclose(m.dual_coef_, [[0.5]])
    npt.assert_allclose(m.predict([[1.0]]), [[0.5]])


def test_kernel_ridge_interpolates_quadratic_targets():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((12, 2))
    Y = (X[:, :1] ** 2 - X[:, 1:] + 0.5 * X[:, :1] * X[:, 1:])
    m = PolyKernelRidge(alpha=1e-10, gamma=1.0).fit(X, Y)
    npt.assert_allclose(m.predict(X), Y, atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_kernel_ridge_equals_feature_map_ridge(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 4))
    Y = rng.standard_normal((30, 3))
    Q = rng.standard_normal((10, 4))
    m = PolyKernelRidge(alpha=0.005, degree=2, coef0=10.0).fit(X, Y)
    assert m.gamma_ == 0.25
    expected = feature_map_ridge_predict(X, Y, Q, 0.005, 0.25, 10.0)
    npt.assert_allclose(m.predict(Q), expected, atol=1e-6)


def test_kernel_ridge_requires_positive_lambda():
    with pytest.raises(ValueError):
        kernel_ridge_fit(np.ones((2, 1)), np.ones((2, 1)), 0.0, 1.0)


# -- MLP -------------------------------------------------------------------


def random_params(rng, d, h, l):
    return MlpParams(rng.standard_normal((h, d)), rng.standard_normal(h),
                     rng.standard_normal((l, h)), rng.standard_normal(l))


def test_forward_zero_weights_returns_output_bias():
    p = MlpParams(np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), np.array([1.5, -2.0]))
    out, _ = mlp_forward(p, np.array([[4.0, -7.0], [0.1, 0.2]]))
    npt.assert_array_equal(out, [[1.5, -2.0], [1.5, -2.0]])


def test_forward_one_one_one():
    p = MlpParams(np.ones((1, 1)), np.zeros(1), np.ones((1, 1)), np.zeros(1))
    out, _ = mlp_forward(p, np.array([0.0]))
    npt.assert_allclose(out, [0.5])


def test_forward_all_keep_mask_at_rate_zero_is_identity():
    rng = np.random.default_rng(0)
    p = random_params(rng, 4, 5, 2)
    X = rng.standard_normal((3, 4))
    plain, _ = mlp_forward(p, X)
    masked, _ = mlp_forward(p, X, np.ones_like(X, dtype=bool), 0.0)
    npt.assert_array_equal(plain, masked)


def test_forward_dropout_scales_kept_inputs():
    p = MlpParams(np.eye(2), np.zeros(2), np.eye(2), np.zeros(2))
    _, cache = mlp_forward(p, np.array([[1.0, 1.0]]), np.array([[True, False]]), 0.5)
    npt.assert_array_equal(cache.inputs, [[2.0, 0.0]])


def test_backward_zero_at_target():
    rng = np.random.default_rng(1)
    p = random_params(rng, 3, 4, 2)
    X = rng.standard_normal((5, 3))
    out, cache = mlp_forward(p, X)
    for g in mlp_backward(p, out, cache):
        npt.assert_array_equal(g, 0.0)


def test_backward_output_bias_is_mean_residual():
    rng = np.random.default_rng(2)
    p = random_params(rng, 3, 4, 2)
    X, Y = rng.standard_normal((6, 3)), rng.standard_normal((6, 2))
    out, cache = mlp_forward(p, X)
    npt.assert_allclose(mlp_backward(p, Y, cache).b2, (out - Y).mean(0))


def test_backward_one_one_one_finite_difference():
    p = MlpParams(np.array([[0.7]]), np.array([-0.2]), np.array([[1.3]]), np.array([0.4]))
    x, y = np.array([[0.9]]), np.array([[2.0]])
    _, cache = mlp_forward(p, x)
    grads = mlp_backward(p, y, cache)
    numeric = central_difference(lambda q: mlp_loss(mlp_forward(q, x)[0], y), p)
    for a, n in zip(grads, numeric):
        npt.assert_allclose(a, n, rtol=1e-6)


@pytest.mark.parametrize("use_mask", [False, True])
def test_backward_matches_finite_differences(use_mask):
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = random_params(rng, 5, 6, 3)
        X, Y = rng.standard_normal((4, 5)), rng.standard_normal((4, 3))
        mask = rng.random(X.shape) >= 0.3 if use_mask else None
        _, cache = mlp_forward(p, X, mask, 0.3)
        grads = mlp_backward(p, Y, cache)
        numeric = central_difference(lambda q: mlp_loss(mlp_forward(q, X, mask, 0.3)[0], Y), p)
        for a, n in zip(grads, numeric):
            assert rel_err(a, n) < 1e-6


def test_adam_zero_gradient_keeps_params():
    params = (np.array([1.0, -2.0]), np.array([[3.0]]))
    grads = tuple(np.zeros_like(p) for p in params)
    new, state = adam_step(params, grads, AdamState.zeros_like(params), 0.001)
    for a, b in zip(new, params):
        npt.assert_array_equal(a, b)
    assert state.t == 1


def test_adam_first_step_is_scale_free():
    # step 1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
    params = (np.zeros(3), np.zeros(3))
    g = np.array([0.3, -2.0, 5.0])
    new, _ = adam_step(params, (g, 100 * g), AdamState.zeros_like(params), 0.001)
    npt.assert_allclose(np.abs(new[0]), 0.001, atol=1e-8)
    npt.assert_allclose(np.abs(new[0]), np.abs(new[1]), atol=1e-10)
    npt.assert_array_equal(np.sign(new[0]), -np.sign(g))


def test_adam_preserves_namedtuple():
    rng = np.random.default_rng(0)
    p = random_params(rng, 2, 2, 1)
    new, _ = adam_step(p, p, AdamState.zeros_like(p))
    assert isinstance(new, MlpParams)


def test_mlp_fit_reduces_loss_on_linear_task():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((64, 4))
    Y = X @ rng.standard_normal((4, 2))
    m = MLPRegressor(hidden_units=32, epochs=400, batch_size=16, learning_rate=0.01).fit(X, Y)
    initial = np.mean(0.5 * np.sum(Y**2, 1))  # near-zero initial outputs
    assert m.loss_history_[-1] < 0.01 * max(initial, m.loss_history_[0])
    assert np.mean((m.predict(X) - Y) ** 2) < 0.01 * np.mean((Y - Y.mean(0)) ** 2)


def test_mlp_zero_epochs_returns_initialization():
    X, Y = np.ones((4, 3)), np.ones((4, 2))
    params, history = mlp_fit(X, Y, hidden_units=5, epochs=0, seed=3)
    assert history.size == 0
    npt.assert_array_equal(params.b1, 0.0)
    limit = np.sqrt(6.0 / (3 + 5))
    assert np.abs(params.W1).max() <= limit


def test_mlp_same_seed_bit_identical():
    rng = np.random.default_rng(13)
    X, Y = rng.standard_normal((50, 5)), rng.standard_normal((50, 2))
    a = MLPRegressor(hidden_units=8, epochs=5, batch_size=16, dropout_rate=0.3, random_state=7).fit(X, Y)
    b = MLPRegressor(hidden_units=8, epochs=5, batch_size=16, dropout_rate=0.3, random_state=7).fit(X, Y)
    for x, y in zip(a.params_, b.params_):
        assert x.tobytes() == y.tobytes()
    c = MLPRegressor(hidden_units=8, epochs=5, batch_size=16, dropout_rate=0.3, random_state=8).fit(X, Y)
    assert not np.array_equal(a.params_.W1, c.params_.W1)


def test_mlp_non_finite_loss_aborts():
    X = np.full((4, 2), 1e300)
    Y = np.full((4, 1), 1e300)
    with pytest.raises(TrainingError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mlp_fit(X, Y, hidden_units=3, epochs=2)


# -- shared estimator contract ---------------------------------------------

ALL_KINDS = ["knn", "linear", "ridge", "kernel_ridge", "mlp", "mlp_dropout"]


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_every_model_predicts_target_dimension(kind):
    rng = np.random.default_rng(14)
    X, Y = rng.standard_normal((40, 6)), rng.standard_normal((40, 3))
    small = MlpSettings(hidden_units=10, epochs=3, dropout_rate=0.3 if kind == "mlp_dropout" else 0.0)
    spec = RegressorSpec.default(kind, mlp=small)
    m = fit(spec, X, Y)
    out = predict(m, rng.standard_normal((5, 6)))
    assert out.shape == (5, 3)
    assert np.all(np.isfinite(out))
    with pytest.raises(DimensionError):
        m.predict(np.zeros((2, 5)))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_make_regressor_is_clonable(kind):
    est = make_regressor(RegressorSpec.default(kind))
    clone(est).get_params()


def test_make_regressor_defaults():
    assert make_regressor(RegressorSpec.default("knn")).n_neighbors == 5
    assert make_regressor(RegressorSpec.default("ridge")).alpha == 1.0
    kr = make_regressor(RegressorSpec.default("kernel_ridge"))
    assert (kr.alpha, kr.degree, kr.coef0, kr.gamma) == (0.005, 2, 10.0, "auto")
    mlp = make_regressor(RegressorSpec.default("mlp"))
    assert (mlp.hidden_units, mlp.epochs, mlp.batch_size, mlp.learning_rate, mlp.dropout_rate) == (
        300, 100, 128, 0.001, 0.0)
    assert make_regressor(RegressorSpec.default("mlp_dropout")).dropout_rate == 0.3


def test_one_dimensional_targets_round_trip():
    m = Ridge(alpha=0.0).fit([[0.0], [1.0], [2.0]], [1.0, 3.0, 5.0])
    assert m.predict([[3.0]]).shape == (1,)
