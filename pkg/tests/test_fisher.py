import numpy as np
import pytest

from chita import (LeastSquaresOracle, ToyMLP, build_fisher_matrix, estimate_alpha_trace, hard_threshold,
                   make_blobs, per_sample_gradient, train_toy_mlp, true_loss)
from chita.fisher import IndeterminateCurvature, hutchinson_samples, sample_batches


@pytest.fixture(scope="module")
def small():
    X, y = make_blobs(N=60, d=5, c=3, seed=2)
    return ToyMLP(X, y, hidden=7)


def fd_grad(f, w, h):
    out = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        out[i] = (f(w + e) - f(w - e)) / (2 * h)
    return out


def test_layer_map_and_roundtrip(small):
    assert small.p == 7 * 5 + 7 + 3 * 7 + 3 == sum(small.layer_sizes)
    w = np.random.default_rng(0).standard_normal(small.p)
    np.testing.assert_array_equal(small.flatten(*small.unflatten(w)), w)


def test_default_toy_size():
    X, y = make_blobs()
    model = ToyMLP(X, y)
    assert model.widths == (32, 64, 10) and model.p == 2762


def test_zero_weights_closed_form(small):
    g = per_sample_gradient(small, np.zeros(small.p), 4)
    c = small.n_classes
    expected_b2 = np.full(c, 1.0 / c)
    expected_b2[small.y[4]] -= 1.0
    np.testing.assert_allclose(g[-c:], expected_b2, atol=1e-15)
    assert np.all(g[:-c] == 0)


def test_per_sample_gradient_fd_seed21(small):
    rng = np.random.default_rng(21)
    w = rng.standard_normal(small.p)
    i = int(rng.integers(small.N))
    g = per_sample_gradient(small, w, i)
    fd = fd_grad(lambda v: small.loss(v, [i]), w, 1e-5)
    assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) < 1e-5


def test_backprop_50_probes(small):
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = rng.standard_normal(small.p)
        i = int(rng.integers(small.N))
        g = per_sample_gradient(small, w, i)
        v = rng.standard_normal(small.p)
        h = 1e-5
        fd = (small.loss(w + h * v, [i]) - small.loss(w - h * v, [i])) / (2 * h)
        assert abs(fd - g @ v) <= 1e-5 * max(abs(g @ v), np.linalg.norm(g) * np.linalg.norm(v) * 1e-3)


def test_batch_gradient_matches_loss(small):
    w = np.random.default_rng(7).standard_normal(small.p)
    idx = np.arange(0, 60, 3)
    g = small.gradient(w, idx)
    fd = fd_grad(lambda v: small.loss(v, idx), w, 1e-5)
    assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) < 1e-5
    np.testing.assert_allclose(small.per_sample_gradients(w, idx).mean(axis=0), g, atol=1e-14)


def test_identical_samples(small):
    X = np.vstack([small.X[3], small.X[3]])
    model = ToyMLP(X, np.array([small.y[3], small.y[3]]), hidden=7)
    w = np.random.default_rng(1).standard_normal(model.p)
    np.testing.assert_array_equal(per_sample_gradient(model, w, 0), per_sample_gradient(model, w, 1))


def test_shape_errors(small):
    with pytest.raises(ValueError):
        small.loss(np.zeros(small.p + 1))
    with pytest.raises(ValueError):
        ToyMLP(np.zeros((3, 2)), np.zeros(4, dtype=int))


def test_sample_batches():
    b = sample_batches(20, 4, 5, seed=0)
    assert b.shape == (4, 5) and len(set(b.ravel())) == 20
    with pytest.raises(ValueError):
        sample_batches(10, 4, 3, seed=0)


def test_fisher_m1(small):
    w = np.random.default_rng(2).standard_normal(small.p)
    A, alpha = build_fisher_matrix(small, w, 10, 1, seed=4)
    rows = sample_batches(small.N, 10, 1, 4).ravel()
    assert alpha == 1.0
    for r, i in zip(A.data, rows):
        # batched and single-sample products may round differently in BLAS
        np.testing.assert_allclose(r, per_sample_gradient(small, w, i), rtol=1e-13, atol=1e-18)


def test_fisher_hand_assembled():
    X, y = make_blobs(N=4, d=3, c=2, seed=9)
    y = np.array([0, 1, 0, 1])
    model = ToyMLP(X, y, hidden=4)
    w = np.random.default_rng(3).standard_normal(model.p)
    A, alpha = build_fisher_matrix(model, w, 2, 2, seed=11)
    batches = sample_batches(4, 2, 2, 11)
    assert alpha == 0.5
    for r, (i, j) in zip(A.data, batches):
        ref = (per_sample_gradient(model, w, i) + per_sample_gradient(model, w, j)) / 2
        np.testing.assert_allclose(r, ref, rtol=0, atol=1e-12)


def test_fisher_rows_average_to_gradient(small):
    w = np.random.default_rng(4).standard_normal(small.p)
    A, _ = build_fisher_matrix(small, w, 12, 4, seed=0)
    idx = sample_batches(small.N, 12, 4, 0).ravel()
    np.testing.assert_allclose(A.data.mean(axis=0), small.gradient(w, idx), atol=1e-12)


def test_minibatch_linearity(small):
    w = np.random.default_rng(6).standard_normal(small.p)
    A4, _ = build_fisher_matrix(small, w, 5, 4, seed=2)
    for r, batch in zip(A4.data, sample_batches(small.N, 5, 4, 2)):
        np.testing.assert_allclose(r, small.per_sample_gradients(w, batch).mean(axis=0), rtol=1e-14, atol=1e-15)


def test_low_rank_identity(small):
    w = np.random.default_rng(8).standard_normal(small.p)
    A = build_fisher_matrix(small, w, 20, 1, seed=1)[0].data
    v = np.random.default_rng(9).standard_normal(small.p)
    lhs = A.T @ (A @ v) / 20
    rhs = sum(row * (row @ v) for row in A) / 20
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def diagonal_quadratic(seed, N=400, p=6):
    """Least squares whose Hessian X^T X / N is exactly diagonal."""
    rng = np.random.default_rng(seed)
    scale = rng.uniform(0.5, 3.0, p)
    X = np.zeros((N, p))
    X[np.arange(N), np.arange(N) % p] = 1.0
    X *= scale * np.sqrt(p)
    w_true = rng.standard_normal(p)
    y = X @ w_true + rng.standard_normal(N)
    return LeastSquaresOracle(X, y), w_true


def test_trace_denominator_diagonal():
    oracle, w = diagonal_quadratic(0)
    est = np.mean(hutchinson_samples(oracle, w, 64, seed=0))
    assert est == pytest.approx(oracle.hessian_trace(), rel=0.05)


def test_alpha_near_one_for_single_sample_rows():
    for seed in range(5):
        oracle, w = diagonal_quadratic(seed)
        A, _ = build_fisher_matrix(oracle, w, 200, 1, seed)
        alpha = estimate_alpha_trace(oracle, A, w, probes=32, seed=seed)
        assert 0.5 <= alpha <= 2.0


def test_more_probes_less_spread():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((200, 10)) @ rng.standard_normal((10, 10))
    oracle = LeastSquaresOracle(X, rng.standard_normal(200))
    w = np.zeros(10)
    small_ = [np.mean(hutchinson_samples(oracle, w, 32, s)) for s in range(10)]
    large = [np.mean(hutchinson_samples(oracle, w, 128, s)) for s in range(10)]
    assert np.std(large) < np.std(small_)


def test_indeterminate_curvature():
    class Concave:
        N, p = 1, 3

        def gradient(self, w, idx=None):
            return -w

    with pytest.raises(IndeterminateCurvature):
        estimate_alpha_trace(Concave(), np.ones((2, 3)), np.zeros(3), probes=4)


@pytest.fixture(scope="module")
def trained():
    X, y = make_blobs(seed=0)
    model = ToyMLP(X, y)
    return model, train_toy_mlp(model, seed=0)


def test_training_helps(trained):
    model, w = trained
    assert true_loss(model, w) <= true_loss(model, np.zeros(model.p))
    assert np.linalg.norm(model.gradient(w)) > 0


def test_loss_permutation_invariant(trained):
    model, w = trained
    perm = np.random.default_rng(0).permutation(model.N)
    shuffled = ToyMLP(model.X[perm], model.y[perm], model.hidden)
    assert true_loss(shuffled, w) == pytest.approx(true_loss(model, w), rel=1e-12)


def test_magnitude_pruning_hurts(trained):
    model, w = trained
    assert true_loss(model, hard_threshold(w, model.p // 2)) >= true_loss(model, w)
