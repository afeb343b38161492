import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from chita import build_problem, gradient, hard_threshold, ht_step, lipschitz_upper, objective, topk_indices
from chita.kernels import ConvergenceWarning, power_iteration

from conftest import feasible_point, make_instance


def sort_topk(x, k):
    order = sorted(range(len(x)), key=lambda i: (-abs(x[i]), i))
    return sorted(order[:k])


def test_topk_basic():
    assert list(topk_indices(np.array([3.0, -1.0, 2.0, 0.0]), 2)) == [0, 2]


def test_topk_ties_prefer_smaller_index():
    assert list(topk_indices(np.array([1.0, -1.0, 1.0]), 2)) == [0, 1]


def test_topk_matches_sort():
    x = np.random.default_rng(3).standard_normal(50)
    assert list(topk_indices(x, 7)) == sort_topk(x, 7)


@settings(max_examples=200, deadline=None)
@given(x=arrays(np.float64, st.integers(1, 30), elements=st.sampled_from([0.0, 1.0, -1.0, 2.0, -2.5, 3.0])),
       data=st.data())
def test_topk_matches_sort_with_ties(x, data):
    k = data.draw(st.integers(1, x.size))
    assert list(topk_indices(x, k)) == sort_topk(x, k)


@pytest.mark.parametrize("k", [0, 5])
def test_topk_rejects_bad_k(k):
    with pytest.raises(ValueError):
        topk_indices(np.ones(4), k)


def test_hard_threshold_examples():
    np.testing.assert_array_equal(hard_threshold(np.array([3.0, -1.0, 2.0, 0.0]), 2), [3, 0, 2, 0])
    x = np.random.default_rng(0).standard_normal(6)
    np.testing.assert_array_equal(hard_threshold(x, 6), x)


def test_hard_threshold_residual_is_smallest_mass():
    x = np.random.default_rng(4).standard_normal(100)
    y = hard_threshold(x, 10)
    assert np.sum((y - x) ** 2) == pytest.approx(np.sum(np.sort(x ** 2)[:90]), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 31), p=st.integers(2, 8), data=st.data())
def test_hard_threshold_is_nearest_sparse_point(seed, p, data):
    k = data.draw(st.integers(1, p))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(p)
    y = hard_threshold(x, k)
    np.testing.assert_array_equal(hard_threshold(y, k), y)
    for _ in range(20):
        z = np.zeros(p)
        z[rng.choice(p, k, replace=False)] = rng.standard_normal(k)
        assert np.linalg.norm(y - x) <= np.linalg.norm(z - x) + 1e-12


def test_ht_step_zero_step_keeps_w():
    inst = make_instance(5, 12, 4, seed=5)
    w = feasible_point(12, 4, 1)
    np.testing.assert_array_equal(ht_step(inst, w, 4, 0.0), w)


def test_ht_step_pure_ridge():
    inst = build_problem(np.zeros((1, 5)), np.zeros(5), 1.0, 2)
    w = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    np.testing.assert_array_equal(ht_step(inst, w, 2, 1.0), np.zeros(5))


def test_ht_step_composes_oracles():
    inst = make_instance(5, 12, 4, seed=5)
    w = np.random.default_rng(8).standard_normal(12)
    z = w - 0.1 * gradient(inst, w)
    ref = np.zeros(12)
    keep = sort_topk(z, 4)
    ref[keep] = z[keep]
    np.testing.assert_allclose(ht_step(inst, w, 4, 0.1), ref, rtol=0, atol=1e-14)


def test_lipschitz_diagonal():
    inst = build_problem(np.diag([3.0, 1.0]), np.zeros(2), 0.0, 1)
    assert lipschitz_upper(inst, 1e-6) == pytest.approx(9.0, rel=1e-5)


def test_lipschitz_zero_matrix():
    inst = build_problem(np.zeros((4, 3)), np.zeros(3), 2.0, 1)
    assert lipschitz_upper(inst) == 8.0


def test_lipschitz_against_svd():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((8, 20))
    inst = build_problem(A, np.zeros(20), 0.1, 3)
    tol = 1e-4
    ref = 8 * 0.1 + np.linalg.svd(A, compute_uv=False)[0] ** 2
    L = lipschitz_upper(inst, tol)
    assert L >= ref * (1 - 1e-12)
    assert abs(L - ref) / ref <= 2 * tol


def test_power_iteration_reports_non_convergence():
    rng = np.random.default_rng(0)
    # two nearly equal top singular values converge slowly
    U, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    V, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    A = U @ np.diag(np.r_[1.0, 1.0 - 1e-9, np.full(28, 0.5)]) @ V.T
    _, converged, iters = power_iteration(A, tol=1e-15, max_iter=3)
    assert not converged and iters == 3
    inst = build_problem(A, np.zeros(30), 0.0, 1)
    with pytest.warns(ConvergenceWarning):
        lipschitz_upper(inst, tol=1e-15, max_iter=3)


def test_constant_step_descent():
    for seed in range(100):
        inst = make_instance(6, 15, 4, 0.2, seed)
        w = feasible_point(15, 4, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            L = lipschitz_upper(inst)
        assert objective(inst, ht_step(inst, w, 4, 1 / L)) <= objective(inst, w) + 1e-12
