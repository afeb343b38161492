import numpy as np
import pytest

from chita import ToyMLP, chita_cd, build_problem, build_fisher_matrix, make_blobs, make_schedule, train_toy_mlp
from chita.multistage import chita_pp, stage_budget, stage_seed


def test_linear_midpoint():
    s = make_schedule("linear", 0.2, 0.9, 15)
    assert s.values[7] == pytest.approx(0.55)
    assert s.values[0] == 0.2 and s.values[-1] == 0.9


def test_constant():
    assert make_schedule("constant", 0.5, 0.9, 15).values == (0.9,) * 15


def test_exponential_densities():
    s = make_schedule("exponential", 0.2, 0.9, 15)
    dens = 1 - np.array(s.values)
    ref = 0.8 * 0.125 ** (np.arange(15) / 14)
    np.testing.assert_allclose(dens, ref, rtol=1e-12)
    assert s.values[-1] == 0.9
    inc = np.diff(s.values)
    assert np.all(inc > 0) and np.all(np.diff(inc) < 0)


def test_single_stage_schedule():
    assert make_schedule("exponential", 0.3, 0.9, 1).values == (0.9,)


@pytest.mark.parametrize("args", [("cubic", 0.2, 0.9, 3), ("linear", 0.2, 0.9, 0), ("linear", 0.95, 0.9, 3),
                                  ("linear", 0.2, 1.0, 3)])
def test_schedule_rejects(args):
    with pytest.raises(ValueError):
        make_schedule(*args)


def test_budget_rounding():
    assert stage_budget(0.9, 10) == 1
    assert stage_budget(0.95, 2762) == 138


@pytest.fixture(scope="module")
def toy():
    X, y = make_blobs(N=400, d=8, c=3, seed=0)
    model = ToyMLP(X, y, hidden=12)
    return model, train_toy_mlp(model, epochs=10, seed=0)


def test_one_stage_equals_single_solve(toy):
    model, wbar = toy
    sched = make_schedule("constant", 0.8, 0.8, 1)
    got = chita_pp(model, wbar, sched, n=50, m=2, lam=0.1, seed=3)
    A, alpha = build_fisher_matrix(model, wbar, 50, 2, stage_seed(3, 0))
    k = stage_budget(0.8, model.p)
    ref = chita_cd(build_problem(A, wbar, 0.1, k, alpha), wbar, k)
    np.testing.assert_array_equal(got.weights, ref.weights)


@pytest.mark.parametrize("solver", ["chita-cd", "blockwise"])
def test_stage_feasibility_and_determinism(toy, solver):
    model, wbar = toy
    sched = make_schedule("exponential", 0.3, 0.9, 4)
    kw = dict(n=60, m=1, lam=0.1, solver=solver, seed=1, layer_sizes=model.layer_sizes, block_size=40)
    a = chita_pp(model, wbar, sched, **kw)
    b = chita_pp(model, wbar, sched, **kw)
    budgets = sched.budgets(model.p)
    assert budgets == sorted(budgets, reverse=True)
    for st, kb in zip(a.stages, budgets):
        assert st.nnz <= kb
        h = np.array(st.history)
        assert np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1]))
    for x, y in zip(a.stages, b.stages):
        np.testing.assert_array_equal(x.weights, y.weights)


def test_callback_sees_every_stage(toy):
    model, wbar = toy
    seen = []
    chita_pp(model, wbar, make_schedule("linear", 0.3, 0.6, 3), 40, 1, 0.1,
             callback=lambda t, s: seen.append((t, s.nnz)))
    assert [t for t, _ in seen] == [0, 1, 2]


def test_errors(toy):
    model, wbar = toy
    with pytest.raises(ValueError):
        chita_pp(model, wbar, make_schedule("constant", 0.5, 0.5, 1), n=500, m=1)  # 500 > N = 400
    with pytest.raises(ValueError):
        chita_pp(model, wbar, make_schedule("constant", 0.5, 0.999, 1), n=20)  # k = 0
    with pytest.raises(ValueError):
        chita_pp(model, wbar, make_schedule("constant", 0.5, 0.5, 1), n=20, solver="magic")
