import numpy as np
import pytest

from chita import build_problem


def make_instance(n, p, k, lam=0.1, seed=0, alpha=1.0):
    rng = np.random.default_rng(seed)
    return build_problem(rng.standard_normal((n, p)), rng.standard_normal(p), lam, k, alpha)


def feasible_point(p, k, seed):
    rng = np.random.default_rng(seed)
    w = np.zeros(p)
    w[rng.choice(p, k, replace=False)] = rng.standard_normal(k)
    return w


def naive_objective(inst, w):
    """Term-by-term sums, no vectorized linear algebra."""
    n, p = inst.A.shape
    total = 0.0
    for r in range(n):
        acc = inst.b[r]
        for j in range(p):
            acc -= inst.A[r, j] * w[j]
        total += 0.5 * acc * acc
    for j in range(p):
        total += 0.5 * n * inst.lam * (w[j] - inst.wbar[j]) ** 2
    return total


@pytest.fixture
def inst_factory():
    return make_instance


# acceptance summary ---------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def record():
    """``record(number, passed, detail)`` stores one acceptance outcome."""
    def _record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
