"""Self-checks against independent numerical oracles.

Each suite returns a list of :class:`Check` rows.  The oracles deliberately
avoid the code paths they check: finite differences for gradients, grid scans
for breakpoints, dense factorizations for the Woodbury solve and exhaustive
enumeration for global optimality.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .backsolve import chita_bso, woodbury_solve
from .core import build_problem, gradient, objective
from .kernels import hard_threshold, topk_indices
from .linesearch import first_breakpoint

__all__ = ["Check", "random_instance", "diagonal_instance", "SUITES", "run_suite",
           "fd_gradient_error", "breakpoint_violations", "woodbury_error", "exhaustive_optimum",
           "bruteforce_gaps"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    bound: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3e} (bound {self.bound:.1e})"


def random_instance(n: int, p: int, k: int, lam: float = 0.1, seed: int = 0, alpha: float = 1.0):
    """Standard-normal ``A`` and ``wbar``."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    wbar = rng.standard_normal(p)
    return build_problem(A, wbar, lam, k, alpha)


def diagonal_instance(p: int, k: int, lam: float = 0.1, seed: int = 0):
    """``A = diag(d)`` with positive ``d``; the problem separates per coordinate."""
    rng = np.random.default_rng(seed)
    A = np.diag(rng.uniform(0.5, 2.0, p))
    wbar = rng.standard_normal(p)
    return build_problem(A, wbar, lam, k)


def fd_gradient_error(inst, points: int = 20, seed: int = 0, h: float = 1e-6) -> float:
    """Max relative error of the analytic gradient against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        w = rng.standard_normal(inst.p)
        g = gradient(inst, w)
        fd = np.empty(inst.p)
        for i in range(inst.p):
            e = np.zeros(inst.p)
            e[i] = h
            fd[i] = (objective(inst, w + e) - objective(inst, w - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - g)) / max(np.max(np.abs(g)), 1.0)))
    return worst


def breakpoint_violations(inst, w, grid: int = 64) -> int:
    """For k-sparse ``w``: grid points in ``[0, 0.999 tau_c]`` where the top-k support differs from
    the support at ``tau = 0``."""
    g = gradient(inst, w)
    tau_c = first_breakpoint(w, g, inst.k)
    if not np.isfinite(tau_c):
        tau_c = 1.0
    ref = topk_indices(w, inst.k)
    bad = 0
    for tau in np.linspace(0.0, 0.999 * tau_c, grid):
        if not np.array_equal(topk_indices(w - tau * g, inst.k), ref):
            bad += 1
    return bad


def woodbury_error(inst, S) -> float:
    """Relative gap between the Woodbury solve and a dense ``|S| x |S|`` solve."""
    AS = inst.A[:, S]
    ridge = inst.ridge
    rhs = ridge * inst.wbar[S] + AS.T @ inst.b
    dense = linalg.solve(ridge * np.eye(len(S)) + AS.T @ AS, rhs)
    wood = woodbury_solve(AS, inst.wbar[S], inst.b, ridge)
    return float(np.linalg.norm(wood - dense) / max(np.linalg.norm(dense), 1e-300))


def exhaustive_optimum(inst, k: int | None = None) -> tuple:
    """Best objective over all ``C(p, k)`` supports, each solved by a dense
    normal-equation solve.  Returns ``(objective, support)``."""
    k = inst.k if k is None else k
    best, arg = np.inf, None
    G = inst.A.T @ inst.A
    Ab = inst.A.T @ inst.b
    for S in itertools.combinations(range(inst.p), k):
        S = list(S)
        M = G[np.ix_(S, S)] + inst.ridge * np.eye(k)
        wS = np.linalg.lstsq(M, inst.ridge * inst.wbar[S] + Ab[S], rcond=None)[0]
        w = np.zeros(inst.p)
        w[S] = wS
        q = objective(inst, w)
        if q < best:
            best, arg = q, tuple(S)
    return best, arg


def bruteforce_gaps(instances: int = 20, seed: int = 0, n: int = 6, p: int = 12, k: int = 4,
                    lam: float = 0.1) -> np.ndarray:
    """Relative gaps of chita_bso (started at ``wbar``) to the enumerated optimum."""
    gaps = []
    for j in range(instances):
        inst = random_instance(n, p, k, lam, seed + j)
        opt, _ = exhaustive_optimum(inst)
        q = chita_bso(inst, inst.wbar, k).objective
        gaps.append((q - opt) / abs(opt))
    return np.asarray(gaps)


def _suite_gradients(seed):
    worst = max(fd_gradient_error(random_instance(8, 30, 5, 0.3, seed + j), 20, seed + j)
                for j in range(10))
    return [Check("gradient vs central differences, max rel err", worst < 1e-6, worst, 1e-6)]


def _suite_linesearch(seed):
    bad = 0
    for j in range(100):
        inst = random_instance(6, 20, 5, 0.1, seed + j)
        w0 = np.random.default_rng(seed + j).standard_normal(inst.p)
        bad += breakpoint_violations(inst, hard_threshold(w0, inst.k))
    return [Check("support changes below the first breakpoint", bad == 0, bad, 0)]


def _suite_woodbury(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for j in range(50):
        inst = random_instance(int(rng.integers(5, 31)), 60, 5, float(rng.uniform(0.01, 1.0)), seed + j)
        S = np.sort(rng.choice(inst.p, int(rng.integers(1, 41)), replace=False))
        worst = max(worst, woodbury_error(inst, S))
    return [Check("Woodbury vs dense restricted solve, max rel err", worst <= 1e-8, worst, 1e-8)]


def _suite_bruteforce(seed):
    gaps = bruteforce_gaps(20, seed)
    frac = float(np.mean(gaps <= 0.05))
    diag = 0.0
    for j in range(10):
        inst = diagonal_instance(12, 4, 0.1, seed + j)
        opt, _ = exhaustive_optimum(inst)
        diag = max(diag, (chita_bso(inst, inst.wbar, 4).objective - opt) / abs(opt))
    return [
        Check("fraction of random instances within 5% of optimum", frac >= 0.8, frac, 0.8),
        Check("diagonal instances, max rel gap", diag <= 1e-12, diag, 1e-12),
    ]


SUITES = {
    "gradients": _suite_gradients,
    "linesearch": _suite_linesearch,
    "woodbury": _suite_woodbury,
    "bruteforce": _suite_bruteforce,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name](seed)
