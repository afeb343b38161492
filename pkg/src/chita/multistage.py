"""Multi-stage pruning: re-linearize at the current weights and tighten the
sparsity budget stage by stage, without any retraining in between."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activeset import chita_cd, init_active_set
from .blockwise import allocate_sparsity, partition_layers, solve_blockwise
from .core import SparseSolution, build_problem
from .fisher import GradientOracle, build_fisher_matrix
from .solver_iht import SolverConfig

__all__ = ["SparsitySchedule", "make_schedule", "stage_budget", "stage_seed", "chita_pp", "SOLVERS"]

KINDS = ("exponential", "linear", "constant")
SOLVERS = ("chita-cd", "blockwise")


@dataclass(frozen=True)
class SparsitySchedule:
    kind: str
    tau_first: float
    tau_final: float
    stages: int
    values: tuple

    def __len__(self) -> int:
        return self.stages

    def budgets(self, p: int) -> list:
        return [stage_budget(t, p) for t in self.values]


def make_schedule(kind: str, tau_first: float, tau_final: float, f: int) -> SparsitySchedule:
    """Stage sparsities ``tau_1 <= ... <= tau_f = tau_final``.

    ``linear`` interpolates the sparsity, ``exponential`` interpolates the
    density ``1 - tau`` geometrically (so increments shrink as sparsity
    grows), ``constant`` repeats ``tau_final``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")
    if int(f) != f or f < 1:
        raise ValueError(f"number of stages must be a positive integer, got {f}")
    if not 0 < tau_final < 1:
        raise ValueError(f"tau_final must lie in (0, 1), got {tau_final}")
    if kind != "constant" and not 0 < tau_first <= tau_final:
        raise ValueError(f"need 0 < tau_first <= tau_final, got {tau_first}, {tau_final}")
    f = int(f)
    t = np.arange(f) / (f - 1) if f > 1 else np.ones(1)
    if kind == "constant":
        vals = np.full(f, float(tau_final))
    elif kind == "linear":
        vals = tau_first + t * (tau_final - tau_first)
    else:
        d1, df = 1.0 - tau_first, 1.0 - tau_final
        vals = 1.0 - d1 * (df / d1) ** t
    vals[-1] = tau_final
    return SparsitySchedule(kind, float(tau_first), float(tau_final), f, tuple(float(v) for v in vals))


def stage_budget(tau: float, p: int) -> int:
    """``floor((1 - tau) p)``, robust to the round-off in ``1 - tau``."""
    return int(math.floor((1.0 - tau) * p + 1e-9))


def stage_seed(seed: int, t: int) -> int:
    """Seed for the mini-batch draw of stage ``t`` (0-based)."""
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def chita_pp(oracle: GradientOracle, wbar, schedule: SparsitySchedule, n: int, m: int = 1,
             lam: float = 1e-3, solver: str = "chita-cd", seed: int = 0,
             cfg: SolverConfig | None = None, *, active_mult: float = 2.0,
             layer_sizes=None, block_size: int = 10_000, t_ht: int | None = None,
             callback=None) -> SparseSolution:
    """Run one single-stage solve per schedule entry.

    Stage ``t`` draws ``n`` fresh mini-batches of size ``m`` (seeded by
    ``(seed, t)``), builds ``A`` at the previous stage's weights, anchors the
    ridge there, sets ``alpha = 1/m`` and ``k = floor((1 - tau_t) p)``.
    ``callback(t, solution)`` runs after each stage.  The result carries the
    per-stage solutions in ``stages``.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    cfg = cfg or SolverConfig()
    w = np.asarray(wbar, dtype=np.float64).copy()
    p = w.size
    stages = []
    sol = None
    for t, tau in enumerate(schedule.values):
        k = stage_budget(tau, p)
        if k < 1:
            raise ValueError(f"stage {t + 1}: sparsity {tau} leaves no weights (k = 0)")
        A, alpha = build_fisher_matrix(oracle, w, n, m, stage_seed(seed, t))
        if solver == "chita-cd":
            inst = build_problem(A, w, lam, k, alpha)
            sol = chita_cd(inst, w, k, cfg, init_active_set(w, k, active_mult), mult=active_mult)
        else:
            part = partition_layers(layer_sizes or [p], block_size)
            part = allocate_sparsity(w, k, part)
            sol = solve_blockwise(A, w, lam, alpha, part, t_ht or cfg.t_ht, cfg, mult=active_mult)
        stages.append(sol)
        if callback is not None:
            callback(t, sol)
        w = sol.weights
    return SparseSolution(sol.weights, sol.support, sol.objective, sol.history,
                          sum(s.n_iter for s in stages), tuple(stages))
