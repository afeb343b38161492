"""Exact minimization of Q on a fixed support.

On a support ``S`` the problem is an unconstrained ridge regression with the
normal equations ``(n lam I + A_S^T A_S) w_S = n lam wbar_S + A_S^T b``.  With
``|S| >> n`` the Woodbury identity moves the solve to an n x n system::

    w_S = c / (n lam) - A_S^T (n lam I_n + A_S A_S^T)^{-1} A_S c / (n lam),
    c   = n lam wbar_S + A_S^T b.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .activeset import chita_cd
from .core import ProblemInstance, SparseSolution, objective
from .solver_iht import SolverConfig

__all__ = ["UnsupportedConfiguration", "woodbury_solve", "dense_solve", "restricted_exact_solve", "chita_bso"]

DENSE_FALLBACK_MAX = 2000


class UnsupportedConfiguration(ValueError):
    pass


def woodbury_solve(AS: np.ndarray, wbar_S: np.ndarray, b: np.ndarray, ridge: float) -> np.ndarray:
    """Restricted ridge solution through the n x n Woodbury system (ridge > 0)."""
    c = ridge * wbar_S + AS.T @ b
    K = AS @ AS.T
    K.flat[:: K.shape[0] + 1] += ridge
    cf = linalg.cho_factor(K, lower=True, check_finite=False)
    return (c - AS.T @ linalg.cho_solve(cf, AS @ c, check_finite=False)) / ridge


def dense_solve(AS: np.ndarray, wbar_S: np.ndarray, b: np.ndarray, ridge: float) -> np.ndarray:
    """Restricted solution from the |S| x |S| system.

    With ``ridge = 0`` this is the minimum-norm least-squares fit of ``b``.
    """
    if ridge == 0.0:
        return linalg.lstsq(AS, b, check_finite=False)[0]
    G = AS.T @ AS
    G.flat[:: G.shape[0] + 1] += ridge
    return linalg.solve(G, ridge * wbar_S + AS.T @ b, assume_a="pos", check_finite=False)


def restricted_exact_solve(inst: ProblemInstance, S) -> SparseSolution:
    """Minimizer of Q over vectors supported in ``S``."""
    S = np.unique(np.asarray(S, dtype=np.intp))
    if S.size == 0:
        raise ValueError("support must be non-empty")
    AS = inst.A[:, S]
    if inst.ridge > 0:
        wS = woodbury_solve(AS, inst.wbar[S], inst.b, inst.ridge)
    elif S.size <= DENSE_FALLBACK_MAX:
        wS = dense_solve(AS, inst.wbar[S], inst.b, 0.0)
    else:
        raise UnsupportedConfiguration(
            f"lambda = 0 with |S| = {S.size} > {DENSE_FALLBACK_MAX} is not supported")
    w = np.zeros(inst.p)
    w[S] = wS
    return SparseSolution(w, np.flatnonzero(w), objective(inst, w))


def chita_bso(inst: ProblemInstance, w0, k: int | None = None, t_ht: int = 5,
              cfg: SolverConfig | None = None, active0=None, **active_kw) -> SparseSolution:
    """Support discovery by active-set IHT (no CD), then an exact solve on it."""
    k = inst.k if k is None else int(k)
    cfg = (cfg or SolverConfig()).replace(t_ht=t_ht, t_cd=0)
    found = chita_cd(inst, w0, k, cfg, active0, **active_kw)
    if found.support.size == 0:
        return found
    exact = restricted_exact_solve(inst, found.support)
    # The exact minimizer on S is never worse; guard against round-off only.
    if exact.objective > found.objective:
        exact = found
    return SparseSolution(exact.weights, exact.support, exact.objective,
                          found.history + (exact.objective,), found.n_iter)
