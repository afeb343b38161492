"""Reference pruners: magnitude, OBD saliency and constant-step IHT."""
from __future__ import annotations

import numpy as np

from .core import ProblemInstance, SparseSolution, gradient, objective
from .kernels import hard_threshold, lipschitz_upper, topk_indices

__all__ = ["magnitude_prune", "obd_scores", "obd_prune", "iht_constant_step"]

OBD_EPS = 1e-12


def magnitude_prune(wbar, k: int, inst: ProblemInstance | None = None) -> SparseSolution:
    """Keep the ``k`` largest-magnitude weights.

    The cached objective is Q under ``inst`` when given, otherwise NaN.
    """
    w = hard_threshold(wbar, k)
    q = objective(inst, w) if inst is not None else float("nan")
    return SparseSolution(w, np.flatnonzero(w), q)


def obd_scores(inst: ProblemInstance) -> np.ndarray:
    """Saliency ``wbar_i^2 / (2 H_ii + eps)`` with ``H_ii = ||A[:, i]||^2 / n``."""
    diag = np.einsum("ij,ij->j", inst.A, inst.A) / inst.n
    return inst.wbar ** 2 / (2.0 * diag + OBD_EPS)


def obd_prune(inst: ProblemInstance, k: int | None = None) -> SparseSolution:
    """Keep the ``k`` highest-saliency weights at their pre-trained values."""
    k = inst.k if k is None else k
    keep = topk_indices(obd_scores(inst), k)
    w = np.zeros(inst.p)
    w[keep] = inst.wbar[keep]
    return SparseSolution.from_weights(inst, w)


def iht_constant_step(inst: ProblemInstance, w0, k: int | None = None, iters: int = 100,
                      L: float | None = None) -> SparseSolution:
    """``iters`` IHT steps with the fixed step ``1 / L``."""
    k = inst.k if k is None else k
    L = lipschitz_upper(inst) if L is None else L
    w = hard_threshold(np.asarray(w0, dtype=np.float64), k)
    history = [objective(inst, w)]
    for _ in range(iters):
        w = hard_threshold(w - gradient(inst, w) / L, k)
        history.append(objective(inst, w))
    return SparseSolution(w, np.flatnonzero(w), history[-1], tuple(history), iters)
