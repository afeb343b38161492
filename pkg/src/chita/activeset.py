"""Active-set wrapper around IHT-CD.

IHT-CD runs on the columns of a working set; afterwards full-space HT steps
are probed for an improvement whose support leaves the working set.  If one
is found the working set absorbs its support and the loop repeats.
"""
from __future__ import annotations

import math

import numpy as np

from .core import ProblemInstance, SparseSolution, gradient, objective
from .kernels import hard_threshold, topk_indices
from .linesearch import search_stepsize
from .solver_iht import SolverConfig, iht_cd

__all__ = ["init_active_set", "probe_escape", "chita_cd"]


def init_active_set(w0, k: int, mult: float = 2.0) -> np.ndarray:
    """The ``ceil(mult * k)`` largest-magnitude coordinates of ``w0``."""
    w0 = np.asarray(w0)
    if int(k) != k or not 1 <= k <= w0.size:
        raise ValueError(f"k={k} out of range [1, {w0.size}]")
    if mult < 1:
        raise ValueError(f"mult must be at least 1, got {mult}")
    size = min(math.ceil(mult * k), w0.size)
    return topk_indices(w0, size)


def probe_escape(inst: ProblemInstance, w: np.ndarray, k: int, active: np.ndarray,
                 gamma: float = 2.0, ladder: int = 16):
    """Look for ``w' = HT(w, k, tau)`` with ``Q(w') < Q(w)`` and a support
    that is not contained in ``active``.

    Tries the line-search step first, then ``tau_c * gamma**j`` for
    ``j = 0..ladder``.  Returns ``(w', Q(w'))`` or ``None``.
    """
    inside = np.zeros(inst.p, dtype=bool)
    inside[active] = True
    if inside.all():
        return None
    q = objective(inst, w)
    grad = gradient(inst, w)
    res = search_stepsize(inst, w, k, gamma, grad=grad)
    base = res.tau_c
    if not np.isfinite(base):
        return None
    if base == 0.0:
        gg = float(grad @ grad)
        Ag = inst.A @ grad
        den = float(Ag @ Ag) + inst.ridge * gg
        if gg == 0.0 or den <= 0.0:
            return None
        base = gg / den
    steps = [res.step] + [base * gamma ** j for j in range(ladder + 1)]
    for tau in steps:
        if tau <= 0.0:
            continue
        cand = hard_threshold(w - tau * grad, k)
        supp = np.flatnonzero(cand)
        if inside[supp].all():
            continue
        q_cand = objective(inst, cand, supp)
        if q_cand < q:
            return cand, q_cand
    return None


def chita_cd(inst: ProblemInstance, w0, k: int | None = None, cfg: SolverConfig | None = None,
             active0=None, *, mult: float = 2.0, max_rounds: int = 20, ladder: int = 16,
             probe: bool = True, callback=None) -> SparseSolution:
    """IHT-CD restricted to a growing active set.

    ``active0`` defaults to :func:`init_active_set` of ``w0`` with ``mult``.
    ``history`` records the full-problem objective after each restricted
    solve and each accepted probe.
    """
    cfg = cfg or SolverConfig()
    k = inst.k if k is None else int(k)
    w = np.asarray(w0, dtype=np.float64)
    active = init_active_set(w, k, mult) if active0 is None else np.unique(np.asarray(active0, dtype=np.intp))
    if active.size < k:
        raise ValueError(f"active set has {active.size} indices, fewer than k={k}")

    history = []
    n_iter = 0
    best = None
    for _ in range(max_rounds):
        sub = inst.restrict(active)
        sub_cb = None
        if callback is not None:
            def sub_cb(ws, active=active):
                full = np.zeros(inst.p)
                full[active] = ws
                callback(full)
        sol = iht_cd(sub, w[active], k, cfg, callback=sub_cb)
        n_iter += sol.n_iter
        w = np.zeros(inst.p)
        w[active] = sol.weights
        q = objective(inst, w)
        history.append(q)
        best = (w, q)
        if not probe:
            break
        found = probe_escape(inst, w, k, active, cfg.gamma, ladder)
        if found is None:
            break
        w, q = found
        history.append(q)
        best = found
        active = np.union1d(active, np.flatnonzero(w))
    w, q = best
    return SparseSolution(w, np.flatnonzero(w), q, tuple(history), n_iter)
