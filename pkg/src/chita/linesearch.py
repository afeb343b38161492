"""Stepsize selection for IHT on the piecewise-quadratic ``g(tau)``.

``g(tau) = Q(P_k(w - tau * grad))`` is quadratic between consecutive support
changes.  The first change point has a closed form, the minimizer on the first
piece is a Cauchy step restricted to the current support, and beyond the first
piece the step is grown geometrically while ``g`` keeps decreasing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, _apply, gradient, objective
from .kernels import hard_threshold, topk_indices

__all__ = [
    "StepsizeResult",
    "first_breakpoint",
    "first_piece_minimizer",
    "search_stepsize",
    "line_objective",
]

# Back-off applied to tau_c when the tie at the breakpoint resolves against
# the current support (see search_stepsize).
_TIE_BACKOFF = 1e-10


@dataclass(frozen=True)
class StepsizeResult:
    step: float
    tau_c: float
    tau_m: float
    expansions: int = 0


def first_breakpoint(w, grad, k: int) -> float:
    """Largest ``tau`` for which ``P_k(w - t*grad)`` keeps the support of
    ``P_k(w)`` for every ``t`` in ``[0, tau]``.

    With ``S = topk_indices(w, k)`` and ``M = max_{j not in S} |grad_j|``, an
    in-support coordinate shrinking toward zero (``w_i grad_i > 0``) is
    overtaken at ``|w_i| / (M + |grad_i|)``; one that grows, or sits at zero,
    is overtaken at ``|w_i| / (M - |grad_i|)`` when ``M > |grad_i|``.
    Non-positive denominators contribute ``+inf``, and so does a shrinking
    coordinate when ``M = 0`` (it only touches zero, where it ties).
    """
    w = np.asarray(w, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    S = topk_indices(w, k)
    if S.size == w.size:
        return np.inf
    off = np.ones(w.size, dtype=bool)
    off[S] = False
    M = float(np.max(np.abs(grad[off])))
    wS, gS = w[S], grad[S]
    shrinking = wS * gS > 0
    denom = np.where(shrinking, M + np.abs(gS), M - np.abs(gS))
    if M == 0.0:
        denom = np.where(shrinking, 0.0, denom)
    ok = denom > 0
    if not ok.any():
        return np.inf
    return float(np.min(np.abs(wS[ok]) / denom[ok]))


def first_piece_minimizer(inst: ProblemInstance, w, grad, k: int, tau_c: float) -> float:
    """Minimizer of ``g`` on ``[0, tau_c]``.

    On the first piece ``g(tau) = Q(w - tau d)`` with ``d`` the gradient
    restricted to ``S = topk_indices(w, k)``, so the minimizer is
    ``<d, grad> / (||A d||^2 + n lam ||d||^2)`` clipped to ``[0, tau_c]``.
    """
    return _first_piece(inst, w, grad, k, tau_c)[0]


def _first_piece(inst, w, grad, k, tau_c):
    """``(tau_m, A d)``."""
    S = topk_indices(w, k)
    grad = np.asarray(grad, dtype=np.float64)
    d = np.zeros(inst.p)
    d[S] = grad[S]
    num = float(d[S] @ d[S])
    Ad = _apply(inst.A, d, S)
    den = float(Ad @ Ad) + inst.ridge * num
    if den <= 0.0 or num == 0.0:
        return 0.0, Ad
    return float(min(max(num / den, 0.0), tau_c)), Ad


def line_objective(inst: ProblemInstance, w, grad, k: int, tau: float) -> float:
    """``g(tau) = Q(P_k(w - tau * grad))``."""
    x = hard_threshold(np.asarray(w) - tau * grad, k)
    return objective(inst, x, np.flatnonzero(x))


def _first_piece_value(inst: ProblemInstance, w, grad, S, tau: float) -> float:
    x = np.zeros(inst.p)
    x[S] = w[S] - tau * grad[S]
    return objective(inst, x, S)


def search_stepsize(inst: ProblemInstance, w, k: int, gamma: float = 2.0,
                    max_expansions: int = 30, grad: np.ndarray | None = None) -> StepsizeResult:
    """Pick the IHT stepsize.

    If the first-piece minimizer lies strictly inside the first piece it is
    returned.  Otherwise ``g`` decreases over the whole first piece and the
    step is multiplied by ``gamma`` starting from ``tau_c`` for as long as
    ``g`` strictly decreases (at most ``max_expansions`` times).
    """
    return _search(inst, w, k, gamma, max_expansions, grad)[0]


def _search(inst, w, k, gamma, max_expansions, grad):
    """:func:`search_stepsize` plus ``A d`` for the first-piece direction."""
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    w = np.asarray(w, dtype=np.float64)
    if grad is None:
        grad = gradient(inst, w)
    tau_c = first_breakpoint(w, grad, k)
    tau_m, Ad = _first_piece(inst, w, grad, k, tau_c)
    if tau_m < tau_c or tau_m == 0.0:
        # Interior minimizer, or no descent direction inside the support.
        if tau_m == 0.0 and tau_c == 0.0:
            return _expand_from_zero(inst, w, grad, k, gamma, max_expansions), Ad
        return StepsizeResult(tau_m, tau_c, tau_m, 0), Ad

    tau = tau_c
    g_best = line_objective(inst, w, grad, k, tau)
    S = topk_indices(w, k)
    left = _first_piece_value(inst, w, grad, S, tau)
    if g_best > left:
        # The tie at tau_c was resolved toward the new coordinate and that
        # side is worse; stay on the first piece.
        tau = tau_c * (1.0 - _TIE_BACKOFF)
        g_best = line_objective(inst, w, grad, k, tau)
    expansions = 0
    while expansions < max_expansions:
        g_next = line_objective(inst, w, grad, k, gamma * tau)
        if not g_next < g_best:
            break
        g_best = g_next
        tau *= gamma
        expansions += 1
    return StepsizeResult(tau, tau_c, tau_m, expansions), Ad


def _expand_from_zero(inst, w, grad, k, gamma, max_expansions) -> StepsizeResult:
    """``tau_c = 0``: an unused slot of the support is overtaken at once.

    Seed the geometric search with the Cauchy step of the full gradient and
    accept it only if it decreases the objective.
    """
    Ag = _apply(inst.A, grad)
    gg = float(grad @ grad)
    den = float(Ag @ Ag) + inst.ridge * gg
    if gg == 0.0 or den <= 0.0:
        return StepsizeResult(0.0, 0.0, 0.0, 0)
    g0 = objective(inst, w)
    tau = gg / den
    g_best = line_objective(inst, w, grad, k, tau)
    if not g_best < g0:
        return StepsizeResult(0.0, 0.0, 0.0, 0)
    expansions = 0
    while expansions < max_expansions:
        g_next = line_objective(inst, w, grad, k, gamma * tau)
        if not g_next < g_best:
            break
        g_best = g_next
        tau *= gamma
        expansions += 1
    return StepsizeResult(tau, 0.0, 0.0, expansions)
