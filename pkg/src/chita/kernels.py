"""Hard thresholding, the IHT step and a Lipschitz bound for the gradient."""
from __future__ import annotations

import warnings

import numpy as np

from .core import ProblemInstance, gradient

__all__ = [
    "ConvergenceWarning",
    "topk_indices",
    "hard_threshold",
    "ht_step",
    "power_iteration",
    "lipschitz_upper",
]


class ConvergenceWarning(UserWarning):
    pass


def _check_k(k, size: int) -> int:
    if int(k) != k or not 1 <= k <= size:
        raise ValueError(f"k={k} out of range [1, {size}]")
    return int(k)


def topk_indices(x, k: int) -> np.ndarray:
    """Indices of the ``k`` largest ``|x_i|``, ascending.

    Ties at the threshold magnitude go to the smaller index, so the result is
    deterministic.  O(p) via a partial partition.
    """
    x = np.asarray(x)
    k = _check_k(k, x.size)
    mag = np.abs(x)
    if k == x.size:
        return np.arange(x.size)
    thresh = np.partition(mag, x.size - k)[x.size - k]
    above = np.flatnonzero(mag > thresh)
    need = k - above.size
    if need == 0:
        return above
    ties = np.flatnonzero(mag == thresh)[:need]
    return np.union1d(above, ties)


def hard_threshold(x, k: int) -> np.ndarray:
    """P_k(x): keep the top-k magnitudes, zero the rest."""
    x = np.asarray(x, dtype=np.float64)
    keep = topk_indices(x, k)
    y = np.zeros_like(x)
    y[keep] = x[keep]
    return y


def ht_step(inst: ProblemInstance, w, k: int, step: float, grad: np.ndarray | None = None) -> np.ndarray:
    """One IHT update ``P_k(w - step * grad Q(w))``."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if grad is None:
        grad = gradient(inst, w)
    return hard_threshold(np.asarray(w, dtype=np.float64) - step * grad, k)


def power_iteration(A: np.ndarray, tol: float = 1e-4, max_iter: int = 500, seed: int = 0):
    """Largest eigenvalue of ``A^T A`` by alternating products with A and A^T.

    Returns ``(sigma_max**2, converged, iterations)``.  The estimate is a
    Rayleigh quotient, hence never above the true value.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        u = A @ v
        new = float(u @ u)
        v = A.T @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0, True, it
        v /= nv
        if abs(new - est) <= tol * new:
            return new, True, it
        est = new
    return est, False, max_iter


def lipschitz_upper(inst: ProblemInstance, tol: float = 1e-4, max_iter: int = 500, seed: int = 0) -> float:
    """Upper estimate of ``L = n lam + ||A||_2^2``.

    The power-iteration estimate of ``||A||_2^2`` is inflated by ``1 + tol``.
    A :class:`ConvergenceWarning` is issued if the cap is reached; the best
    iterate is still used.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sig2, ok, _ = power_iteration(inst.A, tol=tol, max_iter=max_iter, seed=seed)
    if not ok:
        warnings.warn(f"power iteration did not reach tol={tol} in {max_iter} iterations",
                      ConvergenceWarning, stacklevel=2)
    return inst.ridge + sig2 * (1.0 + tol)
