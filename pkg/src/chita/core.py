"""Problem data for the l0-constrained ridge regression and exact evaluation.

The pruning problem is

    min_w  Q(w) = 1/2 ||b - A w||^2 + (n lam / 2) ||w - wbar||^2   s.t. ||w||_0 <= k

with ``b = A wbar - alpha * e``.  ``A`` stacks one gradient per row, so the
Hessian surrogate ``A^T A / n`` is never formed; everything below works with
matrix-vector products against ``A`` only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GradientMatrix",
    "ProblemInstance",
    "SparseSolution",
    "as_gradient_matrix",
    "build_problem",
    "objective",
    "gradient",
    "support_of",
]

# Rows per chunk when scanning A for non-finite entries (keeps the scan's
# boolean temporary small for very wide matrices).
_FINITE_CHUNK_ELEMS = 1 << 22


def _check_finite(a: np.ndarray, what: str) -> None:
    if a.ndim == 2 and a.size > _FINITE_CHUNK_ELEMS:
        rows = max(1, _FINITE_CHUNK_ELEMS // a.shape[1])
        for start in range(0, a.shape[0], rows):
            if not np.isfinite(a[start:start + rows]).all():
                raise ValueError(f"{what} contains non-finite entries")
        return
    if not np.isfinite(a).all():
        raise ValueError(f"{what} contains non-finite entries")


def _as_float_vector(x, what: str) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype != np.float64:
        x = x.astype(np.float64)
    if x.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class GradientMatrix:
    """Row-stacked gradients, shape (n, p).  Float64, finite."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.float64:
            data = data.astype(np.float64)
        if data.ndim != 2:
            raise ValueError(f"gradient matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"gradient matrix must be non-empty, got shape {data.shape}")
        _check_finite(data, "gradient matrix")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


def as_gradient_matrix(A) -> GradientMatrix:
    return A if isinstance(A, GradientMatrix) else GradientMatrix(A)


@dataclass(frozen=True)
class ProblemInstance:
    """Data of one l0-ridge problem.

    Build full problems with :func:`build_problem`, which enforces
    ``b = A wbar - alpha e``.  Instances produced by :meth:`restrict` keep the
    parent's ``b`` and therefore do not satisfy that identity.
    """

    A: np.ndarray
    wbar: np.ndarray
    b: np.ndarray
    lam: float
    k: int
    alpha: float = 1.0

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    @property
    def ridge(self) -> float:
        """The ridge weight ``n * lam``."""
        return self.n * self.lam

    def restrict(self, cols) -> "ProblemInstance":
        """Sub-problem over the columns ``cols`` with the same ``b``.

        Its objective equals the parent's on vectors supported in ``cols``
        minus the constant ``(n lam / 2) ||wbar_rest||^2``.
        """
        cols = np.asarray(cols, dtype=np.intp)
        if cols.size == self.p and np.array_equal(cols, np.arange(self.p)):
            return self
        k = min(self.k, cols.size)
        return ProblemInstance(self.A[:, cols], self.wbar[cols], self.b, self.lam, max(k, 1), self.alpha)

    def with_k(self, k: int) -> "ProblemInstance":
        if not 1 <= k <= self.p:
            raise ValueError(f"k={k} out of range [1, {self.p}]")
        return ProblemInstance(self.A, self.wbar, self.b, self.lam, int(k), self.alpha)


@dataclass(frozen=True)
class SparseSolution:
    """A feasible weight vector with its support and cached objective.

    ``history`` holds the objective after every outer iteration of the solver
    that produced it.  ``stages`` carries per-stage solutions from the
    multi-stage driver, or per-block histories from the blockwise solver.
    """

    weights: np.ndarray
    support: np.ndarray
    objective: float
    history: tuple = ()
    n_iter: int = 0
    stages: tuple = field(default=(), repr=False)

    @property
    def nnz(self) -> int:
        return int(self.support.size)

    @classmethod
    def from_weights(cls, inst: ProblemInstance, w: np.ndarray, **kw) -> "SparseSolution":
        w = np.asarray(w, dtype=np.float64)
        return cls(w, support_of(w), objective(inst, w), **kw)


def support_of(w: np.ndarray) -> np.ndarray:
    return np.flatnonzero(w)


def build_problem(A, wbar, lam: float, k: int, alpha: float = 1.0) -> ProblemInstance:
    """Assemble the problem with ``b = A wbar - alpha e``.

    ``A`` may be a :class:`GradientMatrix` or any 2-D array; float32 input is
    widened to float64.
    """
    G = as_gradient_matrix(A)
    wbar = _as_float_vector(wbar, "wbar")
    if wbar.size != G.p:
        raise ValueError(f"wbar has length {wbar.size}, expected p={G.p}")
    _check_finite(wbar, "wbar")
    lam = float(lam)
    alpha = float(alpha)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be a finite non-negative number, got {lam}")
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(k) != k or not 1 <= k <= G.p:
        raise ValueError(f"k={k} out of range [1, {G.p}]")
    b = G.data @ wbar - alpha
    return ProblemInstance(G.data, wbar, b, lam, int(k), alpha)


def _check_len(inst: ProblemInstance, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (inst.p,):
        raise ValueError(f"weight vector has shape {w.shape}, expected ({inst.p},)")
    return w


def _apply(A: np.ndarray, w: np.ndarray, support: np.ndarray | None = None) -> np.ndarray:
    """``A @ w``, touching only the columns in ``support`` when it is small."""
    if support is None:
        support = np.flatnonzero(w)
    if support.size * 4 < w.size:
        return A[:, support] @ w[support]
    return A @ w


def residual(inst: ProblemInstance, w: np.ndarray, support: np.ndarray | None = None) -> np.ndarray:
    """``b - A w``."""
    return inst.b - _apply(inst.A, w, support)


def objective(inst: ProblemInstance, w, support: np.ndarray | None = None) -> float:
    """Q(w) = 1/2 ||b - Aw||^2 + (n lam/2) ||w - wbar||^2."""
    return objective_and_residual(inst, w, support)[0]


def objective_and_residual(inst: ProblemInstance, w, support: np.ndarray | None = None):
    """``(Q(w), b - A w)``."""
    w = _check_len(inst, w)
    r = residual(inst, w, support)
    d = w - inst.wbar
    return 0.5 * float(r @ r) + 0.5 * inst.ridge * float(d @ d), r


def gradient(inst: ProblemInstance, w, support: np.ndarray | None = None,
             resid: np.ndarray | None = None) -> np.ndarray:
    """Exact gradient ``A^T (A w - b) + n lam (w - wbar)``.

    ``resid`` may pass a precomputed ``b - A w`` to skip one product.
    """
    w = _check_len(inst, w)
    if resid is None:
        resid = residual(inst, w, support)
    g = inst.A.T @ (-resid)
    if inst.lam:
        g += inst.ridge * (w - inst.wbar)
    return g
