"""Gradient sources and empirical-Fisher assembly.

An oracle is anything exposing ``N``, ``p``, ``loss(w, idx=None)``,
``gradient(w, idx=None)`` (mean over ``idx``, or the full dataset) and
``per_sample_gradients(w, idx)``.  Two are provided: a small ReLU network with
hand-written backprop on a Gaussian-blobs task, and per-sample least squares
(whose Hessian is known exactly, for checking curvature estimates).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .core import GradientMatrix

__all__ = [
    "GradientOracle",
    "IndeterminateCurvature",
    "ToyMLP",
    "LeastSquaresOracle",
    "make_blobs",
    "train_toy_mlp",
    "per_sample_gradient",
    "sample_batches",
    "build_fisher_matrix",
    "hutchinson_samples",
    "estimate_alpha_trace",
    "true_loss",
]


class GradientOracle(Protocol):
    N: int
    p: int

    def loss(self, w: np.ndarray, idx=None) -> float: ...

    def gradient(self, w: np.ndarray, idx=None) -> np.ndarray: ...

    def per_sample_gradients(self, w: np.ndarray, idx) -> np.ndarray: ...


class IndeterminateCurvature(ValueError):
    pass


def make_blobs(N: int = 2000, d: int = 32, c: int = 10, seed: int = 0, spread: float = 2.0):
    """Gaussian blobs: ``c`` unit-variance clusters with centres of scale ``spread``."""
    rng = np.random.default_rng(seed)
    centres = rng.standard_normal((c, d)) * spread / np.sqrt(d)
    y = rng.integers(0, c, size=N)
    X = centres[y] + rng.standard_normal((N, d))
    return X, y


@dataclass
class ToyMLP:
    """``d -> h -> c`` ReLU network with softmax cross-entropy.

    Flat weight layout: ``W1 (h, d)``, ``b1 (h)``, ``W2 (c, h)``, ``b2 (c)``.
    """

    X: np.ndarray
    y: np.ndarray
    hidden: int = 64
    layers: list = field(init=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.intp)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (N, d) and y must be (N,)")
        self.n_classes = int(self.y.max()) + 1
        d, h, c = self.X.shape[1], self.hidden, self.n_classes
        self.layers = [("fc1.weight", h * d), ("fc1.bias", h), ("fc2.weight", c * h), ("fc2.bias", c)]

    @property
    def widths(self) -> tuple:
        return (self.X.shape[1], self.hidden, self.n_classes)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return sum(n for _, n in self.layers)

    @property
    def layer_sizes(self) -> list:
        return [n for _, n in self.layers]

    def unflatten(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.p,):
            raise ValueError(f"weight vector has shape {w.shape}, expected ({self.p},)")
        d, h, c = self.widths
        parts = np.split(w, np.cumsum(self.layer_sizes)[:-1])
        return parts[0].reshape(h, d), parts[1], parts[2].reshape(c, h), parts[3]

    @staticmethod
    def flatten(W1, b1, W2, b2) -> np.ndarray:
        return np.concatenate([W1.ravel(), b1, W2.ravel(), b2])

    def init_weights(self, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        d, h, c = self.widths
        W1 = rng.standard_normal((h, d)) * np.sqrt(2.0 / d)
        W2 = rng.standard_normal((c, h)) * np.sqrt(1.0 / h)
        return self.flatten(W1, np.zeros(h), W2, np.zeros(c))

    def _idx(self, idx):
        return slice(None) if idx is None else np.asarray(idx, dtype=np.intp)

    def _forward(self, w, X):
        W1, b1, W2, b2 = self.unflatten(w)
        z1 = X @ W1.T + b1
        h = np.maximum(z1, 0.0)
        logits = h @ W2.T + b2
        logits = logits - logits.max(axis=1, keepdims=True)
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return z1, h, logp, W2

    def loss(self, w, idx=None) -> float:
        sel = self._idx(idx)
        _, _, logp, _ = self._forward(w, self.X[sel])
        return float(-np.mean(logp[np.arange(logp.shape[0]), self.y[sel]]))

    def accuracy(self, w, idx=None) -> float:
        sel = self._idx(idx)
        _, _, logp, _ = self._forward(w, self.X[sel])
        return float(np.mean(logp.argmax(axis=1) == self.y[sel]))

    def _deltas(self, w, idx):
        sel = self._idx(idx)
        X, y = self.X[sel], self.y[sel]
        z1, h, logp, W2 = self._forward(w, X)
        d2 = np.exp(logp)
        d2[np.arange(X.shape[0]), y] -= 1.0
        d1 = (d2 @ W2) * (z1 > 0)
        return X, h, d1, d2

    def per_sample_gradients(self, w, idx) -> np.ndarray:
        """Rows are exact single-sample loss gradients, shape ``(len(idx), p)``."""
        X, h, d1, d2 = self._deltas(w, idx)
        B = X.shape[0]
        return np.concatenate([
            (d1[:, :, None] * X[:, None, :]).reshape(B, -1), d1,
            (d2[:, :, None] * h[:, None, :]).reshape(B, -1), d2,
        ], axis=1)

    def gradient(self, w, idx=None) -> np.ndarray:
        X, h, d1, d2 = self._deltas(w, idx)
        B = X.shape[0]
        return self.flatten(d1.T @ X / B, d1.mean(axis=0), d2.T @ h / B, d2.mean(axis=0))


def per_sample_gradient(model: GradientOracle, w, sample: int) -> np.ndarray:
    """Gradient of the loss on one sample."""
    return model.per_sample_gradients(w, [sample])[0]


def train_toy_mlp(model: ToyMLP, epochs: int = 30, lr: float = 0.1, batch: int = 64, seed: int = 0):
    """Plain mini-batch gradient descent from :meth:`ToyMLP.init_weights`.

    Deliberately short so the gradient at the returned weights is not zero.
    """
    rng = np.random.default_rng(seed)
    w = model.init_weights(seed)
    for _ in range(epochs):
        perm = rng.permutation(model.N)
        for start in range(0, model.N, batch):
            w -= lr * model.gradient(w, perm[start:start + batch])
    return w


@dataclass
class LeastSquaresOracle:
    """Per-sample losses ``1/2 (x_i . w - y_i)^2``; Hessian ``X^T X / N``."""

    X: np.ndarray
    y: np.ndarray

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def hessian_trace(self) -> float:
        return float(np.einsum("ij,ij->", self.X, self.X)) / self.N

    def _sel(self, idx):
        return (self.X, self.y) if idx is None else (self.X[idx], self.y[idx])

    def loss(self, w, idx=None) -> float:
        X, y = self._sel(idx)
        r = X @ w - y
        return 0.5 * float(r @ r) / X.shape[0]

    def gradient(self, w, idx=None) -> np.ndarray:
        X, y = self._sel(idx)
        return X.T @ (X @ w - y) / X.shape[0]

    def per_sample_gradients(self, w, idx) -> np.ndarray:
        X, y = self._sel(np.asarray(idx))
        return (X @ w - y)[:, None] * X


def sample_batches(N: int, n: int, m: int, seed: int) -> np.ndarray:
    """``n`` disjoint mini-batches of size ``m`` drawn without replacement."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if n * m > N:
        raise ValueError(f"insufficient data: n*m = {n * m} exceeds N = {N}")
    rng = np.random.default_rng(seed)
    return rng.permutation(N)[: n * m].reshape(n, m)


def build_fisher_matrix(oracle: GradientOracle, wbar, n: int, m: int = 1, seed: int = 0,
                        chunk: int = 4096):
    """Stack ``n`` mini-batch mean gradients at ``wbar``; return ``(A, 1/m)``."""
    batches = sample_batches(oracle.N, n, m, seed)
    A = np.empty((n, oracle.p))
    rows = max(1, chunk // m)
    for start in range(0, n, rows):
        sel = batches[start:start + rows]
        G = oracle.per_sample_gradients(wbar, sel.ravel())
        A[start:start + sel.shape[0]] = G.reshape(sel.shape[0], m, -1).mean(axis=1)
    return GradientMatrix(A), 1.0 / m


def hutchinson_samples(oracle: GradientOracle, wbar, probes: int, seed: int = 0) -> np.ndarray:
    """Per-probe ``v^T H v`` with Rademacher ``v`` and central-difference HVPs
    of the full-data gradient."""
    if probes < 1:
        raise ValueError("probes must be positive")
    wbar = np.asarray(wbar, dtype=np.float64)
    rng = np.random.default_rng(seed)
    eps = 1e-4 * (1.0 + float(np.max(np.abs(wbar))))
    out = np.empty(probes)
    for j in range(probes):
        v = rng.choice([-1.0, 1.0], size=wbar.size)
        hv = (oracle.gradient(wbar + eps * v) - oracle.gradient(wbar - eps * v)) / (2 * eps)
        out[j] = v @ hv
    return out


def estimate_alpha_trace(oracle: GradientOracle, A, wbar, probes: int = 32, seed: int = 0) -> float:
    """``trace(A^T A / n) / trace(Hessian)`` with a Hutchinson denominator."""
    A = A.data if isinstance(A, GradientMatrix) else np.asarray(A)
    num = float(np.einsum("ij,ij->", A, A)) / A.shape[0]
    den = float(np.mean(hutchinson_samples(oracle, wbar, probes, seed)))
    if not den > 0:
        raise IndeterminateCurvature(f"Hessian trace estimate is {den}; alpha is undefined")
    return num / den


def true_loss(oracle: GradientOracle, w) -> float:
    """Full-dataset average loss."""
    return oracle.loss(np.asarray(w, dtype=np.float64))
