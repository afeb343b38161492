"""Block-diagonal approximation: independent sub-problems per coordinate block."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .backsolve import chita_bso, restricted_exact_solve
from .core import SparseSolution, as_gradient_matrix, build_problem, objective
from .kernels import topk_indices
from .solver_iht import SolverConfig

__all__ = [
    "BlockPartition",
    "partition_layers",
    "magnitude_allocator",
    "allocate_sparsity",
    "solve_blockwise",
]


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint contiguous blocks ``(start, stop)`` covering ``range(p)``."""

    blocks: tuple
    budgets: tuple | None = None

    def __post_init__(self):
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        if not blocks:
            raise ValueError("partition has no blocks")
        pos = 0
        for a, b in sorted(blocks):
            if a != pos or b <= a:
                raise ValueError(f"blocks must tile range(p) without gaps or overlap; bad block {(a, b)}")
            pos = b
        object.__setattr__(self, "blocks", blocks)
        if self.budgets is not None:
            budgets = tuple(int(x) for x in self.budgets)
            if len(budgets) != len(blocks):
                raise ValueError("one budget per block is required")
            for (a, b), kb in zip(blocks, budgets):
                if not 0 <= kb <= b - a:
                    raise ValueError(f"budget {kb} invalid for block of size {b - a}")
            object.__setattr__(self, "budgets", budgets)

    @property
    def p(self) -> int:
        return max(b for _, b in self.blocks)

    @property
    def sizes(self) -> list:
        return [b - a for a, b in self.blocks]

    @property
    def k(self) -> int:
        return sum(self.budgets) if self.budgets is not None else 0

    def indices(self, i: int) -> np.ndarray:
        return np.arange(*self.blocks[i])


def partition_layers(layer_sizes, block_size_cap: int = 10_000) -> BlockPartition:
    """Split every layer into ``ceil(size / cap)`` contiguous near-equal blocks."""
    layer_sizes = [int(s) for s in layer_sizes]
    if not layer_sizes:
        raise ValueError("layer list is empty")
    if block_size_cap < 1:
        raise ValueError("block_size_cap must be positive")
    blocks = []
    start = 0
    for size in layer_sizes:
        if size < 1:
            raise ValueError(f"layer size must be positive, got {size}")
        nb = math.ceil(size / block_size_cap)
        base, extra = divmod(size, nb)
        for j in range(nb):
            stop = start + base + (1 if j < extra else 0)
            blocks.append((start, stop))
            start = stop
    return BlockPartition(tuple(blocks))


def magnitude_allocator(w0, k: int, partition: BlockPartition) -> tuple:
    """``k_i = |supp(P_k(w0)) & B_i|``."""
    w0 = np.asarray(w0)
    keep = topk_indices(w0, k)
    keep = keep[w0[keep] != 0]
    return tuple(int(np.count_nonzero((keep >= a) & (keep < b))) for a, b in partition.blocks)


def allocate_sparsity(w0, k: int, partition: BlockPartition, allocator=magnitude_allocator) -> BlockPartition:
    """Set per-block budgets; the default allocator is magnitude pruning."""
    if np.asarray(w0).size != partition.p:
        raise ValueError(f"w0 has length {np.asarray(w0).size}, partition covers {partition.p}")
    return replace(partition, budgets=allocator(w0, k, partition))


def _solve_block(A, wbar, lam, alpha, block, kb, t_ht, cfg, active_kw):
    a, b = block
    size = b - a
    if kb == 0:
        return np.zeros(size), ()
    sub = build_problem(np.ascontiguousarray(A[:, a:b]), wbar[a:b], lam, kb, alpha)
    if kb == size:
        return restricted_exact_solve(sub, np.arange(size)).weights, ()
    sol = chita_bso(sub, sub.wbar, kb, t_ht, cfg, **active_kw)
    return sol.weights, sol.history


def solve_blockwise(A, wbar, lam: float, alpha: float, partition: BlockPartition, t_ht: int = 5,
                    cfg: SolverConfig | None = None, max_workers: int = 1, order=None,
                    **active_kw) -> SparseSolution:
    """Solve every block's sub-problem with its own ``b_i = A_B wbar_B - alpha e``
    under budget ``k_i`` and concatenate.

    Blocks are independent; ``max_workers > 1`` solves them on a thread pool
    and ``order`` permutes the solve order, neither affects the result.
    The returned objective is that of the full (non-decomposed) problem;
    ``stages`` holds each block's solver history.
    """
    G = as_gradient_matrix(A)
    A = G.data
    wbar = np.asarray(wbar, dtype=np.float64)
    if partition.budgets is None:
        raise ValueError("partition budgets are not set; call allocate_sparsity first")
    if partition.p != G.p or wbar.size != G.p:
        raise ValueError("partition, A and wbar disagree on p")
    if lam <= 0:
        raise ValueError("blockwise solve requires lambda > 0")
    order = list(range(len(partition.blocks))) if order is None else list(order)

    def work(i):
        return i, _solve_block(A, wbar, lam, alpha, partition.blocks[i], partition.budgets[i],
                               t_ht, cfg, active_kw)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            results = list(pool.map(work, order))
    else:
        results = [work(i) for i in order]

    w = np.zeros(G.p)
    histories = [()] * len(partition.blocks)
    for i, (wb, hist) in results:
        a, b = partition.blocks[i]
        w[a:b] = wb
        histories[i] = hist
    k = max(partition.k, 1)
    full = build_problem(G, wbar, lam, min(k, G.p), alpha)
    q = objective(full, w)
    return SparseSolution(w, np.flatnonzero(w), q, (q,), sum(map(len, histories)), tuple(histories))
