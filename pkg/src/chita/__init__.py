"""Hessian-free second-order pruning via l0-constrained ridge regression."""
from .activeset import chita_cd, init_active_set, probe_escape
from .backsolve import UnsupportedConfiguration, chita_bso, restricted_exact_solve
from .baselines import iht_constant_step, magnitude_prune, obd_prune, obd_scores
from .blockwise import BlockPartition, allocate_sparsity, partition_layers, solve_blockwise
from .core import GradientMatrix, ProblemInstance, SparseSolution, build_problem, gradient, objective
from .fisher import (
    LeastSquaresOracle,
    ToyMLP,
    build_fisher_matrix,
    estimate_alpha_trace,
    make_blobs,
    per_sample_gradient,
    train_toy_mlp,
    true_loss,
)
from .kernels import hard_threshold, ht_step, lipschitz_upper, topk_indices
from .linesearch import StepsizeResult, first_breakpoint, first_piece_minimizer, search_stepsize
from .multistage import SparsitySchedule, chita_pp, make_schedule
from .solver_iht import SolverConfig, cd_update, iht_cd

__version__ = "0.1.0"
