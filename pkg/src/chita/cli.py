"""Command-line front end: ``chita gen``, ``chita prune`` and ``chita verify``.

Exit codes: 0 success, 2 config error, 3 file-format error, 4 infeasible
problem, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import io
from .activeset import chita_cd
from .backsolve import UnsupportedConfiguration, chita_bso
from .baselines import magnitude_prune
from .blockwise import allocate_sparsity, partition_layers, solve_blockwise
from .core import build_problem, objective
from .fisher import ToyMLP, build_fisher_matrix, make_blobs, train_toy_mlp
from .multistage import chita_pp, make_schedule
from .solver_iht import SolverConfig, iht_cd
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_FORMAT, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 2, 3, 4, 5


class Infeasible(Exception):
    pass


# gen ----------------------------------------------------------------------

def synthetic(n: int, p: int, seed: int, col_scale: float = 1.0):
    """Gaussian ``A`` whose column norms vary log-uniformly over
    ``[1/col_scale, col_scale]``, and standard-normal ``wbar``."""
    rng = np.random.default_rng(seed)
    scales = np.exp(rng.uniform(-1.0, 1.0, p) * np.log(col_scale))
    A = rng.standard_normal((n, p))
    A *= scales
    wbar = rng.standard_normal(p)
    return A, wbar


def cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    path = lambda name: os.path.join(args.out, name)  # noqa: E731
    if args.kind == "synthetic":
        if args.n < 1 or args.p < 1 or args.col_scale < 1:
            raise io.ConfigError("synthetic needs n, p >= 1 and col_scale >= 1")
        A, wbar = synthetic(args.n, args.p, args.seed, args.col_scale)
        layers = [("weights", args.p)]
    else:
        X, y = make_blobs(args.samples, args.input_dim, args.classes, args.seed)
        model = ToyMLP(X, y, args.hidden)
        wbar = train_toy_mlp(model, args.epochs, seed=args.seed)
        G, _ = build_fisher_matrix(model, wbar, args.n, args.m, args.seed)
        A = G.data
        layers = model.layers
        io.write_matrix(path("X.mtx"), X)
        io.write_vector(path("y.vec"), y.astype(np.float64))
        with open(path("model.json"), "w", encoding="utf-8") as fh:
            json.dump({"widths": list(model.widths), "samples": args.samples, "epochs": args.epochs,
                       "n": args.n, "m": args.m, "seed": args.seed}, fh, indent=1)
            fh.write("\n")
    io.write_matrix(path("A.mtx"), A)
    io.write_vector(path("wbar.vec"), wbar)
    io.write_layers(path("layers.json"), layers)
    print(f"wrote {args.kind} instance n={A.shape[0]} p={A.shape[1]} to {args.out}")
    return EXIT_OK


def load_dataset(directory) -> ToyMLP:
    X = io.read_matrix(os.path.join(directory, "X.mtx"))
    y = io.read_vector(os.path.join(directory, "y.vec"))
    meta_path = os.path.join(directory, "model.json")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if not np.all(y == np.round(y)) or y.min() < 0:
        raise io.FormatError(os.path.join(directory, "y.vec"), 32, "labels must be non-negative integers")
    return ToyMLP(X.astype(np.float64), y.astype(np.intp), int(meta["widths"][1]))


# prune --------------------------------------------------------------------

def _run(cfg: io.RunConfig, A, wbar, layers, dataset):
    p = wbar.size
    k = cfg.budget(p)
    if not 1 <= k <= p:
        raise Infeasible(f"budget k={k} outside [1, {p}]")
    alpha = 1.0 / cfg.m
    scfg = SolverConfig(t_ht=cfg.t_ht, t_cd=cfg.t_cd, gamma=cfg.gamma)
    inst = build_problem(A, wbar, cfg.lam, k, alpha)
    q0 = objective(inst, wbar)
    sizes = [n for _, n in layers] if layers else [p]
    if sum(sizes) != p:
        raise io.ConfigError(f"layer map covers {sum(sizes)} weights, matrix has p={p}")

    if cfg.solver == "magnitude":
        sol = magnitude_prune(wbar, k, inst)
    elif cfg.solver == "iht-cd":
        sol = iht_cd(inst, wbar, k, scfg)
    elif cfg.solver == "chita-cd":
        sol = chita_cd(inst, wbar, k, scfg, mult=cfg.active_mult)
    elif cfg.solver == "chita-bso":
        sol = chita_bso(inst, wbar, k, cfg.t_ht, scfg, mult=cfg.active_mult)
    elif cfg.solver == "blockwise":
        if cfg.lam <= 0:
            raise Infeasible("blockwise solve requires lambda > 0")
        part = allocate_sparsity(wbar, k, partition_layers(sizes, cfg.block_size))
        sol = solve_blockwise(A, wbar, cfg.lam, alpha, part, cfg.t_ht, scfg, mult=cfg.active_mult)
    else:
        if dataset is None:
            raise io.ConfigError("multistage needs --dataset (a toy-mlp gen directory)")
        if dataset.p != p:
            raise io.ConfigError(f"dataset model has p={dataset.p}, wbar has p={p}")
        if cfg.n * cfg.m > dataset.N:
            raise Infeasible(f"n*m = {cfg.n * cfg.m} exceeds the {dataset.N} samples available")
        tau = cfg.sparsity if cfg.sparsity is not None else 1.0 - k / p
        sched = make_schedule(cfg.schedule, min(cfg.tau_first, tau), tau, cfg.stages)
        sol = chita_pp(dataset, wbar, sched, cfg.n, cfg.m, cfg.lam, "chita-cd", cfg.seed, scfg,
                       active_mult=cfg.active_mult)
        # report the final objective on the matrix that was passed in
        sol = type(sol)(sol.weights, sol.support, objective(inst, sol.weights), sol.history,
                        sol.n_iter, sol.stages)
    return inst, k, q0, sol


def cmd_prune(args) -> int:
    cfg = io.load_config(args.config)
    A = io.read_matrix(args.matrix)
    wbar = io.read_vector(args.wbar).astype(np.float64)
    if A.shape[1] != wbar.size:
        raise io.FormatError(args.wbar, 24, f"length {wbar.size} does not match matrix p={A.shape[1]}")
    layers = io.read_layers(args.layers) if args.layers else None
    dataset = load_dataset(args.dataset) if args.dataset else None
    start = time.perf_counter()
    try:
        inst, k, q0, sol = _run(cfg, A, wbar, layers, dataset)
    except UnsupportedConfiguration as e:
        raise Infeasible(str(e)) from None
    except ValueError as e:
        if isinstance(e, (io.ConfigError, io.FormatError)):
            raise
        raise Infeasible(str(e)) from None
    wall_ms = (time.perf_counter() - start) * 1e3
    io.write_solution(args.out, sol.weights, k, sol.objective, io.config_digest(cfg))
    row = {"solver": cfg.solver, "p": inst.p, "n": inst.n, "k": k, "lambda": cfg.lam, "seed": cfg.seed,
           "objective_initial": q0, "objective_final": sol.objective, "nnz": sol.nnz,
           "wall_ms": round(wall_ms, 3), "iterations": sol.n_iter}
    if args.csv:
        io.append_csv_row(args.csv, row)
    print(f"{cfg.solver}: k={k} nnz={sol.nnz} objective {q0:.6g} -> {sol.objective:.6g} "
          f"({wall_ms:.0f} ms)")
    return EXIT_OK


# verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    checks = run_suite(args.suite, args.seed)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


# entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chita", description="l0-ridge pruning toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("kind", choices=["synthetic", "toy-mlp"])
    g.add_argument("out", help="output directory")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=200, help="gradient rows")
    g.add_argument("--p", type=int, default=1000, help="weights (synthetic)")
    g.add_argument("--col-scale", type=float, default=1.0, help="column-norm spread (synthetic)")
    g.add_argument("--m", type=int, default=1, help="mini-batch size (toy-mlp)")
    g.add_argument("--samples", type=int, default=2000)
    g.add_argument("--input-dim", type=int, default=32)
    g.add_argument("--hidden", type=int, default=64)
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--epochs", type=int, default=30)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("prune", help="solve a pruning problem")
    p.add_argument("config")
    p.add_argument("matrix")
    p.add_argument("wbar")
    p.add_argument("out", help="sparse solution JSON")
    p.add_argument("--csv", help="append a result row to this CSV file")
    p.add_argument("--layers", help="layer map JSON")
    p.add_argument("--dataset", help="toy-mlp gen directory (multistage)")
    p.set_defaults(func=cmd_prune)

    v = sub.add_parser("verify", help="run an oracle suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except io.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except io.FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except FileNotFoundError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
