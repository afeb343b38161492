"""Pruning a synthetic l0-ridge instance with each solver.

A random gradient matrix stands in for the per-sample gradients of a trained
network.  Every solver starts from the dense weights ``wbar`` and must keep at
most ``k`` of them; lower objective means a smaller predicted loss increase.
"""
import time

import numpy as np

from chita import (SolverConfig, build_problem, chita_bso, chita_cd, iht_cd, iht_constant_step,
                   magnitude_prune, obd_prune)

rng = np.random.default_rng(0)
n, p, k = 200, 5000, 250
A = rng.standard_normal((n, p)) * np.exp(rng.uniform(-1, 1, p))  # uneven column scales
wbar = rng.standard_normal(p)
inst = build_problem(A, wbar, lam=0.1, k=k)

runs = {
    "magnitude": lambda: magnitude_prune(wbar, k, inst),
    "obd": lambda: obd_prune(inst, k),
    "iht, step 1/L (200 its)": lambda: iht_constant_step(inst, wbar, k, 200),
    "iht-cd": lambda: iht_cd(inst, wbar, k),
    "chita-cd (active set)": lambda: chita_cd(inst, wbar, k),
    "chita-bso (backsolve)": lambda: chita_bso(inst, wbar, k, cfg=SolverConfig()),
}
print(f"n={n} p={p} k={k}")
for name, run in runs.items():
    t = time.perf_counter()
    sol = run()
    print(f"{name:26s} objective {sol.objective:12.2f}  nnz {sol.nnz:4d}  {time.perf_counter() - t:6.2f} s")
