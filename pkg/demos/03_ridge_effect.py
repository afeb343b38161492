"""Why the ridge term matters.

Without it (lambda = 0) the quadratic model is only trusted near wbar in
spirit, not in the objective, so IHT keeps walking away from the trained
weights and the true loss suffers.  A modest lambda keeps the iterates close.
"""
import numpy as np

from chita import (SolverConfig, ToyMLP, build_fisher_matrix, build_problem, iht_cd, make_blobs,
                   train_toy_mlp, true_loss)

X, y = make_blobs(seed=0)
model = ToyMLP(X, y, 64)
wbar = train_toy_mlp(model, 30, seed=0)
A, alpha = build_fisher_matrix(model, wbar, 500, 1, seed=0)
k = int(0.1 * model.p)

for lam in (0.0, 1e-3, 0.1, 10.0):
    dist = []
    sol = iht_cd(build_problem(A, wbar, lam, k, alpha), wbar, k, SolverConfig(max_outer=300, rel_tol=1e-15),
                 callback=lambda w: dist.append(np.linalg.norm(w - wbar)))
    marks = np.round([dist[0], dist[len(dist) // 2], dist[-1]], 2)
    print(f"lambda={lam:<7g} iterations {len(dist):3d}  |w - wbar| first/mid/last {marks}  "
          f"loss {true_loss(model, sol.weights):.3f}")
