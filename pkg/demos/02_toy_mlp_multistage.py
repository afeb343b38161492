"""One-shot versus multi-stage pruning of a small trained MLP.

We train a 32-64-10 rectifier network on Gaussian blobs, build an empirical
Fisher matrix from 500 per-sample gradients, then prune to increasing sparsity.
The single-stage solve linearizes the loss once at the dense weights; the
multi-stage run re-linearizes at each intermediate solution along an
exponential sparsity mesh and usually holds up better when most weights go.
"""
import numpy as np

from chita import ToyMLP, make_blobs, magnitude_prune, train_toy_mlp, true_loss
from chita.multistage import chita_pp, make_schedule

X, y = make_blobs(seed=0)
model = ToyMLP(X, y, 64)
wbar = train_toy_mlp(model, 30, seed=0)
print(f"p={model.p}, dense loss {true_loss(model, wbar):.3f}")
print("sparsity   magnitude   one-shot   multi-stage")
for tau in (0.5, 0.7, 0.8, 0.9, 0.95):
    k = int(np.floor((1 - tau) * model.p))
    mp = true_loss(model, magnitude_prune(wbar, k).weights)
    one = chita_pp(model, wbar, make_schedule("constant", tau, tau, 1), 500, 1, 0.1, seed=0)
    multi = chita_pp(model, wbar, make_schedule("exponential", min(0.5, tau), tau, 10), 500, 1, 0.1, seed=0)
    print(f"{tau:8.2f} {mp:11.3f} {true_loss(model, one.weights):10.3f} {true_loss(model, multi.weights):13.3f}")
