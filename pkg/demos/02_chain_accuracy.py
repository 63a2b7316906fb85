"""Accuracy on the 400-node clustered chain as lambda varies.

Eight clusters of 50 nodes share a Gaussian weight vector; neighbours inside a
cluster are tied by weight 100, clusters by weight 1. We label 40 % of the
nodes, solve for several lambdas, and compare against the Bayes accuracy of
the true weights.
"""
# %%
import numpy as np

import lnlasso as ln

inst = ln.generate(ln.chain_spec(labeling_rate=0.4, seed=7))
data, truth = inst.dataset, inst.true_labels
print(f"{data.num_train} labeled nodes, Bayes accuracy "
      f"{ln.bayes_accuracy(data, inst.true_weights):.3f}")

# %%
for lam in (1e-5, 1e-3, 1e-1):
    run = ln.solve(inst.graph, data, ln.SolverConfig(lam, max_iters=1000))
    acc = ln.accuracy_unlabeled(data, ln.predict(data, run.final_primal), truth)
    print(f"lambda={lam:g}: accuracy {acc:.3f}, total variation "
          f"{ln.tv_norm(inst.graph, run.final_primal):.3g}")

# %% How many distinct cluster weights survive? Compare cluster means of the estimate.
for lam in (1e-3, 1e-1):
    w = ln.solve(inst.graph, data, ln.SolverConfig(lam, max_iters=1000)).final_primal
    means = np.array([w[inst.cluster_assignment == c].mean(axis=0) for c in range(8)])
    spread = np.linalg.norm(means - means.mean(axis=0), axis=1)
    print(f"lambda={lam:g}: distance of each cluster mean from the overall mean",
          np.round(spread, 3))
