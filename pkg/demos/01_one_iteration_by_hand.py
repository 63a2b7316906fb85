"""One primal-dual iteration on a two-node graph, checked against hand arithmetic.

Node 0 is labeled +1 with feature 1, node 1 is unlabeled, and the single edge
has weight 2. With lambda = 0.1 the step sizes are sigma = 1/(2*2) = 0.25 and
tau = 0.9/2 = 0.45 at both nodes.
"""
# %%
import math

import numpy as np

import lnlasso as ln

graph = ln.EmpiricalGraph.from_edges(2, [(0, 1, 2.0)])
data = ln.NodeDataset([[1.0], [1.0]], labels=[1, 1], has_label=[True, False],
                      training_set=[0], normalized=True)
pc = ln.build_preconditioners(graph, data)
print("sigma", pc.sigma, "tau", pc.tau, "beta", pc.beta)

# %% Inner steps at iteration 1: ceil(2 ln 2 / ln(1/0.45)) = 2
print("inner steps at k=1:", ln.solver.inner_count(pc.beta[0], 1))

# %% The labeled block moves from 0 to 0.225 and then to 0.45 * sigmoid(-0.225)
w, u, inner = ln.primal_dual_iterate(np.zeros((2, 1)), np.zeros((1, 1)), graph, data, pc,
                                     0.1, 1)
by_hand = 0.45 / (1 + math.exp(0.225))
print("w after one step:", w.ravel(), " by hand:", by_hand)

# %% The dual candidate 0.25 * 2 * (2 * 0.1998) ~ 0.1998 is clipped to lambda
print("u after one step:", u.ravel())

# %% Longer runs fuse the two blocks. With a single label the risk has no
# minimizer (it keeps falling as w grows), so the common value creeps upward
# roughly like log(k) instead of settling.
for iters in (1_000, 10_000, 100_000):
    run = ln.solve(graph, data, ln.SolverConfig(0.1, max_iters=iters, rel_tol=0.0))
    print(f"{iters:>7d} iterations -> w = {run.final_primal.ravel()}")
