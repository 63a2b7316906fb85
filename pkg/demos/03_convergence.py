"""Objective and accuracy along the iterations for the chain at labeling rate 0.4.

The diagnostics record the objective after every iteration; the accuracy
curve comes from the callback hook.
"""
# %%
import lnlasso as ln

inst = ln.generate(ln.chain_spec(labeling_rate=0.4, seed=1))
data = inst.dataset
for lam in (1e-5, 1e-1):
    acc = []
    run = ln.solve(inst.graph, data,
                   ln.SolverConfig(lam, max_iters=2000, rel_tol=0.0, record_diagnostics=True),
                   callback=lambda k, w, u: acc.append(
                       ln.accuracy_unlabeled(data, ln.predict(data, w), inst.true_labels)))
    print(f"lambda={lam:g}")
    for k in (1, 10, 100, 200, 500, 1000, 2000):
        rec = run.diagnostics[k - 1]
        print(f"  iter {k:5d}  objective {rec.objective:.6f}  accuracy {acc[k - 1]:.3f}  "
              f"rel change {rec.primal_rel_change:.1e}")
