"""CITS next to the Granger and naive PC baselines on one common-cause series.

Linear Gaussian model 2 has a common driver 1 of 2 and 3.  Naive PC ignores
time order, so the edges it reports are undirected guesses.
"""

from cits import CitsConfig, SimModel, cits_sample, confusion, gc1, gc2, ground_truth, metrics, pc_naive, simulate

kind = "linear-gaussian-2"
ts = simulate(SimModel(kind, n=1000, seed=2))
truth = ground_truth(kind)

estimates = {
    "cits": cits_sample(ts, CitsConfig()).rolled,
    "gc1": gc1(ts, tau=1),
    "gc2": gc2(ts, tau=1),
    "pc": pc_naive(ts),
}
print(f"{'method':<6} {'TPR':>6} {'IFPR':>6} {'CS':>6}  edges")
for name, graph in estimates.items():
    m = metrics(confusion(graph, truth))
    print(f"{name:<6} {m['tpr']:6.1f} {m['ifpr']:6.1f} {m['cs']:6.1f}  {sorted(graph.edges)}")
print("truth:", sorted(truth.edges))
