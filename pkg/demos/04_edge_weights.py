"""Signed edge weights: regression coefficients of each child on its parents."""

from cits import CitsConfig, SimModel, edge_nature, simulate, weighted_cits

ts = simulate(SimModel("linear-gaussian-1", n=2000, seed=5))
result, unrolled, rolled = weighted_cits(ts, CitsConfig())

print("unrolled weights:")
for (a, b), w in sorted(unrolled.weights.items()):
    print(f"  {a} -> {b}: {w:+.3f}")

print("\nrolled weights (averaged over lags) and their nature:")
nature = edge_nature(rolled)
for edge, w in sorted(rolled.weights.items()):
    print(f"  {edge[0]} -> {edge[1]}: {w:+.3f}  {nature[edge]}")
