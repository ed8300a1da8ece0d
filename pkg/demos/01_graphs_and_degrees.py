"""Random graph generators and the degree/dependency machinery.

Generates the two benchmark graph families, prints their degree summaries,
and shows the dependency-pair structure that drives the variance estimator.
"""

import numpy as np

from netdiff import barabasi_albert, degree_stats, erdos_renyi, from_edge_list, overlap_pairs
from netdiff.graph import dependency_graph, greedy_partition

print("=== Poisson (Erdos-Renyi) graphs: expected in-degree lambda ===")
for lam in (1, 3, 5):
    g = erdos_renyi(500, lam, seed=7)
    ds = degree_stats(g)
    print(f"  lambda={lam}: edges={g.n_edges:5d}  avg deg={ds.avg_deg:.3f}  "
          f"max deg={ds.max_deg:3d}  d_mx={ds.d_mx}  d_av={ds.d_av:.3f}")

print("\n=== Preferential attachment: m edges per new vertex ===")
for m in (1, 2, 3):
    g = barabasi_albert(500, m, seed=7)
    ds = degree_stats(g)
    print(f"  m={m}: edges={g.n_edges:5d}  avg deg={ds.avg_deg:.3f}  "
          f"max deg={ds.max_deg:3d}  (heavy-tailed hubs)")

print("\n=== Dependency pairs on a small example ===")
# edge (target, source): source's period-0 outcome feeds target's period-1 outcome
g = from_edge_list([(0, 2), (0, 1), (1, 0), (1, 2), (2, 3), (3, 1)], 4)
print(f"  graph: n={g.n}, in-degrees={g.in_degrees.tolist()}, out-degrees={g.out_degrees.tolist()}")
pairs = overlap_pairs(g)
off_diag = pairs[pairs[:, 0] != pairs[:, 1]]
print(f"  {len(pairs)} overlapping pairs ({len(off_diag)} off-diagonal):")
print(f"  {[tuple(p) for p in off_diag.tolist()]}")
print("  only these pairs contribute cross terms to the variance estimator")

print("\n=== Greedy partition of the dependency graph ===")
g = erdos_renyi(200, 2, seed=3)
dep = dependency_graph(g)
classes = greedy_partition(dep)
sizes = sorted((len(c) for c in classes), reverse=True)
max_deg = int(np.maximum(dep.in_degrees, dep.out_degrees).max())
print(f"  dependency graph max degree: {max_deg}")
print(f"  {len(classes)} independent classes (bound: {1 + max_deg}), sizes {sizes}")
