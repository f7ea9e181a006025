"""
Comparing selectors on one draw
===============================

Every selector sees the same rumor starters, candidate pool and biases, and
the saved share is measured on paired runs.
"""

# %%
import numpy as np

from cicmb.experiments import assign_biases, percent_saved, pick_seed_sets, rank_candidates
from cicmb.graph import DirectedGraph, assign_edge_probabilities, build_dag, undirected_diameter

# %%
rng = np.random.default_rng(3)
n = 2000
# preferential attachment: each new node links to 2 earlier nodes picked by degree
targets = [0, 1]
src, dst = [], []
for v in range(2, n):
    for u in rng.choice(targets, 2, replace=False):
        a, b = (v, int(u)) if rng.random() < 0.5 else (int(u), v)
        src.append(a)
        dst.append(b)
        targets += [v, int(u)]
g = assign_edge_probabilities(DirectedGraph.from_edges(n, src, dst), seed=1)
dag = build_dag(g)
alpha = undirected_diameter(g)
print(f"n={g.n} m={g.m} diameter={alpha} removed={len(dag.removed_edges)}")

# %%
R, P = pick_seed_sets(g, 10, 50, seed=2)
biases = assign_biases(g, R, P, seed=3)
for selector in ("ktruthscore", "tmb", "tib", "random"):
    ranking = rank_candidates(selector, g, R, P, biases, "linear", alpha, runs=100, seed=4, dag=dag)
    D = [v for v, _ in ranking[:5]]
    stats = percent_saved(g, R, D, biases, "linear", alpha, runs=200, seed=5)
    print(f"{selector:12s} D={D} saved={stats.saved_pct:6.2f}% reduction={stats.reduction_pct:6.2f}% "
          f"mean|S|={stats.mean_S:.1f}")
