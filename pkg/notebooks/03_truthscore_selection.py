"""
Picking truth campaigners with TruthScore
=========================================

Schedules estimate, round by round, how likely each node is to adopt the
rumor (mval) and a candidate's truth (tval). A candidate's score is its truth
mass over nodes the rumor threatens.
"""

# %%
import numpy as np

from cicmb.graph import DirectedGraph, build_dag
from cicmb.propagation import BiasTable
from cicmb.truthscore import compute_mval, compute_tval, truth_score, truthscore_ranking

# %%
edges = [(0, 1, 0.5), (0, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5), (4, 1, 0.6), (4, 2, 0.4), (5, 3, 0.3)]
src, dst, prob = zip(*edges)
dag = build_dag(DirectedGraph.from_edges(6, src, dst, prob))
biases = BiasTable(np.full(6, 0.8), np.full(6, 0.5))

mval, A = compute_mval(dag, R=[0], initial_biases=biases, alpha=2)
print("threatened set A:", sorted(A))
print(np.round(mval.values, 4))

# %%
for w in (4, 5):
    tval, B = compute_tval(dag, w, [0], biases, alpha=2)
    print(f"candidate {w}: B={sorted(B)} score={truth_score(mval, A, tval, B, 2):.5f}")

# %% [markdown]
# Ranking the whole pool computes mval once and one tval per candidate.

# %%
for s in truthscore_ranking(dag, [0], [4, 5], biases, alpha=2):
    print(s.candidate, round(s.score, 5))
