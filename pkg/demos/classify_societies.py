"""
Fragmented, whole and cohesive societies
========================================

Three small economies, one per verdict, and what the circulation graph says
about each of them.
"""

import numpy as np

from income_circulation import validate
from income_circulation.graph import build_graph, classify, paths_of_length, shortest_path_witness

# Three agents buying in a ring: agent 1 is paid by 2, 2 by 3, 3 by 1.
ring = validate([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
g = build_graph(ring)
print("ring verdict:", classify(ring).to_json())

# Money only returns to an agent every 3 steps, so walks from i to j exist
# for lengths congruent to the shortest one modulo 3.
for i in range(3):
    for j in range(3):
        lengths = [k for k in range(1, 7) if paths_of_length(g, i, j, k)]
        print(f"  {i + 1} -> {j + 1}: lengths {lengths}, shortest {shortest_path_witness(g, i, j)}")

# One agent that keeps half of its income breaks the period: the society
# becomes cohesive and F**k0 is entrywise positive.
saver = validate([[0.5, 1, 0], [0, 0, 1], [0.5, 0, 0]])
c = classify(saver)
print("\nwith a saver:", c.verdict.value, "exponent", c.exponent_k0,
      "cohesiveness", c.cohesiveness)

# Two groups that never trade with each other form separate strongly
# connected components.
split = np.zeros((4, 4))
split[:2, :2] = [[0.3, 0.6], [0.7, 0.4]]
split[2:, 2:] = [[0.1, 1.0], [0.9, 0.0]]
c = classify(validate(split))
print("two islands:", c.verdict.value, "with", c.scc_count, "components")
