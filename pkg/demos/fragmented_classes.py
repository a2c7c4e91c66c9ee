"""
Two classes and one-way trade
=============================

The wealthy and the marginalized each trade among themselves. When money
flows across in only one direction, the receiving class ends up with all of
it.
"""

from income_circulation.blocks import fragmented_asymptotics, make_partition
from income_circulation.ingest import synthesize_economy

n, m = 12, 4
for f21, f12, label in ((True, False, "wealthy pay the poor"), (False, True, "poor pay the wealthy"),
                        (False, False, "no cross trade")):
    F, x = synthesize_economy(n, "two-class", seed=5, m=m, f21=f21, f12=f12)
    part = make_partition(F, x, H=range(n - m), L=range(n - m, n))
    d = fragmented_asymptotics(part, horizon=5000)
    print(f"{label:22s} {d.regime.value:14s} top share {d.top_share:.4f}  bottom share {d.bottom_share:.4f}")
