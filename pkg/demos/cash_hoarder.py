"""
A cash hoarder absorbs all money
================================

The last agent sells to everyone and buys nothing. Its share of the money
grows every step until it holds all of it.
"""

import numpy as np

from income_circulation import evolve, matrix_power
from income_circulation.blocks import hoarder_decompose, hoarder_limit, hoarder_power_closed_form
from income_circulation.ingest import synthesize_economy

F, x = synthesize_economy(8, "hoarder", seed=1)
dec = hoarder_decompose(F)
print("pure cash hoarder:", dec.pure_cash_hoarder)

# The closed form only needs powers of the sub-economy.
for k in (1, 10, 100):
    err = np.abs(hoarder_power_closed_form(dec, k) - matrix_power(F, k)).max()
    print(f"k={k:3d}: closed form vs direct power, max error {err:.1e}")

lim = hoarder_limit(dec)
print("limit bottom row:", np.round(lim[-1], 12))

traj = evolve([F] * 200, x)
share = traj.states[:, -1] / traj.monetary_base()
print("hoarder share at t=0, 10, 50, 200:", [round(float(share[t]), 4) for t in (0, 10, 50, 200)])
