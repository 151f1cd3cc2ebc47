"""
How fast can information travel at all?
=======================================

Each hop keeps at most a ``delta**2`` share of the information it receives.
Run as an equality, that recursion gives an upper surface ``F(i, j)`` on
what node ``j`` can know after ``i`` steps, and an exponential envelope
shows it collapses beyond ``j = gamma * i`` for any ``gamma > delta**2``.
"""

import numpy as np

from infovelocity.converse import (ConverseParams, converse_table, find_envelope_c, probe,
                                   verify_envelope)

delta, gamma, v0 = 0.5, 0.3, 0.35

# %%
c = find_envelope_c(gamma, delta)
print("envelope constant c =", c)

table = converse_table(delta, 500, 200)
report = verify_envelope(table, ConverseParams(delta, gamma, c, v0))
print(report)

# %%
# Along rays j = v * i the surface dies out only when v exceeds delta**2.
for v in (0.15, 0.25, 0.3, 0.35, 0.4):
    print(f"v={v:.2f}  F(500, {int(v * 500)}) = {probe(table, v):.3e}")

# %%
# A look at the front: the first j where F drops below 1e-6, per i.
for i in (100, 200, 300, 400, 500):
    j = int(np.argmax(table.F[i] < 1e-6))
    print(f"i={i}  front at j={j}  (j/i = {j / i:.3f})")
