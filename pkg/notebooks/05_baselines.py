"""
Simpler protocols that fall short
=================================

Repeating every bit ``O(log m)`` times per hop keeps errors down but costs
a growing factor in time.  Sub-chaining helps, yet ``n/m`` still creeps up.
"""

import numpy as np

from infovelocity.analysis import minimal_repetitions
from infovelocity.baseline import baseline_batch, p0_params, p0_plan, p1_layout, p1_plan
from infovelocity.onebit import OneBitParams, onebit_plan

p = 0.1

# %%
params = p0_params(64, p)
out = baseline_batch(p0_plan(64, params), p, seed=0, trials=np.arange(2000))
print(params, " error:", 1 - out.correct.mean(), " n =", out.n_total)

# %%
# Time per hop as the chain grows.  All three size their repetitions by the
# exact binomial tail; the main protocol only needs each link below 1/48.
r = minimal_repetitions(p, 1 / 48)
print(" m     P0 n/m   P1 n/m   main n/m")
for m in (64, 256, 1024, 4096):
    p0 = p0_plan(m, p0_params(m, p)).n_total / m
    p1 = p1_plan(m, p).n_total / m
    main = onebit_plan(m, OneBitParams(r=r)).n_total / m
    print(f"{m:5d}  {p0:7.2f}  {p1:7.2f}  {main:7.2f}")

print("main protocol repetitions:", r)
print(p1_layout(64, p))
