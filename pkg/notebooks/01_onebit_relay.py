"""
Relaying one bit down a noisy chain
===================================

A bit crosses ``m`` binary symmetric channels in a row.  Plain forwarding
lets errors pile up hop after hop; the level-based relay keeps the error
bounded while the total time stays linear in ``m``.
"""

from fractions import Fraction

import numpy as np

from infovelocity.analysis import delay_budget, onebit_exact_error
from infovelocity.channel import ChainNoise
from infovelocity.onebit import (LevelSchedule, OneBitParams, decode_block, onebit_batch,
                                 run_onebit)

# %%
# Relay levels.  Relay ``i`` has level ``l`` when ``4**l`` divides ``i`` but
# ``4**(l+1)`` does not; a level-``l`` relay reads ``3**l`` bits at a time.
sched = LevelSchedule.build(64)
print("decoder level L =", sched.L)
print("levels of relays 1..20:", sched.levels[:20])
print("relays at level >= l:", [sched.count_at_least(l) for l in range(4)])

# %%
# The decoder is a recursive majority of three.
bits = [1, 1, 0, 1, 0, 0, 0, 1, 1]
print("level-2 decode of", bits, "->", decode_block(bits, 2))

# %%
# One run, in full detail.  The ``step`` engine moves one bit per link per
# time step and measures the delays directly.
p = Fraction(1, 48)
res = run_onebit(1, 256, p, noise=ChainNoise(seed=1), engine="step")
print(res)
print("budget:", delay_budget(256))

# %%
# Many runs.  The batch engine consumes the same flips and is checked to
# agree with the step engine, so it is used for Monte Carlo.
for m, n in ((16, 10_000), (64, 10_000), (256, 10_000), (1024, 2000)):
    out = onebit_batch(m, p, seed=0, trials=np.arange(n))
    rate = 1 - out.correct.mean()
    print(f"m={m:5d}  error={rate:.4f}  exact={onebit_exact_error(p, m):.4f}  "
          f"n={out.n_total}  m/n={m / out.n_total:.3f}")

# %%
# Compare with plain forwarding, whose error tends to one half.
for m in (16, 64, 256, 1024):
    print(f"m={m:5d}  forwarding error={0.5 * (1 - (1 - 2 / 48) ** m):.4f}")

# %%
# Wider majorities work too, as long as t > b.
params = OneBitParams(b=5, t=6)
out = onebit_batch(216, 0.02, params, seed=0, trials=np.arange(5000))
print("b=5, t=6, m=216: error", 1 - out.correct.mean(), " n =", out.n_total)
