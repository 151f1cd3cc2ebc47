"""
High noise, low noise, and the velocity bounds
==============================================

Above ``p = 1/48`` each link is wrapped in a repetition code; well below it
the relays can be spaced out so most nodes just forward.
"""

from fractions import Fraction

import numpy as np

from infovelocity.analysis import (low_noise_spacing, low_noise_t1, minimal_repetitions,
                                   nonzero_level_fraction, onebit_error_recursion,
                                   repetition_count, velocity_bounds)
from infovelocity.multibit import MultiBitParams
from infovelocity.onebit import OneBitParams, effective_crossover, onebit_batch

# %%
# High noise.  Hoeffding gives a repetition count; the exact binomial tail
# shows it is conservative.
p = 0.25
N = repetition_count(p, Fraction(1, 48))
print("Hoeffding N:", N, " exact minimum:", minimal_repetitions(p, Fraction(1, 48)))
print("majority error with N repeats:", effective_crossover(p, N))
out = onebit_batch(64, p, OneBitParams(r=N), seed=0, trials=np.arange(5000))
print("m=64 with r=31: error", 1 - out.correct.mean(), " n =", out.n_total)

# %%
# The level recursion below and at its fixed point.
print(onebit_error_recursion(Fraction(1, 48), L=4).eps)
print([f"{float(e):.2e}" for e in onebit_error_recursion(Fraction(1, 96), L=6).eps])

# %%
# Low noise.  Spacing the relays by c puts nearly every node at level 0.
p = 0.001
c = low_noise_spacing(p)
out = onebit_batch(4000, p, OneBitParams(c=c), seed=0, trials=np.arange(200))
print(f"c={c}  n/m={out.n_total / 4000:.4f}  error={1 - out.correct.mean():.3f}")

# %%
# The multi-bit analogue widens t_1 instead.
t1 = low_noise_t1(1e-6, MultiBitParams())
print("t_1 =", t1, " decoding fraction:", nonzero_level_fraction(10 ** 6,
                                                                MultiBitParams().with_t1(t1)))

# %%
# Achievable and converse bounds on the velocity.
for p in (0.01, 1 / 48, 0.05, 0.1, 0.25, 0.4):
    v = velocity_bounds(p)
    print(f"p={p:.4f}  {v.lower:.4f} <= v <= {v.upper:.4f}")
