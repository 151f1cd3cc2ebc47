"""
Sending k bits: block redundancy and recursive codes
====================================================

With ``k`` bits a majority vote no longer suffices.  Each level splits its
message into ``b_l`` blocks and appends a few redundancy blocks that can
repair any single corrupted block.
"""

import numpy as np

from infovelocity.analysis import multibit_error_bound
from infovelocity.channel import ChainNoise
from infovelocity.hamming import BlockCode, decode_blocks, encode_blocks
from infovelocity.multibit import (AnytimeEncoder, LevelDims, MultiBitParams, MultiBitSchedule,
                                   decode_level, encode_level, multibit_batch, run_multibit)

# %%
# A bit-wise shortened Hamming code over whole blocks.
rng = np.random.default_rng(0)
data = rng.integers(0, 2, (6, 8), dtype=np.uint8)
coded = encode_blocks(data)
print(BlockCode.build(6, 8))
coded[2] ^= rng.integers(0, 2, 8, dtype=np.uint8)       # wreck block 2
print("recovered:", np.array_equal(decode_blocks(coded, 6), data))

# %%
# Level sizes with the default sequences t_l = (l+2)**2, b_l = (l+2)**2 // 4.
params = MultiBitParams()
dims = LevelDims.build(params, 4)
print("k_l:", dims.k_of)
print("n_l:", dims.n_of)

# %%
# Any one sub-block of a level-2 codeword may be destroyed.
msg = rng.integers(0, 2, 8, dtype=np.uint8)
word = encode_level(msg, 2, params)
word[5:10] ^= 1
print("level-2 repair:", np.array_equal(decode_level(word, 2, params), msg))

# %%
# Over a chain of 144 hops.
p = 3 ** -8 / 8
for k in (2, 8, 16):
    sched = MultiBitSchedule.build(144, k, params)
    out = multibit_batch(144, k, p, params, seed=0, trials=np.arange(2000))
    bound = multibit_error_bound(144, k, p, params)
    print(f"k={k:2d} case={sched.case} level={sched.decode_level} blocks={sched.block_count} "
          f"errors={int((~out.correct).sum())}/2000 bound={bound.loose:.1e} n={out.n_total}")

# %%
# A single run through the step engine, for its delays.
print(run_multibit(rng.integers(0, 2, 16), 144, p, params, ChainNoise(3), engine="step"))

# %%
# The anytime encoder never revises what it has sent.
enc = AnytimeEncoder(params)
for bit in [1, 0, 1, 1]:
    print(bit, "->", enc.push(bit))
