import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from infovelocity.analysis import onebit_exact_error
from infovelocity.channel import ChainNoise, derive_keys
from infovelocity.engine import CausalityError, run_batch, run_steps, vote
from infovelocity.onebit import (ChainParams, LevelSchedule, OneBitParams, StreamingDecoder,
                                 decode_block, decode_blocks, decoder_level,
                                 effective_crossover, majority, node_level, onebit_batch,
                                 onebit_plan, run_onebit, run_onebit_chained,
                                 streaming_decoder_feed, streaming_decoder_finish)


def ref_decode(bits, b):
    # textbook recursion on python lists
    if len(bits) == 1:
        return bits[0]
    w = len(bits) // b
    votes = [ref_decode(bits[i * w:(i + 1) * w], b) for i in range(b)]
    return int(sum(votes) * 2 > b)


@pytest.mark.parametrize("i,c,level", [(4, 1, 1), (6, 1, 0), (12, 3, 1), (5, 3, 0), (64, 1, 3),
                                       (48, 3, 2)])
def test_node_level(i, c, level):
    assert node_level(i, OneBitParams(c=c)) == level


@pytest.mark.parametrize("kw", [dict(b=2), dict(b=5, t=5), dict(c=0), dict(r=2), dict(b=1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        OneBitParams(**kw)


@pytest.mark.parametrize("m,c,L", [(1, 1, 0), (3, 1, 0), (4, 1, 1), (255, 1, 3), (256, 1, 4),
                                   (1023, 1, 4), (4000, 20, 3), (79, 20, 0), (80, 20, 1)])
def test_decoder_level_integer_log(m, c, L):
    assert decoder_level(m, OneBitParams(c=c)) == L


def test_level_counts_bounded():
    params = OneBitParams()
    sched = LevelSchedule.build(1000, params)
    for l in range(5):
        assert sched.count_at_least(l) <= 1000 / 4 ** l


@pytest.mark.parametrize("bits,out", [([0, 1, 1], 1), ([0, 0, 0], 0), ([1, 0, 1, 0, 1], 1)])
def test_majority(bits, out):
    assert majority(bits) == out


def test_majority_rejects_even():
    with pytest.raises(ValueError):
        majority([0, 1])


def test_decode_block_examples():
    assert decode_block([1], 0) == 1
    assert decode_block([1, 1, 0, 1, 0, 0, 0, 1, 1], 2) == 1
    assert decode_block([0, 0, 0], 1) == 0
    with pytest.raises(ValueError):
        decode_block([0, 1], 1)


@given(st.lists(st.integers(0, 1), min_size=27, max_size=27))
def test_decode_matches_reference(bits):
    assert decode_block(bits, 3) == ref_decode(bits, 3)


@given(st.sampled_from([3, 5]), st.integers(0, 3), st.data())
def test_decoder_idempotence(b, level, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=b ** level, max_size=b ** level))
    v = decode_block(bits, level, b)
    assert decode_block([v] * b ** level, level, b) == v


@given(st.lists(st.integers(0, 1), min_size=81, max_size=81))
def test_decoder_complement(bits):
    assert decode_block([1 - x for x in bits], 4) == 1 - decode_block(bits, 4)


def test_streaming_examples():
    state = StreamingDecoder(2)
    for bit in [1, 1, 0, 1, 0, 0, 0, 1, 1]:
        state = streaming_decoder_feed(state, bit)
    assert streaming_decoder_finish(state) == 1
    assert StreamingDecoder(0).feed(1).finish() == 1
    with pytest.raises(ValueError):
        StreamingDecoder(2).feed(1).finish()


@pytest.mark.parametrize("level", [1, 2, 3])
def test_streaming_equals_batch(level):
    rng = np.random.default_rng(level)
    blocks = rng.integers(0, 2, size=(10 ** 4, 3 ** level), dtype=np.uint8)
    batch = decode_blocks(blocks, level, 3)
    stream = np.empty(len(blocks), dtype=np.uint8)
    for n, row in enumerate(blocks):
        s = StreamingDecoder(level)
        for bit in row:
            s.feed(bit)
        stream[n] = s.finish()
    assert np.array_equal(stream, batch)


def test_streaming_memory_is_bounded():
    s = StreamingDecoder(4)
    peak = 0
    for bit in np.random.default_rng(0).integers(0, 2, 81):
        s.feed(bit)
        peak = max(peak, sum(len(row) for row in s.pending))
    assert peak <= 4 * 3 + 1


@pytest.mark.parametrize("p,r", [(0.25, 31), (0.1, 7), (0.4, 101), (0.3, 1)])
def test_effective_crossover_matches_binomial_tail(p, r):
    assert math.isclose(effective_crossover(p, r), binom.sf(r // 2, r, p), rel_tol=1e-10)


def test_effective_crossover_edges():
    assert effective_crossover(0.2, 1) == pytest.approx(0.2)
    assert effective_crossover(0, 51) == 0.0
    assert effective_crossover(0.25, 31) < 1 / 48
    assert 0 < effective_crossover(0.45, 10001) < 1e-20
    with pytest.raises(ValueError):
        effective_crossover(0.1, 4)


@pytest.mark.parametrize("m", [1, 2, 5, 16, 100])
def test_noiseless_chain_is_exact(m):
    for theta in (0, 1):
        res = run_onebit(theta, m, 0)
        assert res.correct and res.estimate == theta


def test_delays_at_256():
    res = run_onebit(1, 256, Fraction(1, 48), noise=ChainNoise(5))
    assert res.transmission_delay == 81
    assert res.propagation_delay <= 4 * 256
    assert res.n_total == res.transmission_delay + res.propagation_delay


@pytest.mark.parametrize("m,params", [(17, OneBitParams()), (64, OneBitParams()),
                                      (70, OneBitParams(c=3, r=3)), (30, OneBitParams(b=5, t=6))])
def test_step_engine_equals_batch(m, params):
    for seed in range(4):
        noise = ChainNoise(seed=seed)
        a = run_onebit(seed % 2, m, 0.15, params, noise, engine="batch")
        b = run_onebit(seed % 2, m, 0.15, params, noise, engine="step")
        assert a == b


def test_chained_step_equals_batch():
    noise = ChainNoise(seed=3)
    a = run_onebit_chained(1, 40, 0.1, chain=ChainParams(0.3), noise=noise)
    b = run_onebit_chained(1, 40, 0.1, chain=ChainParams(0.3), noise=noise, engine="step")
    assert a == b


def test_causality_audit_is_clean():
    plan = onebit_plan(64)
    noise = ChainNoise(seed=1)
    _, trace = run_steps(plan, [1] * plan.length, [noise.tape(j) for j in range(64)], 0.1,
                         audit=True)
    assert trace.audit_log and all(dep < step for step, _, dep in trace.audit_log)


def test_causality_audit_catches_violation():
    plan = onebit_plan(8)
    noise = ChainNoise(seed=1)

    tapes = [noise.tape(j) for j in range(8)]
    import infovelocity.engine as eng
    original = eng._Relay.receive

    def bad_receive(self, bit, step):
        original(self, bit, step)
        if self.out:
            b, _ = self.out[-1]
            self.out[-1] = (b, step + 1)

    eng._Relay.receive = bad_receive
    try:
        with pytest.raises(CausalityError):
            run_steps(plan, [0] * plan.length, tapes, 0.1, audit=True)
    finally:
        eng._Relay.receive = original


def test_complement_symmetry_per_tape():
    for seed in range(20):
        noise = ChainNoise(seed=seed)
        a = run_onebit(0, 100, 0.2, noise=noise)
        b = run_onebit(1, 100, 0.2, noise=noise)
        assert a.estimate == 1 - b.estimate


def test_complement_symmetry_paired_seeds():
    plan = onebit_plan(64)
    trials = np.arange(3000)
    keys = derive_keys(21, trials, np.arange(64))
    zeros = np.zeros((3000, plan.length), np.uint8)
    e0 = run_batch(plan, zeros, keys, 0.05, truth=np.zeros((3000, 1), np.uint8))
    e1 = run_batch(plan, zeros + 1, keys, 0.05, truth=np.ones((3000, 1), np.uint8))
    assert e0.correct.sum() == e1.correct.sum()
    assert np.array_equal(e0.estimates, 1 - e1.estimates)


def test_exact_error_oracle_matches_monte_carlo():
    params = OneBitParams()
    for m, p in [(64, 0.05), (100, Fraction(1, 48)), (30, 0.1)]:
        res = onebit_batch(m, p, params, seed=2, trials=np.arange(20000))
        exact = onebit_exact_error(p, m, params)
        rate = 1 - res.correct.mean()
        assert abs(rate - exact) <= 4 * math.sqrt(exact * (1 - exact) / 20000) + 1e-4


def test_exact_error_oracle_small_chain_by_enumeration():
    # m = 4: three level-0 hops then the level-1 decoder on 3 bits
    p = 0.1
    q = 0.5 * (1 - (1 - 2 * p) ** 4)
    want = 3 * q ** 2 * (1 - q) + q ** 3
    assert math.isclose(onebit_exact_error(p, 4), want, rel_tol=1e-12)


def test_noise_dominance_statistical():
    n = 10 ** 4
    lo = 1 - onebit_batch(64, 0.02, seed=4, trials=np.arange(n)).correct.mean()
    hi = 1 - onebit_batch(64, 0.04, seed=5, trials=np.arange(n)).correct.mean()
    se = math.sqrt(lo * (1 - lo) / n + hi * (1 - hi) / n)
    assert lo <= hi + 3 * se


def test_chained_instances_and_delay_identity():
    chain = ChainParams()
    assert chain.instances(256) == 4
    assert chain.instances(1) == 1
    single = run_onebit(0, 256, 1 / 96)
    res = run_onebit_chained(0, 256, 1 / 96, chain=chain)
    assert res.transmission_delay == 4 * single.transmission_delay
    assert res.n_total == single.propagation_delay + 4 * single.transmission_delay
    with pytest.raises(ValueError):
        ChainParams(1.0)


def test_chained_not_worse_than_single():
    n = 3000
    single = onebit_batch(256, 1 / 96, seed=8, trials=np.arange(n))
    chained = onebit_batch(256, 1 / 96, seed=8, trials=np.arange(n),
                           instances=ChainParams().instances(256))
    e1, e4 = 1 - single.correct.mean(), 1 - chained.correct.mean()
    se = math.sqrt(e1 * (1 - e1) / n + e4 * (1 - e4) / n)
    assert e4 <= e1 + 3 * se


def test_vote_tie_goes_to_first_entry():
    assert list(vote(np.array([[1, 0], [0, 1], [1, 1]]))) == [1, 0, 1]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2 ** 32))
def test_random_chain_engines_agree(m, seed):
    noise = ChainNoise(seed=seed)
    assert run_onebit(1, m, 0.2, noise=noise) == run_onebit(1, m, 0.2, noise=noise,
                                                          engine="step")
