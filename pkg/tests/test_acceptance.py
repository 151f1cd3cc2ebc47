"""
Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line through the ``criterion`` fixture;
the lines are repeated in the terminal summary.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from infovelocity.analysis import (delay_budget, low_noise_spacing, minimal_repetitions,
                                   multibit_error_bound,
                                   onebit_error_recursion, repetition_count, velocity_bounds)
from infovelocity.baseline import p0_params, p1_plan
from infovelocity.channel import ChainNoise, derive_keys
from infovelocity.cli import main as cli_main
from infovelocity.converse import (ConverseParams, converse_table, envelope, find_envelope_c,
                                   verify_envelope)
from infovelocity.engine import run_batch
from infovelocity.hamming import decode_blocks, encode_blocks, redundancy_count
from infovelocity.multibit import AnytimeEncoder, MultiBitParams, multibit_plan, run_multibit
from infovelocity.onebit import (OneBitParams, StreamingDecoder, decode_block, decode_blocks
                                 as onebit_decode_blocks, decoder_level, effective_crossover,
                                 onebit_plan, run_onebit)
from infovelocity.simulator import SimConfig, run_trials


def se_at(bound, n):
    return math.sqrt(bound * (1 - bound) / n)


def ilog4(m):
    L = 0
    while 4 ** (L + 1) <= m:
        L += 1
    return L


@pytest.fixture(scope="module")
def thm1_runs():
    return {m: run_trials(SimConfig("onebit", m, Fraction(1, 48), trials=10 ** 4,
                                    master_seed=101)) for m in (16, 64, 256)}


def test_c01_one_bit_error_at_most_one_twelfth(thm1_runs, criterion):
    parts = [(m, s.estimate.rate, s.estimate.ci_high) for m, s in thm1_runs.items()]
    ok = all(rate <= 1 / 12 and hi < 1 / 12 for _, rate, hi in parts)
    detail = ", ".join(f"m={m}: rate={r:.4f} ci_high={h:.4f}" for m, r, h in parts)
    assert criterion(1, ok, detail + " (need <= 1/12 = 0.0833)")


def test_c02_delay_bounds(thm1_runs, criterion):
    ok, notes = True, []
    for m, s in thm1_runs.items():
        want = 3 ** ilog4(m)
        tx = (s.transmission_delay.min, s.transmission_delay.max)
        prop_max = s.propagation_delay.max
        ok &= tx == (want, want) and prop_max <= 4 * m
        # the literal time-step engine must measure the same delays
        for seed in range(3):
            r = run_onebit(seed % 2, m, Fraction(1, 48), noise=ChainNoise(seed), engine="step")
            ok &= r.transmission_delay == want and r.propagation_delay <= 4 * m
            ok &= r.propagation_delay == s.propagation_delay.max
        notes.append(f"m={m}: tx={tx[0]} (3^{ilog4(m)}={want}) prop={prop_max}<= {4 * m}")
    assert criterion(2, ok, "; ".join(notes))


def test_c03_squaring_law(criterion):
    table = onebit_error_recursion(Fraction(1, 96), L=9)
    logs = [math.log(e.numerator) - math.log(e.denominator) for e in table.eps]
    ratios = {l: logs[l + 1] / logs[l] for l in range(2, 9)}
    ratio_ok = all(1.9 <= r <= 2.1 for r in ratios.values())
    emp_ok, notes = True, []
    for m, n in [(16, 4000), (64, 4000), (256, 2000), (1024, 1000)]:
        s = run_trials(SimConfig("onebit", m, Fraction(1, 96), trials=n, master_seed=303))
        bound = float(table.eps[ilog4(m)])
        good = s.estimate.rate <= bound + 3 * se_at(bound, n)
        emp_ok &= good
        notes.append(f"m={m}: {s.estimate.rate:.2e}<={bound:.2e}+3SE {'ok' if good else 'NO'}")
    ratio_txt = " ".join(f"{l}:{r:.3f}" for l, r in ratios.items())
    detail = (f"ratios [{ratio_txt}] {'in' if ratio_ok else 'NOT all in'} [1.9, 2.1]; "
              f"empirical {'ok' if emp_ok else 'FAILED'} ({'; '.join(notes)})")
    assert criterion(3, ratio_ok and emp_ok, detail)


def test_c04_hamming_exhaustive(criterion):
    rng = np.random.default_rng(404)
    cases = 0
    ok = True
    for b in range(2, 13):
        for k in (1, 8):
            data = rng.integers(0, 2, (b, k), dtype=np.uint8)
            coded = encode_blocks(data)
            patterns = [np.ones(k, np.uint8)] + [np.eye(k, dtype=np.uint8)[i] for i in range(k)]
            patterns += [rng.integers(0, 2, k, dtype=np.uint8) for _ in range(100)]
            for idx in range(coded.shape[0]):
                bad = np.repeat(coded[None], len(patterns), axis=0)
                bad[:, idx, :] ^= np.array(patterns)
                out = decode_blocks(bad, b)
                ok &= bool(np.all(out == data[None]))
                cases += len(patterns)
    red_ok = all(redundancy_count(b) == math.ceil(math.log2(b)) + 1 for b in range(3, 2 ** 16 + 1))
    assert criterion(4, ok and red_ok, f"{cases} corruptions recovered={ok}; "
                                       f"red(b)=ceil(log2 b)+1 for 3<=b<=2^16: {red_ok}")


def test_c05_multibit(criterion):
    p = Fraction(1, 8 * 3 ** 8)
    params = MultiBitParams()
    ok, notes = True, []
    for k in (2, 8, 16):
        s = run_trials(SimConfig("multibit", 144, p, k=k, trials=2000, master_seed=505))
        bound = multibit_error_bound(144, k, p, params).loose
        rate_ok = s.estimate.errors == 0 or s.estimate.rate <= bound + 3 * se_at(bound, 2000)
        budget = delay_budget(144, params, k=k).total
        time_ok = s.n_total.max <= budget
        msg = np.random.default_rng(k).integers(0, 2, k, dtype=np.uint8)
        step = run_multibit(msg, 144, p, params, ChainNoise(k), engine="step")
        time_ok &= step.n_total == s.n_total.max
        ok &= rate_ok and time_ok
        notes.append(f"k={k}: errors={s.estimate.errors} bound={bound:.2e} "
                     f"n={s.n_total.max}<={budget}")
    assert criterion(5, ok, "; ".join(notes))


def test_c06_high_noise_repetition(criterion):
    n_rep = repetition_count(0.25, Fraction(1, 48))
    q = Fraction(1, 4)
    tail = sum(math.comb(31, j) * q ** j * (1 - q) ** (31 - j) for j in range(16, 32))
    exact_ok = tail < Fraction(1, 48) and math.isclose(effective_crossover(0.25, 31), float(tail),
                                                       rel_tol=1e-12)
    s = run_trials(SimConfig("onebit", 64, 0.25, params=OneBitParams(r=31), trials=5000,
                             master_seed=606))
    ok = n_rep == 31 and exact_ok and s.estimate.rate <= 1 / 12
    assert criterion(6, ok, f"N={n_rep}, tail={float(tail):.5f}<1/48: {exact_ok}, "
                            f"rate(r=31, m=64)={s.estimate.rate:.4f}<=1/12")


def test_c07_low_noise_spacing(criterion):
    c = low_noise_spacing(0.001)
    m = 4000
    params = OneBitParams(c=c)
    s = run_trials(SimConfig("onebit", m, 0.001, params=params, trials=300, master_seed=707))
    step = run_onebit(1, m, 0.001, params, ChainNoise(7), engine="step")
    ratio = max(s.n_total.max, step.n_total) / m
    limit = 1 + 3 / c + s.transmission_delay.max / m
    ok = c == 20 and ratio <= limit and step.n_total == s.n_total.max
    assert criterion(7, ok, f"c={c}, n/m={ratio:.4f} <= 1+3/c+tx/m={limit:.4f}, "
                            f"errors={s.estimate.errors}/300")


def test_c08_converse(criterion):
    delta, gamma = 0.5, 0.3
    c = find_envelope_c(gamma, delta)
    table = converse_table(delta, 500, 500)
    params = ConverseParams(delta, gamma, c, 0.35)
    residual = float(np.max(table.F - envelope(params, 500, 500)))
    rep = verify_envelope(table, params, tol=1e-12)
    i = np.arange(501)
    closed = float(np.max(np.abs(table.F[:, 1] - (1 - (1 - delta ** 2) ** i))))
    ok = rep.within and residual <= 1e-12 and table(500, 175) < 1e-6 and closed <= 1e-12
    assert criterion(8, ok, f"c={c:.6f}, max residual={residual:.1e}, "
                            f"F(500,175)={table(500, 175):.3e}, |F(i,1)-closed|={closed:.1e}")


def test_c09_velocity_ordering(criterion):
    grid = [0.01 + 0.04 * i for i in range(12)]
    ok = True
    for p in grid:
        v = velocity_bounds(p)
        ok &= v.lower <= v.upper and math.isclose(v.upper, (1 - 2 * p) ** 2, rel_tol=1e-12)
    anchor = velocity_bounds(Fraction(1, 48)).lower
    ok &= anchor == 0.25
    assert criterion(9, ok, f"{len(grid)} grid points ordered; v(1/48) lower={anchor}")


def test_c10_baselines(criterion):
    m, p = 64, 0.1
    s = run_trials(SimConfig("p0", m, p, params=p0_params(m, p), trials=2000, master_seed=1010))
    p0_ok = s.estimate.rate <= 1 / m + 3 * se_at(1 / m, 2000)
    r = minimal_repetitions(p, Fraction(1, 48))
    main_params = OneBitParams(r=r)
    p1_ratio, main_ratio = [], []
    for mm in (64, 256, 1024):
        s1 = run_trials(SimConfig("p1", mm, p, trials=10, master_seed=1011))
        assert s1.n_total.max == p1_plan(mm, p).n_total
        p1_ratio.append(s1.n_total.max / mm)
        sm = run_trials(SimConfig("onebit", mm, p, params=main_params, trials=10,
                                  master_seed=1012))
        main_ratio.append(sm.n_total.max / mm)
    increasing = p1_ratio[0] < p1_ratio[1] < p1_ratio[2]
    main_cap = 5 * r      # r * (4 m propagation + at most m transmission) / m
    bounded = all(x <= main_cap for x in main_ratio)
    ok = p0_ok and increasing and bounded
    assert criterion(10, ok, f"P0 rate={s.estimate.rate:.4f}<=1/64+3SE; P1 n/m="
                             f"{[round(x, 2) for x in p1_ratio]}; main n/m="
                             f"{[round(x, 2) for x in main_ratio]}<= {main_cap}")


def test_c11_property_suites(criterion, tmp_path, capsys):
    rng = np.random.default_rng(1111)
    checks = {}
    # decoder idempotence
    idem = True
    for level in range(4):
        blocks = rng.integers(0, 2, (500, 3 ** level), dtype=np.uint8)
        v = onebit_decode_blocks(blocks, level, 3)
        again = onebit_decode_blocks(np.repeat(v[:, None], 3 ** level, axis=1), level, 3)
        idem &= bool(np.array_equal(v, again))
    checks["idempotence"] = idem
    # complement symmetry under paired seeds
    plan = onebit_plan(256)
    keys = derive_keys(1112, np.arange(4000), np.arange(256))
    zero = run_batch(plan, np.zeros((4000, plan.length), np.uint8), keys, Fraction(1, 48))
    one = run_batch(plan, np.ones((4000, plan.length), np.uint8), keys, Fraction(1, 48))
    checks["complement"] = bool(np.array_equal(zero.estimates, 1 - one.estimates))
    # streaming equals batch decoding
    stream_ok = True
    for level in (1, 2, 3):
        blocks = rng.integers(0, 2, (10 ** 4, 3 ** level), dtype=np.uint8)
        batch = onebit_decode_blocks(blocks, level, 3)
        for row, want in zip(blocks, batch):
            dec = StreamingDecoder(level)
            for bit in row:
                dec.feed(bit)
            stream_ok &= dec.finish() == want
    checks["streaming"] = bool(stream_ok)
    # anytime encoder prefix property up to k_3 = 48
    enc, prefix_ok, prev = AnytimeEncoder(MultiBitParams()), True, []
    for bit in rng.integers(0, 2, 48):
        enc.push(int(bit))
        prefix_ok &= enc.emitted[:len(prev)] == prev
        prev = list(enc.emitted)
    checks["anytime prefix"] = prefix_ok
    # determinism across parallelism
    outs = []
    for jobs in ("1", "4"):
        path = tmp_path / f"run{jobs}.csv"
        cli_main(["sweep", "--protocol", "onebit", "--m", "16,64", "--p", "1/48", "--trials",
                  "3000", "--seed", "11", "--jobs", jobs, "--out", str(path)])
        outs.append(path.read_bytes())
    checks["parallel determinism"] = outs[0] == outs[1]
    ok = all(checks.values())
    assert criterion(11, ok, ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
