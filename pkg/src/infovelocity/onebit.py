"""
One-bit relay protocol with recursive majority decoding.

Relay ``i`` gets a level from divisibility of its index: level ``l`` when
``c * t**l`` divides ``i`` but ``c * t**(l+1)`` does not (level 0 when ``c``
does not divide ``i``).  A level-``l`` relay buffers ``b**l`` logical bits,
decodes them by a depth-``l`` tree of ``b``-ary majorities and re-emits the
verdict ``b**l`` times.  The encoder repeats the bit ``b**L`` times with
``L = floor(log_t(m / c))`` and the last node decodes at level ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import (ChainNoise, Probability, derive_keys, draw_thetas, exact,
                      validate_crossover)
from .engine import ChainPlan, Stage, TrialResult, run_batch, run_steps, vote


@dataclass(frozen=True)
class OneBitParams:
    """Protocol constants: majority arity ``b``, level spacing base ``t``,
    level-0 spacing multiplier ``c`` and per-link repetitions ``r``."""

    b: int = 3
    t: int = 4
    c: int = 1
    r: int = 1

    def __post_init__(self):
        if self.b < 3 or self.b % 2 == 0:
            raise ValueError("b must be odd and >= 3")
        if self.t <= self.b:
            raise ValueError("t must exceed b")
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if self.r < 1 or self.r % 2 == 0:
            raise ValueError("r must be odd and >= 1")


@dataclass(frozen=True)
class ChainParams:
    """Back-to-back protocol instances: ``ceil(m**alpha)`` of them."""

    alpha: float = 1 - math.log(3) / math.log(4)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def instances(self, m: int) -> int:
        return max(1, math.ceil(m ** self.alpha - 1e-12))


def node_level(i: int, params: OneBitParams = OneBitParams()) -> int:
    """Level of relay ``i``."""
    if i < 1:
        raise ValueError("relay index must be >= 1")
    base = params.c
    if i % base:
        return 0
    level = 0
    while i % (base * params.t) == 0:
        base *= params.t
        level += 1
    return level


def decoder_level(m: int, params: OneBitParams = OneBitParams()) -> int:
    """``floor(log_t(m / c))``, or 0 when ``m < c * t`` (integer arithmetic)."""
    level, span = 0, params.c * params.t
    while span <= m:
        level += 1
        span *= params.t
    return level


@dataclass(frozen=True)
class LevelSchedule:
    m: int
    levels: tuple     # levels of relays 1..m-1
    L: int

    @classmethod
    def build(cls, m: int, params: OneBitParams = OneBitParams()) -> "LevelSchedule":
        if m < 1:
            raise ValueError("m must be >= 1")
        levels = tuple(node_level(i, params) for i in range(1, m))
        L = decoder_level(m, params)
        assert all(lv <= L for lv in levels)
        return cls(m, levels, L)

    def count_at_least(self, level: int) -> int:
        return sum(1 for lv in self.levels if lv >= level)


def majority(bits: Sequence[int]) -> int:
    """Majority of an odd-length bit sequence."""
    bits = list(bits)
    if len(bits) % 2 == 0:
        raise ValueError("majority needs an odd number of bits")
    return int(2 * sum(bits) > len(bits))


def decode_blocks(x: np.ndarray, level: int, b: int) -> np.ndarray:
    """Recursive ``b``-ary majority on the last axis (length ``b**level``)."""
    x = np.asarray(x, dtype=np.uint8)
    if x.shape[-1] != b ** level:
        raise ValueError(f"expected blocks of {b ** level} bits, got {x.shape[-1]}")
    for _ in range(level):
        x = vote(x.reshape(x.shape[:-1] + (-1, b)))
    return x[..., 0]


def decode_block(bits: Sequence[int], level: int, b: int = 3) -> int:
    """Level-``level`` decoding of one block of ``b**level`` bits."""
    return int(decode_blocks(np.asarray(bits, dtype=np.uint8), level, b))


class StreamingDecoder:
    """Level-``level`` decoder fed one bit at a time.

    Keeps one partial counter list per tree depth, so memory is ``O(level*b)``
    and each bit triggers at most ``level`` majority evaluations.
    """

    def __init__(self, level: int, b: int = 3):
        if level < 0:
            raise ValueError("level must be >= 0")
        if b < 3 or b % 2 == 0:
            raise ValueError("b must be odd and >= 3")
        self.level = level
        self.b = b
        self.pending = [[] for _ in range(level + 1)]
        self.fed = 0

    def feed(self, bit: int) -> "StreamingDecoder":
        if self.fed >= self.b ** self.level:
            raise ValueError("block already complete")
        self.fed += 1
        value, depth = int(bit), 0
        while depth < self.level:
            row = self.pending[depth]
            row.append(value)
            if len(row) < self.b:
                return self
            value = majority(row)
            row.clear()
            depth += 1
        self.pending[self.level].append(value)
        return self

    def finish(self) -> int:
        if self.fed != self.b ** self.level:
            raise ValueError(f"fed {self.fed} of {self.b ** self.level} bits")
        return self.pending[self.level][0]


def streaming_decoder_feed(state: StreamingDecoder, bit: int) -> StreamingDecoder:
    return state.feed(bit)


def streaming_decoder_finish(state: StreamingDecoder) -> int:
    return state.finish()


def effective_crossover(p: Probability, r: int) -> float:
    """Probability that a majority over ``r`` uses of BSC(p) is wrong.

    Exact binomial tail, summed in log space so ``r`` in the tens of
    thousands stays finite.
    """
    if r < 1 or r % 2 == 0:
        raise ValueError("r must be odd and >= 1")
    p = float(exact(p))
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    if p == 0:
        return 0.0
    if p == 1:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lgr = math.lgamma(r + 1)
    terms = [lgr - math.lgamma(k + 1) - math.lgamma(r - k + 1) + k * lp + (r - k) * lq
             for k in range((r + 1) // 2, r + 1)]
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(t - top) for t in terms))


def _level_transform(level: int, b: int):
    width = b ** level

    def transform(blocks: np.ndarray) -> np.ndarray:
        verdict = decode_blocks(blocks, level, b)
        return np.repeat(verdict[..., None], width, axis=-1)

    return transform


def onebit_plan(m: int, params: OneBitParams = OneBitParams(), instances: int = 1) -> ChainPlan:
    """Chain plan for ``instances`` back-to-back runs of the protocol."""
    sched = LevelSchedule.build(m, params)
    b, L = params.b, sched.L
    stages = {0: Stage()}
    for lv in set(sched.levels) - {0}:
        stages[lv] = Stage(b ** lv, _level_transform(lv, b), lv)
    width = b ** L

    def decode(stream: np.ndarray) -> np.ndarray:
        n = stream.shape[0]
        verdicts = decode_blocks(stream.reshape(n, instances, width), L, b)
        return vote(verdicts)[:, None]

    return ChainPlan(m, params.r, instances * width,
                     tuple(stages[lv] for lv in sched.levels), decode)


def _run(plan: ChainPlan, theta: int, p, noise: Optional[ChainNoise], engine: str) -> TrialResult:
    if theta not in (0, 1):
        raise ValueError("theta must be 0 or 1")
    validate_crossover(p)
    noise = noise or ChainNoise()
    sent = np.full((1, plan.length), theta, dtype=np.uint8)
    if engine == "batch":
        return run_batch(plan, sent, noise.keys(plan.m), p).trial(0)
    if engine == "step":
        tapes = [noise.tape(j) for j in range(plan.m)]
        est, trace = run_steps(plan, sent[0], tapes, p)
        return TrialResult(int(est[0]) == theta, int(est[0]), trace.transmission_delay,
                           trace.propagation_delay, trace.last_reception)
    raise ValueError(f"unknown engine {engine!r}")


def run_onebit(theta: int, m: int, p: Probability, params: OneBitParams = OneBitParams(),
               noise: Optional[ChainNoise] = None, engine: str = "batch") -> TrialResult:
    """Relay ``theta`` over ``m`` hops of BSC(p) once."""
    return _run(onebit_plan(m, params), theta, p, noise, engine)


def run_onebit_chained(theta: int, m: int, p: Probability,
                       params: OneBitParams = OneBitParams(),
                       chain: ChainParams = ChainParams(),
                       noise: Optional[ChainNoise] = None, engine: str = "batch") -> TrialResult:
    """``ceil(m**alpha)`` pipelined instances with a majority over their verdicts.

    With an even instance count a tie is settled by the first instance.
    """
    return _run(onebit_plan(m, params, chain.instances(m)), theta, p, noise, engine)


def onebit_batch(m: int, p: Probability, params: OneBitParams = OneBitParams(),
                 seed: int = 0, trials: Sequence[int] = (0,), instances: int = 1):
    """Run many trials at once; thetas and tapes come from ``seed``."""
    plan = onebit_plan(m, params, instances)
    trials = np.asarray(trials)
    thetas = draw_thetas(seed, trials)
    sent = np.repeat(thetas[:, None], plan.length, axis=1)
    keys = derive_keys(seed, trials, np.arange(m))
    return run_batch(plan, sent, keys, p, truth=thetas[:, None])
