"""
k-bit relay protocol built on recursive block-redundancy coding.

A level-``l`` codeword carries ``k_l = b_1 ... b_l`` message bits in
``n_l = (b_1 + red(b_1)) ... (b_l + red(b_l))`` bits: the message is cut
into ``b_l`` sub-blocks, ``red(b_l)`` redundancy blocks are added with
:mod:`infovelocity.hamming`, and every one of the ``b_l + red(b_l)`` blocks
is encoded at level ``l - 1``.  Relay ``j`` has the largest level ``l``
with ``t_1 ... t_l | j``; it decodes and re-encodes each ``n_l``-bit block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import hamming
from .channel import (ChainNoise, Probability, derive_keys, draw_messages,
                      validate_crossover)
from .engine import ChainPlan, Stage, TrialResult, run_batch, run_steps

MAX_LEVEL = 12


def default_t(level: int) -> int:
    return (level + 2) ** 2


def default_b(level: int) -> int:
    return (level + 2) ** 2 // 4


@dataclass(frozen=True)
class MultiBitParams:
    """Per-level block counts ``b_seq[l-1]`` and spacings ``t_seq[l-1]``."""

    b_seq: tuple = tuple(default_b(l) for l in range(1, MAX_LEVEL + 1))
    t_seq: tuple = tuple(default_t(l) for l in range(1, MAX_LEVEL + 1))
    r: int = 1

    def __post_init__(self):
        object.__setattr__(self, "b_seq", tuple(int(x) for x in self.b_seq))
        object.__setattr__(self, "t_seq", tuple(int(x) for x in self.t_seq))
        if not self.b_seq or len(self.b_seq) != len(self.t_seq):
            raise ValueError("b_seq and t_seq must be non-empty and of equal length")
        if min(self.b_seq) < 2:
            raise ValueError("every b_l must be >= 2")
        if min(self.t_seq) < 2:
            raise ValueError("every t_l must be >= 2")
        if self.r < 1 or self.r % 2 == 0:
            raise ValueError("r must be odd and >= 1")

    @property
    def max_level(self) -> int:
        return len(self.b_seq)

    def b(self, level: int) -> int:
        return self.b_seq[level - 1]

    def t(self, level: int) -> int:
        return self.t_seq[level - 1]

    def blocks(self, level: int) -> int:
        """``b_l + red(b_l)``: sub-blocks inside a level-``level`` codeword."""
        return self.b(level) + hamming.redundancy_count(self.b(level))

    def k_of(self, level: int) -> int:
        out = 1
        for l in range(1, level + 1):
            out *= self.b(l)
        return out

    def n_of(self, level: int) -> int:
        out = 1
        for l in range(1, level + 1):
            out *= self.blocks(l)
        return out

    def spacing(self, level: int) -> int:
        """``t_1 ... t_level``."""
        out = 1
        for l in range(1, level + 1):
            out *= self.t(l)
        return out

    def with_t1(self, t1: int) -> "MultiBitParams":
        return MultiBitParams(self.b_seq, (t1,) + self.t_seq[1:], self.r)


@dataclass(frozen=True)
class LevelDims:
    k_of: tuple
    n_of: tuple

    @classmethod
    def build(cls, params: MultiBitParams, levels: Optional[int] = None) -> "LevelDims":
        levels = params.max_level if levels is None else levels
        return cls(tuple(params.k_of(l) for l in range(levels + 1)),
                   tuple(params.n_of(l) for l in range(levels + 1)))


def node_level_multibit(j: int, params: MultiBitParams = MultiBitParams()) -> int:
    """Largest ``l`` with ``t_1 ... t_l | j`` (0 if ``t_1`` does not divide ``j``)."""
    if j < 1:
        raise ValueError("relay index must be >= 1")
    level, span = 0, 1
    while level < params.max_level and j % (span * params.t(level + 1)) == 0:
        span *= params.t(level + 1)
        level += 1
    if level == params.max_level:
        raise ValueError("relay level exceeds the configured parameter sequences")
    return level


def message_level(k: int, params: MultiBitParams) -> int:
    """``L`` with ``k_L <= k < k_{L+1}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    level = 0
    while params.k_of(level + 1) <= k:
        level += 1
        if level >= params.max_level:
            raise ValueError("message too long for the configured parameter sequences")
    return level


@dataclass(frozen=True)
class MultiBitSchedule:
    m: int
    k: int
    node_levels: tuple
    L_prime: int
    L: int
    decode_level: int
    case: int          # 1: padded to k_{L'}, one codeword; 2: ceil(k / k_L) codewords
    block_count: int
    pad: int

    @classmethod
    def build(cls, m: int, k: int, params: MultiBitParams = MultiBitParams()) -> "MultiBitSchedule":
        if m < 1:
            raise ValueError("m must be >= 1")
        levels = tuple(node_level_multibit(j, params) for j in range(1, m))
        L_prime = max(levels, default=0)
        L = message_level(k, params)
        D = max(L, L_prime)
        k_D = params.k_of(D)
        if k <= params.k_of(L_prime):
            case, blocks = 1, 1
        else:
            case, blocks = 2, -(-k // k_D)
        sched = cls(m, k, levels, L_prime, L, D, case, blocks, blocks * k_D - k)
        assert all(lv <= D for lv in levels)
        return sched

    def stream_bits(self, params: MultiBitParams) -> int:
        return self.block_count * params.n_of(self.decode_level)


def encode_level(message, level: int, params: MultiBitParams = MultiBitParams()) -> np.ndarray:
    """Level-``level`` encoding along the last axis: ``(..., k_l) -> (..., n_l)``."""
    x = np.asarray(message, dtype=np.uint8)
    if x.shape[-1] != params.k_of(level):
        raise ValueError(f"level-{level} messages have {params.k_of(level)} bits")
    if level == 0:
        return x.copy()
    lead = x.shape[:-1]
    sub = x.reshape(lead + (params.b(level), params.k_of(level - 1)))
    coded = hamming.encode_blocks(sub)
    inner = encode_level(coded, level - 1, params)
    return inner.reshape(lead + (params.n_of(level),))


def decode_level(bits, level: int, params: MultiBitParams = MultiBitParams()) -> np.ndarray:
    """Level-``level`` decoding along the last axis: ``(..., n_l) -> (..., k_l)``."""
    y = np.asarray(bits, dtype=np.uint8)
    if y.shape[-1] != params.n_of(level):
        raise ValueError(f"level-{level} codewords have {params.n_of(level)} bits")
    if level == 0:
        return y.copy()
    lead = y.shape[:-1]
    sub = y.reshape(lead + (params.blocks(level), params.n_of(level - 1)))
    inner = decode_level(sub, level - 1, params)
    data = hamming.decode_blocks(inner, params.b(level))
    return data.reshape(lead + (params.k_of(level),))


@dataclass
class EncodedMessage:
    bits: np.ndarray
    case: int
    level: int
    block_count: int
    pad: int


def encode_message(message, schedule: MultiBitSchedule,
                   params: MultiBitParams = MultiBitParams()) -> EncodedMessage:
    """Zero-pad and encode a ``k``-bit message (last axis) into the relay stream."""
    x = np.asarray(message, dtype=np.uint8)
    if x.shape[-1] != schedule.k:
        raise ValueError("message length does not match the schedule")
    D = schedule.decode_level
    padded = np.concatenate([x, np.zeros(x.shape[:-1] + (schedule.pad,), np.uint8)], axis=-1)
    blocks = padded.reshape(x.shape[:-1] + (schedule.block_count, params.k_of(D)))
    coded = encode_level(blocks, D, params).reshape(x.shape[:-1] + (-1,))
    return EncodedMessage(coded, schedule.case, D, schedule.block_count, schedule.pad)


def decode_message(bits, schedule: MultiBitSchedule,
                   params: MultiBitParams = MultiBitParams()) -> np.ndarray:
    """Inverse of :func:`encode_message`; strips padding using the known ``k``."""
    y = np.asarray(bits, dtype=np.uint8)
    D = schedule.decode_level
    blocks = y.reshape(y.shape[:-1] + (schedule.block_count, params.n_of(D)))
    data = decode_level(blocks, D, params).reshape(y.shape[:-1] + (-1,))
    return data[..., : schedule.k]


def _relay_transform(level: int, params: MultiBitParams):
    def transform(blocks: np.ndarray) -> np.ndarray:
        return encode_level(decode_level(blocks, level, params), level, params)
    return transform


def multibit_plan(m: int, k: int, params: MultiBitParams = MultiBitParams()):
    sched = MultiBitSchedule.build(m, k, params)
    stages = {0: Stage()}
    for lv in set(sched.node_levels) - {0}:
        stages[lv] = Stage(params.n_of(lv), _relay_transform(lv, params), lv)
    length = sched.block_count * params.n_of(sched.decode_level)
    plan = ChainPlan(m, params.r, length, tuple(stages[lv] for lv in sched.node_levels),
                     lambda stream: decode_message(stream, sched, params), k)
    return plan, sched


def run_multibit(message, m: int, p: Probability, params: MultiBitParams = MultiBitParams(),
                 noise: Optional[ChainNoise] = None, engine: str = "batch") -> TrialResult:
    """Relay a ``k``-bit message over ``m`` hops once."""
    msg = np.asarray(message, dtype=np.uint8).reshape(-1)
    validate_crossover(p)
    plan, sched = multibit_plan(m, msg.size, params)
    noise = noise or ChainNoise()
    sent = encode_message(msg[None, :], sched, params).bits
    if engine == "batch":
        res = run_batch(plan, sent, noise.keys(m), p, truth=msg[None, :])
        return res.trial(0, single_bit=False)
    if engine == "step":
        est, trace = run_steps(plan, sent[0], [noise.tape(j) for j in range(m)], p)
        return TrialResult(bool(np.array_equal(est, msg)), tuple(int(v) for v in est),
                           trace.transmission_delay, trace.propagation_delay,
                           trace.last_reception)
    raise ValueError(f"unknown engine {engine!r}")


def multibit_batch(m: int, k: int, p: Probability, params: MultiBitParams = MultiBitParams(),
                   seed: int = 0, trials: Sequence[int] = (0,)):
    plan, sched = multibit_plan(m, k, params)
    trials = np.asarray(trials)
    msgs = draw_messages(seed, trials, k)
    sent = encode_message(msgs, sched, params).bits
    return run_batch(plan, sent, derive_keys(seed, trials, np.arange(m)), p, truth=msgs)


@dataclass
class AnytimeEncoder:
    """Streaming encoder that never revises emitted bits.

    Each data bit goes out at once; whenever the message length reaches a
    multiple of ``k_l`` the level-``l`` redundancy blocks of the group just
    completed are appended, innermost level first, each encoded at level
    ``l - 1``.
    """

    params: MultiBitParams = field(default_factory=MultiBitParams)
    message: list = field(default_factory=list)
    emitted: list = field(default_factory=list)

    def push(self, bit: int) -> list:
        if bit not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        self.message.append(int(bit))
        out = [int(bit)]
        n = len(self.message)
        level = 1
        while level <= self.params.max_level and n % self.params.k_of(level) == 0:
            group = np.array(self.message[n - self.params.k_of(level):], dtype=np.uint8)
            sub = group.reshape(self.params.b(level), self.params.k_of(level - 1))
            red = hamming.encode_blocks(sub)[self.params.b(level):]
            out.extend(int(v) for v in encode_level(red, level - 1, self.params).ravel())
            level += 1
        self.emitted.extend(out)
        return out


def anytime_encode(state: AnytimeEncoder, next_bit: int) -> list:
    return state.push(next_bit)
