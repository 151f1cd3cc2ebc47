"""
Reference protocols that narrowly miss positive velocity.

``P0``: every hop repeats each bit ``reps_per_hop`` times and the receiver
takes a majority; ``block_count`` such blocks are pipelined and the decoder
votes over them.  ``P1``: the chain is cut into sub-chains of
``s = floor(log2 m)`` hops, each run as a ``P0`` instance of ``s`` blocks;
the whole pipeline is repeated ``ceil(m / s)`` times and the decoder votes
over the repetitions.  Ties in any even-length vote go to the first entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .analysis import minimal_repetitions
from .channel import ChainNoise, Probability, derive_keys, draw_thetas, exact, validate_crossover
from .engine import FORWARD, ChainPlan, Stage, TrialResult, run_batch, run_steps, vote


@dataclass(frozen=True)
class BaselineParams:
    reps_per_hop: int = 1
    block_count: int = 1
    variant: str = "P0"

    def __post_init__(self):
        if self.reps_per_hop < 1 or self.reps_per_hop % 2 == 0:
            raise ValueError("reps_per_hop must be odd and >= 1")
        if self.block_count < 1:
            raise ValueError("block_count must be >= 1")
        if self.variant not in ("P0", "P1"):
            raise ValueError("variant must be P0 or P1")


def p0_params(m: int, p: Probability, block_count: Optional[int] = None) -> BaselineParams:
    """Per-hop repetition sized by the exact binomial tail to reach ``1/m**2``."""
    reps = minimal_repetitions(p, 1 / m ** 2) if exact(p) > 0 else 1
    return BaselineParams(reps, m if block_count is None else block_count, "P0")


def p0_plan(m: int, params: BaselineParams) -> ChainPlan:
    return ChainPlan(m, params.reps_per_hop, params.block_count, (FORWARD,) * (m - 1),
                     lambda stream: vote(stream)[:, None])


def subchain_length(m: int) -> int:
    if m < 8:
        raise ValueError("P1 needs m >= 8")
    return m.bit_length() - 1


@dataclass(frozen=True)
class P1Layout:
    s: int                  # sub-chain length and blocks per P0 instance
    reps: int               # pipeline repetitions, ceil(m / s)
    reps_per_hop: int
    boundaries: tuple       # relays that close a sub-chain

    @property
    def subchains(self) -> int:
        return len(self.boundaries) + 1


def p1_layout(m: int, p: Probability) -> P1Layout:
    s = subchain_length(m)
    per_hop = minimal_repetitions(p, 1 / s ** 2) if exact(p) > 0 else 1
    return P1Layout(s, -(-m // s), per_hop, tuple(range(s, m, s)))


def p1_plan(m: int, p: Probability) -> ChainPlan:
    lay = p1_layout(m, p)
    s = lay.s

    def boundary(blocks: np.ndarray) -> np.ndarray:
        return np.repeat(vote(blocks)[..., None], s, axis=-1)

    gate = Stage(s, boundary, 1)
    marks = set(lay.boundaries)
    stages = tuple(gate if j in marks else FORWARD for j in range(1, m))

    def decode(stream: np.ndarray) -> np.ndarray:
        n = stream.shape[0]
        return vote(vote(stream.reshape(n, lay.reps, s)))[:, None]

    return ChainPlan(m, lay.reps_per_hop, lay.reps * s, stages, decode)


def _single(plan: ChainPlan, theta: int, p, noise, engine) -> TrialResult:
    if theta not in (0, 1):
        raise ValueError("theta must be 0 or 1")
    validate_crossover(p)
    noise = noise or ChainNoise()
    sent = np.full((1, plan.length), theta, dtype=np.uint8)
    if engine == "batch":
        return run_batch(plan, sent, noise.keys(plan.m), p).trial(0)
    est, trace = run_steps(plan, sent[0], [noise.tape(j) for j in range(plan.m)], p)
    return TrialResult(int(est[0]) == theta, int(est[0]), trace.transmission_delay,
                       trace.propagation_delay, trace.last_reception)


def run_p0(theta: int, m: int, p: Probability, params: BaselineParams,
           noise: Optional[ChainNoise] = None, engine: str = "batch") -> TrialResult:
    return _single(p0_plan(m, params), theta, p, noise, engine)


def run_p1(theta: int, m: int, p: Probability, noise: Optional[ChainNoise] = None,
           engine: str = "batch") -> TrialResult:
    return _single(p1_plan(m, p), theta, p, noise, engine)


def baseline_batch(plan: ChainPlan, p: Probability, seed: int = 0, trials: Sequence[int] = (0,)):
    trials = np.asarray(trials)
    thetas = draw_thetas(seed, trials)
    sent = np.repeat(thetas[:, None], plan.length, axis=1)
    return run_batch(plan, sent, derive_keys(seed, trials, np.arange(plan.m)), p,
                     truth=thetas[:, None])
