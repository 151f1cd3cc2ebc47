"""
Synchronous relay-chain execution.

Every protocol in this package is a *block relay chain*: the encoder emits a
fixed stream of logical bits, each logical bit is sent as ``r`` raw channel
uses, and relay ``j`` reads blocks of ``stage.block`` logical bits, maps each
block to an output block of the same length and forwards it.  A
:class:`ChainPlan` captures exactly that, and two engines run it:

* :func:`run_steps` -- literal time-step simulation of one trial.  At step
  ``i`` every active node emits one raw bit computed only from receptions at
  steps ``< i``; then all links deliver.  ``audit=True`` records the
  dependency time of every emitted bit and raises on a causality violation.
* :func:`run_batch` -- vectorized over trials.  Because every node's output
  content is a function of its input content alone (timing only decides
  *when* bits move), the stream can be pushed hop by hop as a
  ``(trials, length)`` array.  Timing follows from the plan in closed form.

Both consume identical flips (same tape positions), so they agree bit for
bit; the test suite checks this.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .channel import NoiseTape, Probability, flip_matrix, validate_crossover

Transform = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Stage:
    """Behaviour of one relay.

    block : logical bits buffered before each emission.
    transform : maps ``(..., block)`` to ``(..., block)``; ``None`` forwards.
    level : protocol level, kept for reporting.
    """

    block: int = 1
    transform: Optional[Transform] = None
    level: int = 0


FORWARD = Stage()


@dataclass(frozen=True)
class ChainPlan:
    m: int
    r: int
    length: int
    stages: tuple
    decode: Callable[[np.ndarray], np.ndarray]
    k: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.stages) != self.m - 1:
            raise ValueError("need exactly m - 1 relay stages")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        for s in self.stages:
            if self.length % s.block:
                raise ValueError("every relay block must divide the stream length")

    @property
    def transmission_delay(self) -> int:
        return self.r * self.length

    @property
    def propagation_delay(self) -> int:
        return self.r * sum(s.block for s in self.stages)

    @property
    def n_total(self) -> int:
        return self.transmission_delay + self.propagation_delay


@dataclass
class TrialResult:
    """Outcome of one trial; ``n_total`` is the decoder's last reception step."""

    correct: bool
    estimate: object
    transmission_delay: int
    propagation_delay: int
    n_total: int

    def __post_init__(self):
        if self.n_total != self.transmission_delay + self.propagation_delay:
            raise AssertionError("delay identity violated")


@dataclass
class BatchResult:
    estimates: np.ndarray   # (N, k)
    correct: np.ndarray     # (N,) bool
    transmission_delay: int
    propagation_delay: int
    n_total: int

    def trial(self, i: int, single_bit: bool = True) -> TrialResult:
        est = self.estimates[i]
        est = int(est[0]) if single_bit else tuple(int(x) for x in est)
        return TrialResult(bool(self.correct[i]), est, self.transmission_delay,
                           self.propagation_delay, self.n_total)


def vote(bits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Majority along ``axis``; an exact tie falls back to the first entry."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[axis]
    twice = 2 * bits.sum(axis=axis, dtype=np.int64)
    out = (twice > n).astype(np.uint8)
    if n % 2 == 0:
        tie = twice == n
        if tie.any():
            first = np.take(bits, 0, axis=axis)
            out = np.where(tie, first, out).astype(np.uint8)
    return out


def _apply(stage: Stage, stream: np.ndarray) -> np.ndarray:
    if stage.transform is None:
        return stream
    n, length = stream.shape
    blocks = stream.reshape(n, length // stage.block, stage.block)
    return np.ascontiguousarray(stage.transform(blocks), dtype=np.uint8).reshape(n, length)


def _hop(stream: np.ndarray, keys: np.ndarray, r: int, p: Probability) -> np.ndarray:
    n, length = stream.shape
    raw = np.repeat(stream, r, axis=1) if r > 1 else stream.copy()
    raw ^= flip_matrix(keys, r * length, p)
    if r > 1:
        return vote(raw.reshape(n, length, r))
    return raw


def run_batch(plan: ChainPlan, sent: np.ndarray, keys: np.ndarray, p: Probability,
              truth: Optional[np.ndarray] = None) -> BatchResult:
    """Push ``sent`` (shape ``(N, length)``) through the chain.

    ``keys`` has shape ``(N, m)``: column ``j`` keys the tape of hop ``j``.
    ``truth`` (shape ``(N, k)``) defaults to the first ``k`` sent bits.
    """
    validate_crossover(p)
    stream = np.asarray(sent, dtype=np.uint8)
    if stream.ndim != 2 or stream.shape[1] != plan.length:
        raise ValueError(f"sent must have shape (N, {plan.length})")
    keys = np.asarray(keys, dtype=np.uint64)
    if keys.shape != (stream.shape[0], plan.m):
        raise ValueError("keys must have shape (N, m)")
    if truth is None:
        truth = stream[:, : plan.k]
    for j in range(plan.m):
        stream = _hop(stream, keys[:, j], plan.r, p)
        if j + 1 < plan.m:
            stream = _apply(plan.stages[j], stream)
    est = np.asarray(plan.decode(stream), dtype=np.uint8).reshape(stream.shape[0], -1)
    correct = np.all(est == truth, axis=1)
    return BatchResult(est, correct, plan.transmission_delay, plan.propagation_delay,
                       plan.n_total)


class CausalityError(AssertionError):
    pass


@dataclass
class StepTrace:
    """Timing measured by :func:`run_steps` (steps are numbered from 1)."""

    first_emit: list        # first emission step of nodes 0..m-1
    last_reception: int
    encoder_bits: int
    audit_log: list = field(default_factory=list)

    @property
    def transmission_delay(self) -> int:
        return self.encoder_bits

    @property
    def propagation_delay(self) -> int:
        # lapse between the encoder's first emission and the decoder's
        # reception of that bit (which happens in the same step it is sent)
        return self.first_emit[-1] - self.first_emit[0] if len(self.first_emit) > 1 else 0


class _Relay:
    def __init__(self, stage: Stage, r: int):
        self.stage = stage
        self.r = r
        self.raw = []
        self.logical = []
        self.out = deque()   # (bit, dependency step)

    def receive(self, bit: int, step: int):
        self.raw.append(bit)
        if len(self.raw) < self.r:
            return
        self.logical.append(int(vote(np.array(self.raw))) if self.r > 1 else self.raw[0])
        self.raw = []
        if len(self.logical) < self.stage.block:
            return
        block = np.array(self.logical, dtype=np.uint8)
        self.logical = []
        if self.stage.transform is not None:
            block = np.asarray(self.stage.transform(block[None, :]), dtype=np.uint8)[0]
        for b in block:
            for _ in range(self.r):
                self.out.append((int(b), step))


def run_steps(plan: ChainPlan, sent: Sequence[int], tapes: Sequence[NoiseTape],
              p: Probability, audit: bool = False):
    """Time-step simulation of one trial.

    Returns ``(estimate, trace)`` where ``estimate`` is a ``(k,)`` array.
    Bits a node has not yet produced are not put on the wire (the schedule
    is public, so receivers know to ignore those slots) and consume no flips.
    """
    validate_crossover(p)
    if len(tapes) != plan.m:
        raise ValueError("need one tape per hop")
    encoder = deque((int(b), 0) for rep in sent for b in [rep] * plan.r)
    nodes = [encoder] + [_Relay(s, plan.r) for s in plan.stages]
    received = []
    first_emit = [None] * plan.m
    log = []
    step = 0
    while len(received) < plan.r * plan.length:
        step += 1
        deliveries = []
        for j, node in enumerate(nodes):
            queue = node if j == 0 else node.out
            if not queue:
                continue
            bit, dep = queue.popleft()
            if audit:
                log.append((step, j, dep))
                if dep >= step:
                    raise CausalityError(f"node {j} emitted at step {step} using step {dep}")
            if first_emit[j] is None:
                first_emit[j] = step
            deliveries.append((j, bit ^ tapes[j].next_flip(p)))
        for j, y in deliveries:
            if j + 1 < plan.m:
                nodes[j + 1].receive(y, step)
            else:
                received.append(y)
        if step > 10 * plan.n_total + 10:
            raise RuntimeError("chain stalled")
    raw = np.array(received, dtype=np.uint8).reshape(1, plan.length, plan.r)
    logical = vote(raw) if plan.r > 1 else raw[..., 0]
    est = np.asarray(plan.decode(logical), dtype=np.uint8).reshape(-1)
    return est, StepTrace(first_emit, step, plan.r * plan.length, log)
