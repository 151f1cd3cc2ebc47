"""
Binary symmetric channel links with replayable flip streams.

Every link of the chain owns a :class:`NoiseTape`.  A tape is a SplitMix64
stream keyed by ``(seed, trial_index, link_id)``; the flip at raw position
``q`` of a link is

    z = mix64(key + (q + 1) * GOLDEN_GAMMA)
    flip = (z >> 11) < ceil(p * 2**53)

so flips are a pure function of ``(seed, trial_index, link_id, q, p)``.
This counter-based layout is what lets the batch simulator generate the
flips of thousands of trials at once while the step-by-step engine draws
the very same values one at a time.

Reproducibility contract (frozen, version 1)
--------------------------------------------
* ``mix64`` is the SplitMix64 finalizer (Steele, Lea & Flood 2014;
  constants 0xBF58476D1CE4E5B9, 0x94D049BB133111EB, shifts 30/27/31).
* ``derive_key(seed, trial, link) =
  mix64(mix64(mix64(seed + G) ^ trial + G) ^ link + G)`` with
  ``G = 0x9E3779B97F4A7C15`` and all arithmetic mod 2**64.
* The per-link stream is SplitMix64 seeded with that key (period 2**64,
  passes BigCrush).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

NOISE_VERSION = "splitmix64-v1"

# Stream ids reserved for per-trial randomness that is not channel noise.
THETA_STREAM = 1 << 63
MESSAGE_STREAM = (1 << 63) + 1

Probability = Union[float, Fraction, int, str]

_G = np.uint64(GOLDEN_GAMMA)
_U1 = np.uint64(_M1)
_U2 = np.uint64(_M2)
_S11, _S27, _S30, _S31 = (np.uint64(s) for s in (11, 27, 30, 31))


def mix64(x):
    """SplitMix64 finalizer on a Python int or a ``uint64`` array."""
    if isinstance(x, np.ndarray):
        z = x.astype(np.uint64, copy=True)
        z ^= z >> _S30
        z *= _U1
        z ^= z >> _S27
        z *= _U2
        z ^= z >> _S31
        return z
    z = int(x) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, trial_index: int, link_id: int) -> int:
    """Key of the stream for one (trial, link) pair under a master seed."""
    h = mix64((seed + GOLDEN_GAMMA) & MASK64)
    h = mix64(((h ^ (trial_index & MASK64)) + GOLDEN_GAMMA) & MASK64)
    return mix64(((h ^ (link_id & MASK64)) + GOLDEN_GAMMA) & MASK64)


def derive_keys(seed: int, trials, link_ids) -> np.ndarray:
    """Vectorized :func:`derive_key`; returns ``uint64`` of shape (len(trials), len(link_ids))."""
    trials = np.asarray(trials, dtype=np.uint64).reshape(-1, 1)
    links = np.asarray(link_ids, dtype=np.uint64).reshape(1, -1)
    h0 = np.uint64(mix64((seed + GOLDEN_GAMMA) & MASK64))
    h1 = mix64((h0 ^ trials) + _G)
    return mix64((h1 ^ links) + _G)


def as_probability(p: Probability) -> Fraction | float:
    """Parse ``p`` (float, Fraction or a string such as ``"1/48"``)."""
    if isinstance(p, str):
        p = Fraction(p.strip())
    if isinstance(p, Fraction):
        return p
    if isinstance(p, (int, np.integer)):
        return Fraction(int(p))
    return float(p)


def exact(p: Probability) -> Fraction:
    """Exact rational view of ``p``; floats are read through their shortest repr."""
    p = as_probability(p)
    if isinstance(p, Fraction):
        return p
    return Fraction(repr(p))


def validate_crossover(p: Probability) -> float:
    """Return ``p`` as a float after checking ``0 <= p < 1/2``."""
    q = as_probability(p)
    if not 0 <= q < Fraction(1, 2):
        raise ValueError(f"crossover probability must lie in [0, 1/2), got {p!r}")
    return float(q)


def flip_threshold(p: Probability) -> int:
    """Integer threshold ``ceil(p * 2**53)`` used to turn a 53-bit draw into a flip."""
    q = as_probability(p)
    if isinstance(q, Fraction):
        return math.ceil(q * (1 << 53))
    return math.ceil(q * float(1 << 53))


def flip_matrix(keys, count: int, p: Probability, start: int = 0) -> np.ndarray:
    """Flips at positions ``start .. start+count-1`` for every key.

    Returns a ``uint8`` array of shape ``(len(keys), count)``.
    """
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1)
    thr = flip_threshold(p)
    if thr == 0:
        return np.zeros((keys.size, count), dtype=np.uint8)
    offs = np.arange(start + 1, start + count + 1, dtype=np.uint64) * _G
    z = keys[:, None] + offs[None, :]
    tmp = np.empty_like(z)
    np.right_shift(z, _S30, out=tmp)
    z ^= tmp
    z *= _U1
    np.right_shift(z, _S27, out=tmp)
    z ^= tmp
    z *= _U2
    np.right_shift(z, _S31, out=tmp)
    z ^= tmp
    z >>= _S11
    return (z < np.uint64(thr)).view(np.uint8)


def uniform_bits(keys, count: int) -> np.ndarray:
    """Fair bits from the top of each stream word; shape ``(len(keys), count)``."""
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1)
    offs = np.arange(1, count + 1, dtype=np.uint64) * _G
    z = mix64(keys[:, None] + offs[None, :])
    return (z >> np.uint64(63)).astype(np.uint8)


def transmit(bit: int, flip: int) -> int:
    """Output of a BSC use: the input bit XOR the flip indicator."""
    if bit not in (0, 1) or flip not in (0, 1):
        raise ValueError("bit and flip must be 0 or 1")
    return bit ^ flip


@dataclass
class NoiseTape:
    """Flip stream of one link.

    ``seed`` is the master seed; ``trial_index`` selects the trial and
    ``link_id`` the hop (hop ``j`` joins node ``j`` to node ``j + 1``).
    """

    seed: int
    link_id: int
    trial_index: int = 0
    position: int = 0
    key: int = field(init=False)

    def __post_init__(self):
        self.key = derive_key(self.seed, self.trial_index, self.link_id)

    def next_flip(self, p: Probability) -> int:
        thr = flip_threshold(p)
        self.position += 1
        if thr == 0:
            return 0
        z = mix64((self.key + self.position * GOLDEN_GAMMA) & MASK64)
        return int((z >> 11) < thr)

    def flips(self, p: Probability, count: int) -> np.ndarray:
        """Next ``count`` flips as a ``uint8`` array (advances the tape)."""
        out = flip_matrix([self.key], count, p, start=self.position)[0]
        self.position += count
        return out


@dataclass(frozen=True)
class ChainNoise:
    """All tapes of one trial: a master seed plus a trial index."""

    seed: int = 0
    trial_index: int = 0

    def tape(self, link_id: int) -> NoiseTape:
        return NoiseTape(self.seed, link_id, self.trial_index)

    def keys(self, m: int) -> np.ndarray:
        """``(1, m)`` array of link keys, the batch engine's view of this trial."""
        return derive_keys(self.seed, [self.trial_index], np.arange(m))

    def theta(self) -> int:
        return draw_thetas(self.seed, [self.trial_index])[0].item()


def draw_thetas(seed: int, trials) -> np.ndarray:
    """Uniform message bit of each trial (first word of the theta stream)."""
    keys = derive_keys(seed, trials, [THETA_STREAM])[:, 0]
    return uniform_bits(keys, 1)[:, 0]


def draw_messages(seed: int, trials, k: int) -> np.ndarray:
    """Uniform ``k``-bit message of each trial; shape ``(len(trials), k)``."""
    keys = derive_keys(seed, trials, [MESSAGE_STREAM])[:, 0]
    return uniform_bits(keys, k)
