"""
Block-redundancy code: correct any single corrupted block out of ``b``.

Each bit position of the ``b`` data blocks is coded on its own with a
shortened Hamming code, so whatever happens inside one block, every
position sees at most one wrong code bit.

Layout (frozen)
---------------
Classical Hamming positions ``1 .. 2**r - 1``; parity bit ``i`` sits at
position ``2**i`` and covers every position whose binary expansion has bit
``i`` set.  Data bits fill the non-power-of-two positions in increasing
order: data block ``d`` goes to the ``d``-th such position.  Positions past
the ``b``-th data slot are the shortened (always-zero) ones.

Codeword block order: ``b`` data blocks, then ``r`` parity blocks (parity
``i`` at index ``b + i``), then all-zero dummy blocks up to
``ceil(log2 b) + 1`` redundancy blocks in total.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def ceil_log2(b: int) -> int:
    return (b - 1).bit_length()


def parity_bits(b: int) -> int:
    """Least ``r`` with ``b <= 2**r - r - 1``."""
    if b < 1:
        raise ValueError("b must be >= 1")
    r = 2
    while 2 ** r - r - 1 < b:
        r += 1
    return r


def redundancy_count(b: int) -> int:
    """Number of redundancy blocks appended to ``b`` data blocks."""
    if b < 2:
        raise ValueError("b must be >= 2: one block cannot be corrected among two copies")
    return max(parity_bits(b), ceil_log2(b) + 1)


@dataclass(frozen=True)
class BlockCode:
    b: int
    k_prime: int
    red: int
    r_bits: int
    pad: int

    @classmethod
    def build(cls, b: int, k_prime: int = 1) -> "BlockCode":
        if k_prime < 1:
            raise ValueError("k_prime must be >= 1")
        r = parity_bits(b)
        return cls(b, k_prime, redundancy_count(b), r, 2 ** r - r - 1 - b)

    @property
    def n_blocks(self) -> int:
        return self.b + self.red


@lru_cache(maxsize=None)
def _tables(b: int):
    r = parity_bits(b)
    data_pos = [q for q in range(1, 2 ** r) if q & (q - 1)][:b]
    # cover[i, d]: parity i covers data block d
    cover = np.array([[(q >> i) & 1 for q in data_pos] for i in range(r)], dtype=np.uint8)
    # syndrome value -> data block index (-1: parity position, shortened slot or zero)
    locate = np.full(2 ** r, -1, dtype=np.int64)
    for d, q in enumerate(data_pos):
        locate[q] = d
    return r, cover, locate


def _parities(data: np.ndarray, cover: np.ndarray) -> np.ndarray:
    # data (..., b, k') -> (..., r, k')
    return np.einsum("id,...dk->...ik", cover.astype(np.int64), data.astype(np.int64)) & 1


def encode_blocks(data) -> np.ndarray:
    """Append redundancy blocks to ``data`` of shape ``(..., b, k')``.

    Returns ``(..., b + red, k')``; the data blocks are passed through.
    """
    data = np.asarray(data, dtype=np.uint8)
    if data.ndim < 2:
        raise ValueError("data must have shape (..., b, k')")
    b = data.shape[-2]
    r, cover, _ = _tables(b)
    red = redundancy_count(b)
    par = _parities(data, cover).astype(np.uint8)
    dummy = np.zeros(data.shape[:-2] + (red - r, data.shape[-1]), dtype=np.uint8)
    return np.concatenate([data, par, dummy], axis=-2)


def decode_blocks(received, b: int) -> np.ndarray:
    """Recover the ``b`` data blocks from ``(..., b + red, k')``.

    Exact whenever at most one whole block differs from a codeword.  With
    more damage the output may silently be wrong.
    """
    received = np.asarray(received, dtype=np.uint8)
    red = redundancy_count(b)
    if received.ndim < 2 or received.shape[-2] != b + red:
        raise ValueError(f"expected {b + red} blocks for b={b}")
    r, cover, locate = _tables(b)
    data = received[..., :b, :]
    diff = _parities(data, cover) ^ received[..., b:b + r, :]
    weights = (1 << np.arange(r, dtype=np.int64))[:, None]
    syndrome = (diff * weights).sum(axis=-2)          # (..., k')
    where = locate[syndrome]                           # (..., k')
    fix = (where[..., None, :] == np.arange(b)[:, None]).astype(np.uint8)
    return data ^ fix
