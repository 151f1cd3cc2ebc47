"""
Closed-form quantities: error recursions, repetition sizing, velocity
bounds, delay budgets and the low-noise parameter choices.

Everything here is arithmetic on the protocol constants; nothing is
simulated.  ``Fraction`` inputs are carried through exactly wherever the
formula is rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np

from . import hamming
from .channel import Probability, as_probability, exact
from .multibit import MultiBitParams, MultiBitSchedule
from .onebit import LevelSchedule, OneBitParams, decoder_level, effective_crossover

Number = Union[float, Fraction]

# ε̄_1 ceiling used for the multi-bit low-noise design
MULTIBIT_EPS_TARGET = Fraction(1, 4 * 3 ** 8)


@dataclass(frozen=True)
class BoundTable:
    """Upper bounds ``eps[l]`` on the failure probability of a level-``l`` block."""

    eps: tuple
    eps_simplified: tuple
    eps0: Number
    kind: str                       # "onebit" or "multibit"
    params: object = None

    @property
    def levels(self) -> np.ndarray:
        return np.arange(len(self.eps))

    def as_array(self) -> np.ndarray:
        return np.array([float(e) for e in self.eps])

    def __getitem__(self, level: int) -> Number:
        return self.eps[level]


def _num(x: Probability) -> Number:
    x = as_probability(x)
    return x if isinstance(x, Fraction) else float(x)


def onebit_error_recursion(eps0: Probability, b: int = 3, t: int = 4, L: int = 8) -> BoundTable:
    """``eps_{l+1} = min(1, C(b, (b+1)/2) * (t * eps_l) ** ((b+1)/2))`` for ``l < L``."""
    if b < 3 or b % 2 == 0 or t <= b:
        raise ValueError("need odd b >= 3 and t > b")
    e = _num(eps0)
    if not 0 <= e <= 1:
        raise ValueError("eps0 must lie in [0, 1]")
    h = (b + 1) // 2
    coef = math.comb(b, h)
    out = [e]
    for _ in range(L):
        e = min(1, coef * (t * e) ** h)
        out.append(e)
    return BoundTable(tuple(out), tuple(out), _num(eps0), "onebit",
                      OneBitParams(b=b, t=t))


def multibit_error_recursion(eps0: Probability, params: MultiBitParams = MultiBitParams(),
                             L: int = 6) -> BoundTable:
    """Block-failure bounds of the multi-bit protocol.

    Primary: ``eps_l = min(1, C(B_l, 2) * (t_l * eps_{l-1})**2)`` with the
    real block count ``B_l = b_l + red(b_l)``.  The simplified column runs
    ``2 * (b_l * t_l * eps_{l-1})**2`` on its own values.
    """
    if L > params.max_level:
        raise ValueError("L exceeds the configured parameter sequences")
    e = s = _num(eps0)
    if not 0 <= e <= 1:
        raise ValueError("eps0 must lie in [0, 1]")
    out, simp = [e], [s]
    for l in range(1, L + 1):
        e = min(1, math.comb(params.blocks(l), 2) * (params.t(l) * e) ** 2)
        s = min(1, 2 * (params.b(l) * params.t(l) * s) ** 2)
        out.append(e)
        simp.append(s)
    return BoundTable(tuple(out), tuple(simp), _num(eps0), "multibit", params)


@dataclass
class SufficientConditions:
    """Finite-horizon diagnostics for the multi-bit sufficiency conditions.

    ``ratio_ok`` is exact.  ``products`` (``t_{l+1} b_{l+1} eps_l``) and the
    partial sums of ``log(b_l) / b_l`` are proxies for limits and are only
    reported, never claimed as proofs.
    """

    ratios: list
    ratio_ok: bool
    products: list
    products_decreasing: bool
    log_sums: list
    log_increments: list

    @property
    def violations(self) -> list:
        return [l + 1 for l, r in enumerate(self.ratios) if r > 0.5]


def check_sufficient_conditions(params: MultiBitParams, eps0: Probability,
                                L_horizon: int = 6) -> SufficientConditions:
    if L_horizon < 1:
        raise ValueError("horizon must be >= 1")
    if L_horizon + 1 > params.max_level:
        raise ValueError("horizon exceeds the configured parameter sequences")
    table = multibit_error_recursion(eps0, params, L_horizon)
    ratios = [params.b(l) / params.t(l) for l in range(1, L_horizon + 1)]
    products = [params.t(l + 1) * params.b(l + 1) * float(table.eps[l])
                for l in range(0, L_horizon + 1)]
    incs = [math.log(params.b(l)) / params.b(l) for l in range(1, L_horizon + 1)]
    tail = products[2:]
    return SufficientConditions(
        ratios, all(r <= 0.5 for r in ratios), products,
        all(x > y for x, y in zip(tail, tail[1:])),
        list(np.cumsum(incs)), incs)


def repetition_count(p: Probability, target: Probability) -> int:
    """Hoeffding-sized odd repetition count: ``ceil(ln(1/target) / (2 (1/2 - p)**2))``."""
    p, target = float(exact(p)), float(exact(target))
    if not 0 < p < 0.5:
        raise ValueError("p must lie in (0, 1/2)")
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    n = max(1, math.ceil(math.log(1 / target) / (2 * (0.5 - p) ** 2) - 1e-12))
    return n if n % 2 else n + 1


def minimal_repetitions(p: Probability, target: Probability, limit: int = 10 ** 6) -> int:
    """Least odd ``r`` whose exact majority error is at most ``target``."""
    target = float(exact(target))
    r = 1
    while effective_crossover(p, r) > target:
        r += 2
        if r > limit:
            raise ValueError("no repetition count below the search limit")
    return r


def low_noise_spacing(p: Probability) -> int:
    """``c = max(1, floor(1 / (48 p)))``; 1 when ``p > 1/48``."""
    q = exact(p)
    if not 0 <= q < Fraction(1, 2):
        raise ValueError("p must lie in [0, 1/2)")
    if q == 0:
        raise ValueError("p = 0 needs no spacing bound")
    if q > Fraction(1, 48):
        return 1
    c = max(1, math.floor(1 / (48 * q)))
    assert 3 * (4 * q * c) ** 2 <= Fraction(1, 48)
    return c


@dataclass(frozen=True)
class VelocityBounds:
    p: float
    lower: float
    upper: float
    lower_annotation: float       # (1 - 2p)**2 / 31, valid only when the ceiling is tight


def velocity_bounds(p: Probability) -> VelocityBounds:
    q = exact(p)
    if not 0 < q < Fraction(1, 2):
        raise ValueError("p must lie in (0, 1/2)")
    upper = float((1 - 2 * q) ** 2)
    if q <= Fraction(1, 48):
        lower = 0.25
    else:
        lower = 1 / (4 * math.ceil(2 * math.log(48) / float((1 - 2 * q) ** 2) - 1e-12))
    assert lower <= upper
    return VelocityBounds(float(q), lower, upper, upper / 31)


@dataclass(frozen=True)
class DelayBudget:
    """Delay components in channel uses.

    ``level0_wait`` charges every relay one logical bit; ``higher_level_wait``
    adds ``#(relays of level >= l) * (block of level l)`` for ``l >= 1``.
    Their sum bounds the measured propagation delay.
    """

    level0_wait: int
    higher_level_wait: int
    transmission_bits: int

    @property
    def propagation_bound(self) -> int:
        return self.level0_wait + self.higher_level_wait

    @property
    def total(self) -> int:
        return self.propagation_bound + self.transmission_bits


def delay_budget(m: int, params: Union[OneBitParams, MultiBitParams] = OneBitParams(),
                 k: int = 1, instances: int = 1) -> DelayBudget:
    if m < 1:
        raise ValueError("m must be >= 1")
    relays = m - 1
    if isinstance(params, OneBitParams):
        higher, l = 0, 1
        while params.c * params.t ** l <= relays:
            higher += (relays // (params.c * params.t ** l)) * params.b ** l
            l += 1
        tx = instances * params.b ** decoder_level(m, params)
    else:
        higher, l = 0, 1
        while l <= params.max_level and params.spacing(l) <= relays:
            higher += (relays // params.spacing(l)) * params.n_of(l)
            l += 1
        sched = MultiBitSchedule.build(m, k, params)
        tx = sched.block_count * params.n_of(sched.decode_level)
    r = params.r
    return DelayBudget(r * relays, r * higher, r * tx)


def _compose(e: float, hops: int) -> float:
    """Error of ``hops`` independent symmetric flips with probability ``e`` each."""
    return 0.5 * (1 - (1 - 2 * e) ** hops)


def _majority_error(e: float, b: int) -> float:
    return sum(math.comb(b, j) * e ** j * (1 - e) ** (b - j) for j in range((b + 1) // 2, b + 1))


def onebit_exact_error(p: Probability, m: int, params: OneBitParams = OneBitParams()) -> float:
    """Exact error probability of one protocol run.

    Every relay's verdict is a symmetric function of independent link
    flips, so the error of a level-``l`` decision at the end of a clean
    segment of ``n`` hops follows a short recursion: compose the errors of
    the full level-``l`` spans in the segment, then take a ``b``-ary
    majority of the level-``(l-1)`` errors of the remainder.
    """
    q = effective_crossover(p, params.r)
    b, t, c = params.b, params.t, params.c

    @lru_cache(maxsize=None)
    def seg(n: int, level: int) -> float:
        if level == 0:
            return _compose(q, n)
        span = c * t ** level
        full = (n - 1) // span
        rest = n - full * span
        head = _compose(seg(span, level), full) if full else 0.0
        tail = _majority_error(seg(rest, level - 1), b)
        return head * (1 - tail) + tail * (1 - head)

    return seg(m, decoder_level(m, params))


@dataclass(frozen=True)
class MultiBitBound:
    loose: float      # t_{D+1} * b_{D+1} * eps_D
    tight: float      # block_count * ceil(m / (t_1 ... t_D)) * eps_D
    level: int
    case: int


def multibit_error_bound(m: int, k: int, p: Probability,
                         params: MultiBitParams = MultiBitParams()) -> MultiBitBound:
    """Union bounds on the end-to-end error of :func:`run_multibit`."""
    sched = MultiBitSchedule.build(m, k, params)
    D = sched.decode_level
    eps0 = effective_crossover(p, params.r)
    table = multibit_error_recursion(eps0, params, D)
    eps_D = float(table.eps[D])
    loose = min(1.0, params.t(D + 1) * params.b(D + 1) * eps_D)
    spans = -(-m // params.spacing(D))
    tight = min(1.0, sched.block_count * spans * eps_D)
    return MultiBitBound(loose, tight, D, sched.case)


def low_noise_t1(p: Probability, params: MultiBitParams = MultiBitParams(),
                 target: Probability = MULTIBIT_EPS_TARGET) -> int:
    """Largest ``t_1 >= 9`` keeping the level-1 bound at or below ``target``.

    ``b_1`` and the higher levels keep their values from ``params``.
    """
    q, target = exact(p), exact(target)
    if not 0 < q < MULTIBIT_EPS_TARGET:
        raise ValueError("low-noise design needs 0 < p < 3**-8 / 4")
    coef = math.comb(params.blocks(1), 2)

    def ok(t1: int) -> bool:
        return coef * (t1 * q) ** 2 <= target

    lo = max(9, 2 * params.b(1))
    if not ok(lo):
        raise ValueError("p too large for the level-1 target")
    hi = lo
    while ok(hi * 2):
        hi *= 2
    hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def nonzero_level_fraction(m: int, params: Union[OneBitParams, MultiBitParams]) -> float:
    """Fraction of relays whose level is at least 1."""
    if m < 2:
        return 0.0
    if isinstance(params, OneBitParams):
        return LevelSchedule.build(m, params).count_at_least(1) / (m - 1)
    return ((m - 1) // params.t(1)) / (m - 1)
