"""
Numeric side of the velocity converse.

``F(i, j)`` bounds the information node ``j`` holds about the message bit
after ``i`` steps.  Run with equality the recursion

    F(i, j) = F(i-1, j) + delta**2 * (F(i-1, j-1) - F(i-1, j)),
    F(i, 0) = 1,  F(0, j) = 0 for j >= 1,

is the upper tail ``P(Binomial(i, delta**2) >= j)``, and it sits below the
exponential envelope ``exp(c * (gamma * i - j))`` whenever
``exp(c * gamma) >= 1 + delta**2 * (exp(c) - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConverseParams:
    delta: float
    gamma: float
    c_exp: float
    v0: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.delta ** 2 < self.gamma < self.v0:
            raise ValueError("need delta**2 < gamma < v0")
        if self.c_exp <= 0:
            raise ValueError("c_exp must be positive")
        if envelope_slack(self.c_exp, self.gamma, self.delta) < -1e-12:
            raise ValueError("c_exp violates exp(c*gamma) >= 1 + delta**2 (exp(c) - 1)")


@dataclass(frozen=True)
class ConverseTable:
    F: np.ndarray       # shape (i_max + 1, j_max + 1)
    delta: float

    @property
    def i_max(self) -> int:
        return self.F.shape[0] - 1

    @property
    def j_max(self) -> int:
        return self.F.shape[1] - 1

    def __call__(self, i: int, j: int) -> float:
        return float(self.F[i, j])


def converse_table(delta: float, i_max: int, j_max: int) -> ConverseTable:
    """Fill ``F`` row by row (time ``i``) over nodes ``0 .. j_max``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if i_max < 0 or j_max < 0:
        raise ValueError("table sizes must be non-negative")
    d2 = delta * delta
    F = np.zeros((i_max + 1, j_max + 1))
    F[:, 0] = 1.0
    for i in range(1, i_max + 1):
        prev = F[i - 1]
        F[i, 1:] = prev[1:] + d2 * (prev[:-1] - prev[1:])
    return ConverseTable(F, delta)


def _ratio(c: float, gamma: float) -> float:
    # (e^{c gamma} - 1) / (e^c - 1), evaluated in log space for large c
    if c > 700:
        return math.exp(c * gamma + math.log1p(-math.exp(-c * gamma)) - c
                        - math.log1p(-math.exp(-c)))
    return math.expm1(c * gamma) / math.expm1(c)


def envelope_slack(c: float, gamma: float, delta: float) -> float:
    """``(e^{c gamma} - 1)/(e^c - 1) - delta**2``; non-negative means ``c`` is admissible."""
    return _ratio(c, gamma) - delta * delta


def find_envelope_c(gamma: float, delta: float, tol: float = 1e-12) -> float:
    """Largest admissible envelope constant, by bisection.

    For ``gamma < 1`` the ratio falls from ``gamma`` (at ``c -> 0``) to 0,
    so the admissible set is an interval ``(0, c*]``.  The bracket starts at
    ``[0, 1]`` and doubles its upper end until the ratio drops below
    ``delta**2``; the lower end of the final bracket is returned, so the
    inequality always holds at the returned value.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not delta * delta < gamma < 1:
        raise ValueError("need delta**2 < gamma < 1")
    lo, hi = 0.0, 1.0
    while envelope_slack(hi, gamma, delta) >= 0:
        lo, hi = hi, 2 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if envelope_slack(mid, gamma, delta) >= 0:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        lo = hi * 0.5
        while envelope_slack(lo, gamma, delta) < 0:
            lo *= 0.5
    return lo


def envelope(params: ConverseParams, i_max: int, j_max: int) -> np.ndarray:
    i = np.arange(i_max + 1)[:, None]
    j = np.arange(j_max + 1)[None, :]
    with np.errstate(over="ignore"):
        return np.exp(params.c_exp * (params.gamma * i - j))


@dataclass(frozen=True)
class EnvelopeReport:
    within: bool            # F <= envelope (+ tol) everywhere
    max_excess: float       # max of F - envelope
    probe_value: float      # F(i_max, floor(v0 * i_max))
    decayed: bool           # probe_value < threshold

    @property
    def ok(self) -> bool:
        return self.within and self.decayed


def probe(table: ConverseTable, v0: float, i: int | None = None) -> float:
    i = table.i_max if i is None else i
    j = math.floor(v0 * i)
    if j > table.j_max:
        raise ValueError(f"table too narrow: need j up to {j}")
    return table(i, j)


def verify_envelope(table: ConverseTable, params: ConverseParams, tol: float = 1e-12,
                    threshold: float = 1e-6) -> EnvelopeReport:
    if not math.isclose(table.delta, params.delta):
        raise ValueError("table and parameters use different delta")
    env = envelope(params, table.i_max, table.j_max)
    excess = float(np.max(table.F - env))
    value = probe(table, params.v0)
    return EnvelopeReport(excess <= tol, excess, value, value < threshold)
