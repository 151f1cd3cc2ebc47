"""
Monte Carlo harness over the relay protocols.

Trial ``tau`` of a run draws its message and every link tape from
``(master_seed, tau, link_id)`` (see :mod:`infovelocity.channel`), so a
run's output depends on the configuration alone: splitting the trials
into chunks or spreading the chunks over worker processes changes nothing.
Chunks are aggregated in trial order.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .analysis import (BoundTable, MultiBitParams, multibit_error_recursion,
                       onebit_error_recursion)
from .baseline import (BaselineParams, baseline_batch, p0_params, p0_plan, p1_layout,
                       p1_plan)
from .channel import NOISE_VERSION, Probability, as_probability, validate_crossover
from .multibit import MultiBitSchedule, multibit_batch
from .onebit import ChainParams, OneBitParams, decoder_level, effective_crossover, onebit_batch

PROTOCOLS = ("onebit", "onebit_chained", "multibit", "p0", "p1")
CHUNK = 1024
Z95 = 1.959963984540054

CSV_COLUMNS = ("protocol", "m", "k", "p", "b", "t", "c", "reps", "alpha", "trials", "errors",
               "error_rate", "ci_low", "ci_high", "transmission_delay", "propagation_delay",
               "n_total", "ratio_m_over_n", "seed")


@dataclass(frozen=True)
class SimConfig:
    protocol: str
    m: int
    p: Probability
    k: int = 1
    params: object = None
    alpha: Optional[float] = None
    trials: int = 1000
    master_seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        validate_crossover(self.p)
        if self.protocol != "multibit" and self.k != 1:
            raise ValueError("one-bit protocols carry k = 1")
        if self.protocol == "p1" and self.m < 8:
            raise ValueError("P1 needs m >= 8")
        params = self.params
        if params is None:
            params = {"onebit": OneBitParams(), "onebit_chained": OneBitParams(),
                      "multibit": MultiBitParams(),
                      "p0": p0_params(self.m, self.p) if self.protocol == "p0" else None,
                      "p1": None}[self.protocol]
            object.__setattr__(self, "params", params)
        expected = {"onebit": OneBitParams, "onebit_chained": OneBitParams,
                    "multibit": MultiBitParams, "p0": BaselineParams,
                    "p1": type(None)}[self.protocol]
        if not isinstance(params, expected):
            raise ValueError(f"{self.protocol} needs {expected.__name__} parameters")
        if self.protocol == "onebit_chained":
            object.__setattr__(self, "alpha", ChainParams(self.alpha or ChainParams().alpha).alpha)
        elif self.alpha is not None:
            raise ValueError("alpha only applies to onebit_chained")

    @property
    def p_float(self) -> float:
        return float(as_probability(self.p))

    def describe(self) -> dict:
        params = self.params
        if params is not None:
            params = {k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in params.__dict__.items()}
        return {"protocol": self.protocol, "m": self.m, "k": self.k, "p": str(self.p),
                "params": params, "alpha": self.alpha, "trials": self.trials,
                "master_seed": self.master_seed}


def _run_chunk(config: SimConfig, start: int, stop: int):
    trials = np.arange(start, stop)
    seed, m, p = config.master_seed, config.m, config.p
    if config.protocol == "onebit":
        res = onebit_batch(m, p, config.params, seed, trials)
    elif config.protocol == "onebit_chained":
        res = onebit_batch(m, p, config.params, seed, trials,
                           ChainParams(config.alpha).instances(m))
    elif config.protocol == "multibit":
        res = multibit_batch(m, config.k, p, config.params, seed, trials)
    elif config.protocol == "p0":
        res = baseline_batch(p0_plan(m, config.params), p, seed, trials)
    else:
        res = baseline_batch(p1_plan(m, p), p, seed, trials)
    n = stop - start
    delays = np.tile([res.transmission_delay, res.propagation_delay, res.n_total], (n, 1))
    if np.any(delays[:, 2] != delays[:, 0] + delays[:, 1]):
        raise AssertionError("delay identity violated")
    return int(np.count_nonzero(~res.correct)), delays


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= errors <= trials:
        raise ValueError("need 0 <= errors <= trials and trials >= 1")
    phat = errors / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    if errors == 0:
        lo = 0.0
    if errors == trials:
        hi = 1.0
    return lo, hi


@dataclass(frozen=True)
class ErrorEstimate:
    errors: int
    trials: int
    rate: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "ErrorEstimate":
        lo, hi = wilson_interval(errors, trials)
        rate = errors / trials
        return cls(errors, trials, rate, min(lo, rate), max(hi, rate))

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.rate * (1 - self.rate) / self.trials)


@dataclass(frozen=True)
class DelayStats:
    min: int
    max: int
    mean: float


@dataclass(frozen=True)
class RunSummary:
    config: SimConfig
    estimate: ErrorEstimate
    transmission_delay: DelayStats
    propagation_delay: DelayStats
    n_total: DelayStats

    @property
    def ratio_m_over_n(self) -> float:
        return self.config.m / self.n_total.mean

    def row(self) -> dict:
        cfg, est = self.config, self.estimate
        b = t = c = reps = ""
        if isinstance(cfg.params, OneBitParams):
            b, t, c, reps = cfg.params.b, cfg.params.t, cfg.params.c, cfg.params.r
        elif isinstance(cfg.params, MultiBitParams):
            top = MultiBitSchedule.build(cfg.m, cfg.k, cfg.params).decode_level
            b = ";".join(map(str, cfg.params.b_seq[:top]))
            t = ";".join(map(str, cfg.params.t_seq[:top]))
            reps = cfg.params.r
        elif isinstance(cfg.params, BaselineParams):
            reps = cfg.params.reps_per_hop
        elif cfg.protocol == "p1":
            reps = p1_layout(cfg.m, cfg.p).reps_per_hop
        return {"protocol": cfg.protocol, "m": cfg.m, "k": cfg.k, "p": str(cfg.p), "b": b,
                "t": t, "c": c, "reps": reps,
                "alpha": "" if cfg.alpha is None else repr(cfg.alpha),
                "trials": est.trials, "errors": est.errors, "error_rate": repr(est.rate),
                "ci_low": repr(est.ci_low), "ci_high": repr(est.ci_high),
                "transmission_delay": _fmt(self.transmission_delay.mean),
                "propagation_delay": _fmt(self.propagation_delay.mean),
                "n_total": _fmt(self.n_total.mean),
                "ratio_m_over_n": repr(self.ratio_m_over_n), "seed": cfg.master_seed}


def _fmt(x: float):
    return int(x) if float(x).is_integer() else repr(float(x))


def _stats(col: np.ndarray) -> DelayStats:
    return DelayStats(int(col.min()), int(col.max()), float(col.mean()))


def run_trials(config: SimConfig, chunk: int = CHUNK) -> RunSummary:
    """Run ``config.trials`` independent trials and aggregate them."""
    bounds = [(s, min(s + chunk, config.trials)) for s in range(0, config.trials, chunk)]
    if config.parallelism > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            parts = list(pool.map(_run_chunk, [config] * len(bounds),
                                  [a for a, _ in bounds], [b for _, b in bounds]))
    else:
        parts = [_run_chunk(config, a, b) for a, b in bounds]
    errors = sum(e for e, _ in parts)
    delays = np.concatenate([d for _, d in parts])
    return RunSummary(config, ErrorEstimate.from_counts(errors, config.trials),
                      _stats(delays[:, 0]), _stats(delays[:, 1]), _stats(delays[:, 2]))


def sweep(template: SimConfig, m: Optional[Sequence[int]] = None,
          p: Optional[Sequence[Probability]] = None,
          params: Optional[Sequence[object]] = None) -> list:
    """One :func:`run_trials` per point of the ``m x p x params`` grid, in grid order."""
    ms = list(m) if m is not None else [template.m]
    ps = list(p) if p is not None else [template.p]
    pars = list(params) if params is not None else [template.params]
    if not ms or not ps or not pars:
        raise ValueError("empty sweep grid")
    out = []
    for mm, pp, par in itertools.product(ms, ps, pars):
        if template.protocol == "p0" and params is None:
            par = p0_params(mm, pp, template.params.block_count if template.params else None)
        out.append(run_trials(replace(template, m=mm, p=pp, params=par)))
    return out


@dataclass(frozen=True)
class TableForRun:
    """A bound table tagged with the chain length it was built for."""

    table: BoundTable
    m: int


def bound_table_for(config: SimConfig, levels: Optional[int] = None) -> TableForRun:
    """Analytical table matching a one-bit or multi-bit configuration."""
    if config.protocol in ("onebit", "onebit_chained"):
        par = config.params
        L = decoder_level(config.m, par) if levels is None else levels
        table = onebit_error_recursion(effective_crossover(config.p, par.r), par.b, par.t, L)
    elif config.protocol == "multibit":
        par = config.params
        D = MultiBitSchedule.build(config.m, config.k, par).decode_level
        table = multibit_error_recursion(effective_crossover(config.p, par.r), par,
                                         D if levels is None else levels)
    else:
        raise ValueError("no analytical table for baseline protocols")
    return TableForRun(table, config.m)


@dataclass(frozen=True)
class BoundCheck:
    empirical: float
    bound: float
    standard_error: float
    passed: bool


def analytical_error_bound(config: SimConfig, table: BoundTable) -> float:
    """Union bound on the end-to-end error implied by ``table`` for ``config``."""
    par = config.params
    if config.protocol == "onebit":
        L = decoder_level(config.m, par)
        if L >= len(table.eps):
            raise ValueError("table too short for this configuration")
        spans = -(-config.m // (par.c * par.t ** L))
        return min(1.0, spans * float(table.eps[L]))
    if config.protocol == "multibit":
        D = MultiBitSchedule.build(config.m, config.k, par).decode_level
        if D >= len(table.eps) or D + 1 > par.max_level:
            raise ValueError("table too short for this configuration")
        return min(1.0, par.t(D + 1) * par.b(D + 1) * float(table.eps[D]))
    raise ValueError(f"no analytical bound for {config.protocol}")


def compare_to_bounds(summary: RunSummary, table: Union[BoundTable, TableForRun, float],
                      sigmas: float = 3.0) -> BoundCheck:
    """Check ``empirical <= bound + sigmas * SE`` with the SE taken at the bound."""
    cfg = summary.config
    if isinstance(table, (int, float)):
        bound = float(table)
    else:
        if isinstance(table, TableForRun):
            if table.m != cfg.m:
                raise ValueError(f"table built for m={table.m}, run has m={cfg.m}")
            table = table.table
        expected = {"onebit": "onebit", "multibit": "multibit"}.get(cfg.protocol)
        if table.kind != expected:
            raise ValueError("table kind does not match the protocol")
        eps0 = effective_crossover(cfg.p, cfg.params.r)
        if not math.isclose(float(table.eps0), eps0, rel_tol=1e-9, abs_tol=1e-15):
            raise ValueError("table eps0 does not match the run's crossover probability")
        if cfg.protocol == "onebit" and (table.params.b, table.params.t) != (cfg.params.b, cfg.params.t):
            raise ValueError("table (b, t) does not match the run")
        if cfg.protocol == "multibit" and table.params != cfg.params:
            raise ValueError("table sequences do not match the run")
        bound = analytical_error_bound(cfg, table)
    se = math.sqrt(bound * (1 - bound) / summary.estimate.trials)
    rate = summary.estimate.rate
    return BoundCheck(rate, bound, se, rate <= bound + sigmas * se)


def metadata_line(config_desc: dict) -> str:
    return (f"# version={__version__}, noise={NOISE_VERSION}, "
            f"seed={config_desc.get('master_seed', config_desc.get('seed', ''))}, "
            f"config={json.dumps(config_desc, sort_keys=True, separators=(',', ':'))}")
