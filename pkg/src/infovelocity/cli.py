"""
Command-line front end.

``infovelocity simulate|sweep|analyze ...`` writes CSV (or JSON with
``--format json``) to stdout or ``--out``.  Every output starts with a
``# version=..., seed=..., config=...`` line echoing the effective
configuration.  Exit codes: 0 success, 2 configuration error, 3 internal
assertion failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Optional

from . import __version__
from .analysis import (delay_budget, minimal_repetitions, multibit_error_recursion,
                       onebit_error_recursion, repetition_count, velocity_bounds)
from .baseline import BaselineParams, p0_params
from .channel import NOISE_VERSION, as_probability, validate_crossover
from .converse import (ConverseParams, converse_table, envelope, find_envelope_c,
                       verify_envelope)
from .multibit import MultiBitParams
from .onebit import ChainParams, OneBitParams, effective_crossover
from .simulator import CSV_COLUMNS, PROTOCOLS, SimConfig, run_trials

ANALYSES = ("recursion", "velocity", "converse", "repetition", "delay")

# flag defaults, applied after the config file so that file keys can fill gaps
DEFAULTS = {"protocol": "onebit", "m": "64", "k": 1, "p": "1/48", "trials": 1000, "seed": 0,
            "jobs": 1, "format": "csv"}
ANALYZE_DEFAULTS = {"levels": 8, "target": "1/48", "delta": 0.5, "gamma": 0.3, "v0": 0.35,
                    "imax": 500, "jmax": 200}
# keys that cannot change results stay out of the metadata line, so that
# output is byte-identical across --jobs and --out
UNECHOED = {"out", "format", "jobs"}


class ConfigError(ValueError):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument
    g("--config", help="JSON file whose keys mirror the flags; flags win")
    g("--protocol", choices=PROTOCOLS)
    g("--m", help="chain length (comma list for sweep)")
    g("--k", type=int, help="message bits (multibit)")
    g("--p", help="crossover probability, decimal or fraction such as 1/48")
    g("--b", help="one-bit block size, or comma list b_1,b_2,... for multibit")
    g("--t", help="one-bit spacing base, or comma list t_1,t_2,... for multibit")
    g("--c", type=int, help="level-0 spacing of the one-bit protocol")
    g("--reps", type=int, help="per-hop repetitions (odd)")
    g("--alpha", type=float, help="chaining exponent for onebit_chained")
    g("--trials", type=int)
    g("--seed", type=int)
    g("--jobs", type=int, help="worker processes")
    g("--out", help="output file (default stdout)")
    g("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infovelocity", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    _add_common(sub.add_parser("simulate", help="run Monte Carlo trials for one configuration"))
    _add_common(sub.add_parser("sweep", help="one simulate row per grid point"))
    an = sub.add_parser("analyze", help="analytical tables")
    an.add_argument("analysis", choices=ANALYSES)
    _add_common(an)
    an.add_argument("--levels", type=int)
    an.add_argument("--target", help="error target for repetition sizing")
    an.add_argument("--delta", type=float)
    an.add_argument("--gamma", type=float)
    an.add_argument("--v0", type=float)
    an.add_argument("--imax", type=int)
    an.add_argument("--jmax", type=int)
    an.add_argument("--cexp", type=float, help="envelope constant (default: bisection)")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < explicit flags."""
    opts = {k: v for k, v in vars(args).items() if k != "config"}
    if args.config:
        try:
            with open(args.config) as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_opts, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in file_opts.items():
            if opts.get(key) is None:
                opts[key] = value
    defaults = dict(DEFAULTS, **(ANALYZE_DEFAULTS if opts["subcommand"] == "analyze" else {}))
    for key, value in defaults.items():
        if opts.get(key) is None:
            opts[key] = value
    return opts


def _ints(text, name: str) -> list:
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name} expects integers") from exc


def _probs(text) -> list:
    items = text if isinstance(text, list) else str(text).split(",")
    out = []
    for item in items:
        item = str(item).strip()
        try:
            validate_crossover(item)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad probability {item!r}: {exc}") from exc
        out.append(item)
    return out


def _single(values: list, name: str):
    if len(values) != 1:
        raise ConfigError(f"--{name} takes a single value here; use sweep for grids")
    return values[0]


def protocol_params(opts: dict, m: int, p: str):
    """Parameter object for ``opts['protocol']`` built from the flags."""
    proto = opts["protocol"]
    b, t, c, r = opts.get("b"), opts.get("t"), opts.get("c"), opts.get("reps")
    if proto in ("onebit", "onebit_chained"):
        kw = {}
        if b is not None:
            kw["b"] = _single(_ints(b, "b"), "b")
        if t is not None:
            kw["t"] = _single(_ints(t, "t"), "t")
        if c is not None:
            kw["c"] = c
        if r is not None:
            kw["r"] = r
        return OneBitParams(**kw)
    if c is not None:
        raise ConfigError(f"--c does not apply to {proto}")
    if proto == "multibit":
        base = MultiBitParams()
        bs = _ints(b, "b") if b is not None else []
        ts = _ints(t, "t") if t is not None else []
        b_seq = tuple(bs) + base.b_seq[len(bs):]
        t_seq = tuple(ts) + base.t_seq[len(ts):]
        return MultiBitParams(b_seq, t_seq, 1 if r is None else r)
    if b is not None or t is not None:
        raise ConfigError(f"--b/--t do not apply to {proto}")
    if proto == "p0":
        if r is None:
            return p0_params(m, p)
        return BaselineParams(r, m, "P0")
    if r is not None:
        raise ConfigError("p1 sizes its own repetitions")
    return None


def sim_config(opts: dict, m: int, p: str) -> SimConfig:
    proto = opts["protocol"]
    alpha = opts.get("alpha")
    if alpha is not None and proto != "onebit_chained":
        raise ConfigError("--alpha only applies to onebit_chained")
    return SimConfig(proto, m, p, k=opts["k"], params=protocol_params(opts, m, p),
                     alpha=alpha, trials=opts["trials"], master_seed=opts["seed"],
                     parallelism=opts["jobs"])


def effective_config(opts: dict) -> dict:
    return {k: v for k, v in sorted(opts.items()) if v is not None and k not in UNECHOED}


def metadata(opts: dict) -> str:
    cfg = json.dumps(effective_config(opts), sort_keys=True, separators=(",", ":"))
    return f"# version={__version__}, noise={NOISE_VERSION}, seed={opts.get('seed')}, config={cfg}"


def render(opts: dict, columns, rows, notes: tuple = ()) -> str:
    if opts["format"] == "json":
        doc = {"version": __version__, "noise": NOISE_VERSION, "seed": opts.get("seed"),
               "config": effective_config(opts), "notes": list(notes),
               "columns": list(columns), "rows": rows}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(metadata(opts) + "\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def emit(opts: dict, text: str) -> None:
    if opts.get("out"):
        with open(opts["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(opts: dict) -> int:
    m = _single(_ints(opts["m"], "m"), "m")
    p = _single(_probs(opts["p"]), "p")
    summary = run_trials(sim_config(opts, m, p))
    emit(opts, render(opts, CSV_COLUMNS, [summary.row()]))
    return 0


def cmd_sweep(opts: dict) -> int:
    ms, ps = _ints(opts["m"], "m"), _probs(opts["p"])
    if not ms or not ps:
        raise ConfigError("empty sweep grid")
    rows = []
    for m in ms:
        for p in ps:
            rows.append(run_trials(sim_config(opts, m, p)).row())
    emit(opts, render(opts, CSV_COLUMNS, rows))
    return 0


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        x = float(x)
    return repr(float(x))


def _analyze_recursion(opts: dict):
    p = _single(_probs(opts["p"]), "p")
    proto = opts["protocol"]
    if proto == "multibit":
        params = protocol_params(opts, 1, p)
        eps0 = effective_crossover(p, params.r) if params.r > 1 else as_probability(p)
        table = multibit_error_recursion(eps0, params, opts["levels"])
    elif proto == "onebit":
        params = protocol_params(opts, 1, p)
        eps0 = effective_crossover(p, params.r) if params.r > 1 else as_probability(p)
        table = onebit_error_recursion(eps0, params.b, params.t, opts["levels"])
    else:
        raise ConfigError("recursion needs --protocol onebit or multibit")
    rows = [{"level": l, "epsilon_bound": _fmt(e), "epsilon_bound_simplified": _fmt(s)}
            for l, (e, s) in enumerate(zip(table.eps, table.eps_simplified))]
    return ("level", "epsilon_bound", "epsilon_bound_simplified"), rows, ()


def _analyze_velocity(opts: dict):
    rows = []
    for p in _probs(opts["p"]):
        v = velocity_bounds(p)
        rows.append({"p": p, "lower": _fmt(v.lower), "upper": _fmt(v.upper),
                     "lower_annotation": _fmt(v.lower_annotation)})
    return ("p", "lower", "upper", "lower_annotation"), rows, ()


def _analyze_converse(opts: dict):
    delta, gamma, v0 = opts["delta"], opts["gamma"], opts["v0"]
    c = opts.get("cexp")
    if c is None:
        c = find_envelope_c(gamma, delta)
    params = ConverseParams(delta, gamma, c, v0)
    table = converse_table(delta, opts["imax"], opts["jmax"])
    report = verify_envelope(table, params)
    env = envelope(params, table.i_max, table.j_max)
    rows = []
    for i in range(table.i_max + 1):
        for j in range(table.j_max + 1):
            f, e = float(table.F[i, j]), float(env[i, j])
            rows.append({"i": i, "j": j, "F": repr(f), "envelope": repr(e),
                         "within_envelope": str(f <= e + 1e-12).lower()})
    note = (f"envelope_ok={str(report.ok).lower()}, c_exp={c!r}, "
            f"max_excess={report.max_excess!r}, probe={report.probe_value!r}")
    return ("i", "j", "F", "envelope", "within_envelope"), rows, (note,)


def _analyze_repetition(opts: dict):
    target = _single(_probs(opts["target"]), "target")
    rows = []
    for p in _probs(opts["p"]):
        n = repetition_count(p, target)
        rows.append({"p": p, "target": target, "hoeffding_reps": n,
                     "exact_min_reps": minimal_repetitions(p, as_probability(target)),
                     "effective_crossover": _fmt(effective_crossover(p, n))})
    return ("p", "target", "hoeffding_reps", "exact_min_reps", "effective_crossover"), rows, ()


def _analyze_delay(opts: dict):
    proto = opts["protocol"]
    if proto not in ("onebit", "onebit_chained", "multibit"):
        raise ConfigError("delay needs a one-bit or multibit protocol")
    rows = []
    for m in _ints(opts["m"], "m"):
        params = protocol_params(opts, m, "0")
        inst = ChainParams(opts["alpha"] or ChainParams().alpha).instances(m) \
            if proto == "onebit_chained" else 1
        k = opts["k"] if proto == "multibit" else 1
        d = delay_budget(m, params, k=k, instances=inst)
        rows.append({"m": m, "level0_wait": d.level0_wait,
                     "higher_level_wait": d.higher_level_wait,
                     "propagation_bound": d.propagation_bound,
                     "transmission_bits": d.transmission_bits, "total": d.total})
    return ("m", "level0_wait", "higher_level_wait", "propagation_bound", "transmission_bits",
            "total"), rows, ()


def cmd_analyze(opts: dict) -> int:
    fn = {"recursion": _analyze_recursion, "velocity": _analyze_velocity,
          "converse": _analyze_converse, "repetition": _analyze_repetition,
          "delay": _analyze_delay}[opts["analysis"]]
    columns, rows, notes = fn(opts)
    emit(opts, render(opts, columns, rows, notes))
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        handler = {"simulate": cmd_simulate, "sweep": cmd_sweep,
                   "analyze": cmd_analyze}[opts["subcommand"]]
        return handler(opts)
    except BrokenPipeError:
        sys.stdout = None
        return 0
    except (ValueError, ZeroDivisionError, OSError) as exc:
        print(f"infovelocity: error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"infovelocity: internal assertion failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
