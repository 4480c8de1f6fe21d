"""Command-line front end.

Every subcommand reads one JSON config document::

    {"law": {"0": 1.0, "2": 1.0}, "crossing_set": [0], "t": 1.0, "K": 20}

Recognised fields (unknown fields are rejected):

    law            object "j": rate, j != 1                     (required)
    crossing_set   tracked offspring sizes                      [0]
    t              time                                         (subcommand dependent)
    t_grid         list of times, used instead of t
    i0             initial population                           1
    K              crossing-order cap |k| <= K                  20
    Jmax           population cap for joint tables              40
    v              PGF argument, one entry per crossing member
    seed           64-bit base seed                             0
    reps           Monte Carlo replicates                       10000
    horizon        simulation time when t is absent
    ode            {"abs_tol": 1e-10, "rel_tol": 1e-8}
    output         "tsv" or "json"                              "tsv"

Exit status: 0 success, 1 failed statistical validation, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

from . import closed_form, engine, roots, sim, validate
from .law import LawError, as_crossing_set, make_law
from .series import CoeffTable, Truncation, convolve_power

FIELDS = {"law", "crossing_set", "t", "t_grid", "i0", "K", "Jmax", "v", "seed", "reps",
          "horizon", "ode", "output"}
DEFAULTS = {"crossing_set": [0], "i0": 1, "K": 20, "Jmax": 40, "seed": 0, "reps": 10000,
            "output": "tsv"}
COMMANDS = ("rho", "rho-taylor", "dist", "joint", "pgf", "extinct-dist", "closed-form",
            "simulate", "validate")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Config:
    """Validated view of a config document."""

    def __init__(self, doc: Any):
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        unknown = sorted(set(doc) - FIELDS)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        self.doc = {**DEFAULTS, **doc}
        if "law" not in doc:
            raise ConfigError("law", "missing required field")
        if not isinstance(doc["law"], dict):
            raise ConfigError("law", "must be an object mapping offspring size to rate")
        try:
            self.law = make_law(doc["law"])
        except (LawError, TypeError, ValueError) as exc:
            raise ConfigError("law", str(exc)) from None
        try:
            self.N = as_crossing_set(self._int_list("crossing_set"), self.law)
        except LawError as exc:
            raise ConfigError("crossing_set", str(exc)) from None

    def _get(self, field: str):
        if field not in self.doc:
            raise ConfigError(field, "missing required field")
        return self.doc[field]

    def _int_list(self, field: str) -> list[int]:
        val = self._get(field)
        if not isinstance(val, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                                for x in val):
            raise ConfigError(field, "must be a list of integers")
        return val

    def integer(self, field: str, minimum: int = 0) -> int:
        val = self._get(field)
        if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
            raise ConfigError(field, f"must be an integer >= {minimum}")
        return val

    def number(self, field: str, minimum: float = 0.0) -> float:
        val = self._get(field)
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val) \
                or val < minimum:
            raise ConfigError(field, f"must be a finite number >= {minimum}")
        return float(val)

    def times(self) -> list[float]:
        if "t_grid" in self.doc:
            grid = self.doc["t_grid"]
            if not isinstance(grid, list) or not grid:
                raise ConfigError("t_grid", "must be a nonempty list of times")
            out = []
            for x in grid:
                if not isinstance(x, (int, float)) or isinstance(x, bool) or not x >= 0 \
                        or not math.isfinite(x):
                    raise ConfigError("t_grid", "times must be finite and nonnegative")
                out.append(float(x))
            return out
        return [self.number("t")]

    def v(self) -> list[float]:
        val = self._get("v")
        if not isinstance(val, list) or len(val) != len(self.N):
            raise ConfigError("v", f"must be a list with one entry per crossing member ({len(self.N)})")
        for x in val:
            if not isinstance(x, (int, float)) or isinstance(x, bool) or not 0 <= x <= 1:
                raise ConfigError("v", "entries must lie in [0, 1]")
        return [float(x) for x in val]

    def ode(self) -> engine.OdeSettings:
        val = self.doc.get("ode", {})
        if not isinstance(val, dict) or set(val) - {"abs_tol", "rel_tol"}:
            raise ConfigError("ode", "must be an object with abs_tol and/or rel_tol")
        try:
            return engine.OdeSettings(abs_tol=float(val.get("abs_tol", 1e-10)),
                                      rel_tol=float(val.get("rel_tol", 1e-8)))
        except (TypeError, ValueError) as exc:
            raise ConfigError("ode", str(exc)) from None

    def seed(self, override: int | None) -> int:
        if override is not None:
            return override
        s = self.integer("seed")
        if s >= 1 << 64:
            raise ConfigError("seed", "must fit in 64 bits")
        return s

    def sim_time(self) -> float:
        return self.number("t" if "t" in self.doc or "horizon" not in self.doc else "horizon")

    def output(self, override: str | None) -> str:
        fmt = override or self.doc["output"]
        if fmt not in ("tsv", "json"):
            raise ConfigError("output", "must be 'tsv' or 'json'")
        return fmt


# -- tables ----------------------------------------------------------------

def _columns(table: CoeffTable, members: Sequence[int]) -> list[str]:
    return (["j"] if table.joint else []) + [f"k{m}" for m in members] + ["value"]


def _clamp(x: float, raw: bool) -> float:
    return x if raw else min(max(x, 0.0), 1.0)


def table_records(table: CoeffTable, members: Sequence[int], raw: bool,
                  extra: dict | None = None) -> tuple[list[str], list[list]]:
    cols = _columns(table, members)
    rows = []
    for key in sorted(table):
        rows.append(list(key) + [_clamp(table[key], raw)])
    if extra:
        cols = list(extra) + cols
        rows = [list(extra.values()) + r for r in rows]
    return cols, rows


def format_tsv(cols: list[str], rows: list[list]) -> str:
    lines = ["\t".join(cols)]
    lines += ["\t".join(repr(x) if isinstance(x, float) else str(x) for x in r) for r in rows]
    return "\n".join(lines) + "\n"


def format_json(cols: list[str], rows: list[list], meta: dict) -> str:
    doc = {**meta, "columns": cols, "records": [dict(zip(cols, r)) for r in rows]}
    return json.dumps(doc, indent=1) + "\n"


def parse_table(text: str, fmt: str = "tsv", K: int | None = None,
                Jmax: int | None = None) -> CoeffTable:
    """Inverse of the emitters: rebuild a ``CoeffTable`` from emitted text.

    Columns other than ``j``, ``k*`` and ``value`` (such as ``t``) are ignored.
    """
    if fmt == "json":
        doc = json.loads(text)
        cols = doc["columns"]
        rows = [[rec[c] for c in cols] for rec in doc["records"]]
        K = doc.get("K", K)
        Jmax = doc.get("Jmax", Jmax)
    else:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        cols = lines[0].split("\t")
        rows = [[float(x) if c == "value" or c == "t" else int(x)
                 for c, x in zip(cols, ln.split("\t"))] for ln in lines[1:]]
    kcols = [i for i, c in enumerate(cols) if c.startswith("k")]
    joint = "j" in cols
    entries = {}
    for r in rows:
        key = ((int(r[cols.index("j")]),) if joint else ()) + tuple(int(r[i]) for i in kcols)
        entries[key] = float(r[cols.index("value")])
    if K is None:
        K = max((sum(key[1:] if joint else key) for key in entries), default=0)
    if joint and Jmax is None:
        Jmax = max(key[0] for key in entries)
    return CoeffTable(entries, len(kcols), Truncation(K, Jmax if joint else None), slack=1.0)


# -- commands --------------------------------------------------------------

class Result:
    def __init__(self, text_tsv: str, text_json: str, code: int = 0):
        self.tsv, self.json, self.code = text_tsv, text_json, code


def _tables_result(tables: list[tuple[dict, CoeffTable]], members, raw: bool, meta: dict) -> Result:
    cols, rows = None, []
    for extra, table in tables:
        c, r = table_records(table, members, raw, extra)
        cols = c
        rows.extend(r)
    trunc = tables[0][1].truncation
    meta = {**meta, "K": trunc.K}
    if trunc.joint:
        meta["Jmax"] = trunc.jmax
    return Result(format_tsv(cols, rows), format_json(cols, rows, meta))


def _per_time(cfg: Config, fn) -> list[tuple[dict, CoeffTable]]:
    grid = cfg.times()
    multi = "t_grid" in cfg.doc
    return [({"t": t} if multi else {}, fn(t)) for t in grid]


def _closed_form_model(cfg: Config, model: str):
    rates = cfg.law.as_dict()
    top = {"bd": 2, "cubic": 3}[model]
    if set(rates) != {0, top}:
        raise ConfigError("law", f"closed form '{model}' needs rates at exactly 0 and {top}")
    if cfg.N.members != (0,):
        raise ConfigError("crossing_set", "closed forms count deaths; use [0]")
    b = cfg.law.total_rate
    p = rates[0] / b
    return p, 1.0 - p, b


def run_command(cmd: str, cfg: Config, args) -> Result:
    law, N, raw = cfg.law, cfg.N, args.raw
    members = N.members
    meta = {"command": cmd, "crossing_set": list(members)}
    if cmd == "rho":
        value = roots.rho_weighted(law, N, cfg.v()) if "v" in cfg.doc else roots.rho_plain(law)
        return Result(f"{value:.12g}\n", json.dumps({**meta, "value": value}) + "\n")
    if cmd == "rho-taylor":
        table = roots.rho_taylor(law, N, cfg.integer("K"))
        return _tables_result([({}, table)], members, raw, meta)
    if cmd == "extinct-dist":
        table = engine.extinction_conditioned_coeffs(law, N, cfg.integer("K"))
        return _tables_result([({}, table)], members, raw, meta)
    if cmd == "dist":
        K, ode = cfg.integer("K"), cfg.ode()
        tables = _per_time(cfg, lambda t: engine.marginal_coeffs(law, N, t, K, ode))
        return _tables_result(tables, members, raw, meta)
    if cmd == "joint":
        K, J, ode = cfg.integer("K"), cfg.integer("Jmax"), cfg.ode()
        tables = _per_time(cfg, lambda t: engine.joint_coeffs(law, N, t, J, K, ode))
        return _tables_result(tables, members, raw, meta)
    if cmd == "pgf":
        v, i0, ode = cfg.v(), cfg.integer("i0"), cfg.ode()
        rows = [[t, engine.pgf_from_state_i(law, N, t, v, i0, ode)] for t in cfg.times()]
        cols = ["t", "value"]
        return Result(format_tsv(cols, rows), format_json(cols, rows, {**meta, "v": v, "i0": i0}))
    if cmd == "closed-form":
        if args.model is None:
            raise ConfigError("model", "closed-form needs a model: bd or cubic")
        p, q, b = _closed_form_model(cfg, args.model)
        K = cfg.integer("K")
        trunc = Truncation(K)
        if "t" in cfg.doc or "t_grid" in cfg.doc:
            fn = closed_form.bd_death_coeffs if args.model == "bd" else closed_form.cubic_death_coeffs

            def coeffs(t):
                vals = fn(p, q, b, t, K)
                return CoeffTable({(n,): x for n, x in enumerate(vals)}, 1, trunc, slack=1e-8)

            tables = _per_time(cfg, coeffs)
        else:
            fn = (closed_form.bd_extinction_series if args.model == "bd"
                  else closed_form.cubic_extinction_series)
            vals = fn(p, q, K)
            tables = [({}, CoeffTable({(n,): float(x) for n, x in enumerate(vals)}, 1, trunc))]
        return _tables_result(tables, members, raw, {**meta, "model": args.model})
    if cmd == "simulate":
        t = cfg.sim_time()
        emp = sim.monte_carlo(law, N, cfg.integer("i0"), t, cfg.integer("reps", 1),
                              cfg.seed(args.seed), parallelism=args.threads)
        cols = ["j"] + [f"k{m}" for m in members] + ["value"]
        rows = [list(key) + [c] for key, c in sorted(emp.counts.items())]
        sim_meta = {**meta, "t": t, "i0": emp.i0, "replicates": emp.replicates,
                    "base_seed": emp.base_seed, "aborted": emp.aborted, "absorbed": emp.absorbed}
        return Result(format_tsv(cols, rows), format_json(cols, rows, sim_meta))
    if cmd == "validate":
        t, K = cfg.sim_time(), cfg.integer("K")
        emp = sim.monte_carlo(law, N, cfg.integer("i0"), t, cfg.integer("reps", 1),
                              cfg.seed(args.seed), parallelism=args.threads)
        if emp.i0 == 1:
            analytic = engine.marginal_coeffs(law, N, t, K, cfg.ode())
        else:
            analytic = convolve_power(engine.marginal_coeffs(law, N, t, K, cfg.ode()), emp.i0)
        report = validate.mc_z_report(emp, analytic)
        code = 0 if report.passed else 1
        return Result(report.render() + "\n", json.dumps({**meta, **report.to_dict()}, indent=1) + "\n",
                      code)
    raise ConfigError("command", f"unknown subcommand {cmd!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbcross",
        description="Crossing-count distributions of Markov branching processes.",
        epilog=__doc__.split("Recognised fields", 1)[1].join(["Config fields", ""]),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=COMMANDS, help="what to compute")
    parser.add_argument("model", nargs="?", choices=("bd", "cubic"),
                        help="closed-form model (closed-form only)")
    parser.add_argument("--config", required=True, help="path to the JSON config, or - for stdin")
    parser.add_argument("--output", default="-", help="output path, - for stdout (default)")
    parser.add_argument("--format", choices=("tsv", "json"), default=None,
                        help="output format; overrides the config's 'output' (default tsv)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for simulate/validate; never changes results (default 1)")
    parser.add_argument("--raw", action="store_true",
                        help="emit probabilities without clamping to [0, 1]")
    parser.add_argument("--seed", type=int, default=None, help="base seed; overrides the config")
    return parser


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        if args.seed is not None and not 0 <= args.seed < 1 << 64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.model is not None and args.command != "closed-form":
            raise ConfigError("model", "only closed-form takes a model argument")
        try:
            text = sys.stdin.read() if args.config == "-" else open(args.config).read()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"malformed JSON: {exc}") from None
        cfg = Config(doc)
        fmt = cfg.output(args.format)
        result = run_command(args.command, cfg, args)
    except ConfigError as exc:
        print(f"mbcross: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"mbcross: error: {exc}", file=sys.stderr)
        return 2
    out = result.json if fmt == "json" else result.tsv
    if args.output == "-":
        sys.stdout.write(out)
    else:
        with open(args.output, "w") as fh:
            fh.write(out)
    return result.code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
