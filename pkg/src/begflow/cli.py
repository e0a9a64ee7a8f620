"""Command line entry point: simulate, continuum, compare, oracle-check."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Optional

from .continuum import compare_discrete_continuum, integrate_flow, write_continuum_csv
from .energy import ModelParams, ParameterError
from .fixtures import default_fixtures, run_oracle
from .flow import InitialCondition, run_flow, write_audit, write_header, write_side_csv, write_trace_jsonl
from .octagon import OctagonSpec

log = logging.getLogger("begflow")

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, EXIT_ORACLE = 0, 1, 2, 3

DEFAULTS = {
    "k": "0.5",
    "gamma": "3",
    "zeta": "1",
    "epsilon": "0.03125",
    "P": "0.375",
    "D": "0.6",
    "center": "0,0",
    "offsets": "",
    "surfactant": "ring",
    "minimizer": "structured",
    "max_steps": "100",
    "width_cells": "4",
    "T": "0.1",
    "epsilons": "0.03125,0.015625",
    "branch": "floor",
    "regime": "",
    "seed": "",
}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = value
    return out


class RunConfig:
    def __init__(self, values: dict):
        self.values = {**DEFAULTS, **values}
        v = self.values
        try:
            self.k = float(v["k"])
            self.gamma = float(v["gamma"])
            self.zeta = float(v["zeta"])
            self.epsilon = float(v["epsilon"])
            self.max_steps = int(v["max_steps"])
            self.width_cells = int(v["width_cells"])
            self.T = float(v["T"])
            self.epsilons = [float(e) for e in v["epsilons"].split(",") if e.strip()]
            center = tuple(float(c) for c in v["center"].split(","))
            if v["offsets"]:
                offs = [float(c) for c in v["offsets"].split(",")]
                self.octagon = OctagonSpec(tuple(offs))
            else:
                self.octagon = OctagonSpec.from_sides(float(v["P"]), float(v["D"]), center)
            s = v["surfactant"]
            self.surfactant = s if s == "ring" else int(s)
            self.seed: Optional[int] = int(v["seed"]) if v["seed"] else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        self.minimizer = v["minimizer"]
        self.branch = v["branch"]
        self.regime = v["regime"] or None
        if self.minimizer not in ("structured", "brute"):
            raise ConfigError(f"unknown minimizer {self.minimizer!r}")
        if self.branch not in ("floor", "ceil"):
            raise ConfigError(f"unknown branch {self.branch!r}")
        if self.max_steps < 0 or self.T < 0:
            raise ConfigError("max_steps and T must be nonnegative")
        self.params = ModelParams(self.k, self.gamma, self.zeta, self.epsilon)
        if self.gamma == 2:
            warnings.warn("gamma = 2 is the critical case and is not simulated", stacklevel=2)
        self.initial = InitialCondition(self.octagon, self.surfactant)

    def resolved(self) -> dict:
        return dict(sorted(self.values.items()))


def _load(args) -> RunConfig:
    values = {}
    if args.config:
        values = parse_config(Path(args.config).read_text())
    if getattr(args, "seed", None) is not None:
        values["seed"] = str(args.seed)
    if getattr(args, "branch", None):
        values["branch"] = args.branch
    return RunConfig(values)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.params.gamma < 2 or cfg.surfactant != "ring":
        cfg.initial.validate(cfg.params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = run_flow(cfg.initial, cfg.params, cfg.max_steps, cfg.minimizer, cfg.width_cells,
                     order_seed=cfg.seed, audit=args.audit_candidates)
    trace.header["config"] = cfg.resolved()
    write_trace_jsonl(trace, out / "trace.jsonl")
    write_header(trace, out / "run_header.json")
    write_side_csv(trace, out / "sides.csv")
    if args.audit_candidates:
        write_audit(trace, out / "audit.csv")
    print(f"stop_reason={trace.stop_reason} steps={len(trace.steps) - 1}")
    return EXIT_OK


def cmd_continuum(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tr = integrate_flow(cfg.octagon, cfg.params, cfg.T, cfg.branch, cfg.regime)
    write_continuum_csv(tr, out / "continuum.csv")
    print(f"t_end={tr.t_end!r} events={len(tr.events)} stopped={tr.stopped or 'horizon'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cont = integrate_flow(cfg.octagon, cfg.params, cfg.T, cfg.branch, cfg.regime)
    traces = []
    for eps in sorted(cfg.epsilons, reverse=True):
        p = cfg.params.with_epsilon(eps)
        steps = math.ceil(cont.t_end / p.tau - 1e-9)
        traces.append(run_flow(cfg.initial, p, steps, cfg.minimizer, cfg.width_cells, order_seed=cfg.seed))
    table = compare_discrete_continuum(traces, cont)
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "sup_hausdorff"])
        for eps, d in table:
            w.writerow([repr(eps), repr(d)])
            print(f"{eps!r}\t{d!r}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_oracle(default_fixtures())
    worst = max(r.discrepancy for r in results)
    with open(out / "oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fixture", "brute", "structured", "discrepancy"])
        for r in results:
            w.writerow([r.name, repr(r.brute), repr(r.structured), repr(r.discrepancy)])
    print(f"fixtures={len(results)} max_discrepancy={worst!r}")
    return EXIT_OK if worst <= 1e-12 else EXIT_ORACLE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="begflow", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("continuum", cmd_continuum),
                     ("compare", cmd_compare), ("oracle-check", cmd_oracle_check)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="order seed for surfactant placement")
        sp.add_argument("--branch", choices=("floor", "ceil"), default=None)
        sp.add_argument("--audit-candidates", action="store_true", help="dump every scanned candidate")
        sp.set_defaults(func=fn)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ParameterError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
