"""Command-line entry point (``classfair`` / ``python -m classfair``)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

from .adversary import FIXTURES, AdaptiveAdversary, SuiteBounds, make_fixture
from .algorithms import ALGORITHMS, SELECTORS, TIE_STRATEGIES
from .audit import NOTIONS, audit
from .core import FractionalMatching, Instance, run_online
from .errors import ClassFairError
from .harness import (
    RunConfig,
    load_json,
    render_table,
    reproduce_table1,
    run_monte_carlo,
    run_once,
)


def _fmt(v):
    if v is None or isinstance(v, (bool, str, int)):
        return v
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _emit(records: list, fmt: str, path: str | None):
    if fmt == "json":
        text = json.dumps(records if len(records) != 1 else records[0], indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        keys = list(dict.fromkeys(k for r in records for k in r))
        writer = csv.DictWriter(buf, fieldnames=keys)
        writer.writeheader()
        for r in records:
            writer.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
        text = buf.getvalue()
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_record(rep) -> dict:
    d = rep.to_dict()
    return {k: d[k] for k in (*NOTIONS[:-1], "nonwasteful", "witness", "skipped")}


def _config_from_args(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        data.update(load_json(args.config))
    for key in ("algorithm", "tie", "selector", "seed", "trials", "fixture", "fixture_n", "instance_path"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if getattr(args, "format", None):
        data["output_format"] = args.format
    if getattr(args, "output", None):
        data["output_path"] = args.output
    return RunConfig.from_dict(data)


def _add_run_flags(p, randomised=False):
    p.add_argument("--config", help="JSON file whose keys mirror these flags")
    p.add_argument("--algorithm", choices=[*ALGORITHMS, *[f"nw:{a}" for a in ALGORITHMS]])
    p.add_argument("--tie", choices=TIE_STRATEGIES)
    p.add_argument("--selector", choices=sorted(SELECTORS))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=sorted(FIXTURES))
    src.add_argument("--instance", dest="instance_path", help="instance JSON file")
    p.add_argument("--fixture-n", type=int, help="size parameter of a parameterised fixture")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--output", help="write here instead of stdout")


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    replay, rep = run_once(cfg)
    record = {"algorithm": cfg.algorithm, "items": len(replay.instance.items), **_report_record(rep)}
    if args.show_matching:
        record["matching"] = replay.matching.to_dict()["assign"]
        record["instance"] = replay.instance.to_dict()
    _emit([{k: _fmt(v) for k, v in record.items()}], cfg.output_format, cfg.output_path)
    return 0


def cmd_montecarlo(args) -> int:
    cfg = _config_from_args(args)
    rep = run_monte_carlo(cfg)
    d = rep.to_dict()
    record = {k: d[k] for k in ("algorithm", "trials", "seed", "mean_value", "se_value", "cef_ratio",
                                "cef_mean_of_ratios", "prop", "cprop_ratio", "cprop_se", "usw_mean", "usw_se",
                                "ci_valid")}
    record["cef_ok"] = rep.cef_ok()
    if rep.selected_prob:
        record["agents"] = [
            {"agent": a, "selected": rep.selected_prob[a], "se": rep.selected_se[a], "guide_mass": rep.guide_mass[a],
             "closed_form": rep.closed_form[a], "p_bound": rep.p_bound[a]}
            for a in rep.agents
        ]
    _emit([record], cfg.output_format, cfg.output_path)
    return 0


def cmd_fixture(args) -> int:
    if args.action == "list":
        for name, (kind, _) in sorted(FIXTURES.items()):
            print(f"{name:<28}{kind}")
        return 0
    src = make_fixture(args.name, args.n)
    if isinstance(src, AdaptiveAdversary):
        from .algorithms import make_algorithm

        src = run_online(src, make_algorithm(args.algorithm)).instance
    text = src.to_json() + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_table1(args) -> int:
    bounds = SuiteBounds(max_k=args.max_k, max_agents=args.max_agents, max_items=args.max_items)
    rows = reproduce_table1(count=args.count, seed=args.seed, bounds=bounds)
    if args.format == "table":
        print(render_table(rows))
    else:
        _emit([{k: _fmt(v) for k, v in r.as_record().items()} for r in rows], args.format, args.output)
    return 0 if all(r.ok for r in rows) else 1


def cmd_audit(args) -> int:
    m = FractionalMatching.from_dict(load_json(args.matching))
    inst = Instance.from_dict(load_json(args.instance))
    if m.is_integral:
        m = m.as_integral()
    rep = audit(m, inst)
    _emit([{k: _fmt(v) for k, v in _report_record(rep).items()}], args.format, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="classfair", description="Online class-fair matching: run, audit, reproduce.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay one algorithm on an instance or fixture and audit it")
    _add_run_flags(p)
    p.add_argument("--show-matching", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("montecarlo", help="Monte-Carlo estimates for a randomised algorithm")
    _add_run_flags(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("fixture", help="list or export fixtures")
    p.add_argument("action", choices=("list", "export"))
    p.add_argument("name", nargs="?")
    p.add_argument("--n", type=int)
    p.add_argument("--algorithm", default="greedy", help="algorithm to play an adaptive fixture against")
    p.add_argument("--output")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("table1", help="summary table: suite minima and fixture witnesses")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-k", type=int, default=3)
    p.add_argument("--max-agents", type=int, default=9)
    p.add_argument("--max-items", type=int, default=9)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--output")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("audit", help="audit a matching file against an instance file")
    p.add_argument("matching")
    p.add_argument("instance")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fixture" and args.action == "export" and not args.name:
        parser.error("fixture export needs a name")
    try:
        return args.func(args)
    except ClassFairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
