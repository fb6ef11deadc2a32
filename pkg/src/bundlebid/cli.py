"""Command line pipeline: gen -> bid -> clear -> report, plus a one-shot campaign.

Exit codes: 0 success, 2 bad input or configuration, 3 pricing limit exceeded,
4 requests that cannot be covered.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from .clustering import PMP_EXACT_LIMIT
from .enumeration import bids_document, bids_from_csv, bids_to_csv, read_bids_document
from .errors import (
    BundleBidError,
    Infeasible,
    NoFeasiblePair,
    ParseError,
    SchemaError,
    SetTooLarge,
    Uncoverable,
)
from .evaluation import (
    STRATEGIES,
    AuctionOutcome,
    CampaignResult,
    CampaignRow,
    StrategyConfig,
    compute_metrics,
    kappa2_series,
    rows_to_csv,
    run_auction,
    run_campaign,
    strategy_bids,
    summary_json,
)
from .instance_gen import GenConfig, SyntheticSource, generate_scenario
from .model import load_scenario, save_scenario
from .tsp import HELD_KARP_LIMIT
from .wdp import solution_document

EXIT_OK, EXIT_CONFIG, EXIT_LIMIT, EXIT_INFEASIBLE = 0, 2, 3, 4
SEED_ENV = "BUNDLEBID_SEED"

log = logging.getLogger("bundlebid")


class ConfigError(Exception):
    pass


def _alpha(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1]")
    return value


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise ConfigError(f"no --seed given and {SEED_ENV} is unset")
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file not found: {path}")
    return p


def _write(path: str | None, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _config(args) -> StrategyConfig:
    return StrategyConfig(alpha=args.alpha, seed=getattr(args, "seed", None),
                          held_karp_limit=args.held_karp_limit,
                          pmp_exact_limit=args.pmp_exact_limit)


# -- commands ---------------------------------------------------------------

def cmd_gen(args) -> int:
    seed = _seed(args)
    if args.cvrp:
        source = _existing(args.cvrp).read_text()
    else:
        source = SyntheticSource(customers=args.synthetic, cap=args.source_cap,
                                 seed=args.source_seed if args.source_seed is not None else seed)
    try:
        cfg = GenConfig(m=args.m, cap=args.cap, rival_bid_count=args.rivals, seed=seed,
                        rival_carriers=args.carriers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    scenario = generate_scenario(source, cfg)
    _write(args.out, save_scenario(scenario))
    print(f"seed={seed} requests={scenario.instance.n} cap={scenario.instance.cap} "
          f"rival_bids={len(scenario.rival_bids)}", file=sys.stderr)
    return EXIT_OK


def cmd_bid(args) -> int:
    scenario = load_scenario(_existing(args.scenario).read_bytes())
    cfg = _config(args)
    start = time.perf_counter()
    bids = strategy_bids(args.strategy, scenario, cfg)
    ms = int(round((time.perf_counter() - start) * 1000))
    meta = {
        "strategy": args.strategy,
        "scenario_seed": scenario.seed,
        "n": scenario.instance.n,
        "count": len(bids),
        "held_karp_limit": cfg.held_karp_limit,
    }
    if args.strategy == "psc":
        meta["alpha"] = str(cfg.alpha)
    if args.strategy in ("ran", "rann", "cpmc"):
        meta["seed"] = scenario.seed if cfg.seed is None else cfg.seed
    if args.strategy == "cpmc":
        meta["pmp_exact_limit"] = cfg.pmp_exact_limit
    if args.record_runtime:
        meta["runtime_ms"] = ms
    if args.format == "csv":
        _write(args.out, bids_to_csv(bids))
    else:
        _write(args.out, bids_document(bids, meta))
    print(f"strategy={args.strategy} bids={len(bids)} ms={ms}", file=sys.stderr)
    return EXIT_OK


def _read_bids(path: str, n: int):
    p = _existing(path)
    text = p.read_text()
    if p.suffix.lower() == ".csv":
        return {"strategy": p.stem}, bids_from_csv(text, n)
    return read_bids_document(text, n)


def cmd_clear(args) -> int:
    scenario = load_scenario(_existing(args.scenario).read_bytes())
    inst = scenario.instance
    if args.bids:
        meta, bids = _read_bids(args.bids, inst.n)
    else:
        meta, bids = {"strategy": "none"}, []
    out = run_auction(scenario, bids, meta.get("strategy", "?"), meta.get("runtime_ms"))
    extra = {
        "strategy": out.strategy,
        "bids": out.bids_submitted,
        "won": out.bids_won,
        "f_b": out.f_b,
        "n": inst.n,
        "cap": inst.cap,
        "seed": scenario.seed,
    }
    if "alpha" in meta:
        extra["alpha"] = meta["alpha"]
    if out.runtime_ms is not None:
        extra["runtime_ms"] = out.runtime_ms
    _write(args.out, solution_document(out.solution, **extra))
    print(f"f_a={out.f_a} f_b={out.f_b} won={out.bids_won}/{out.bids_submitted}", file=sys.stderr)
    return EXIT_OK


def _outcome(doc: dict) -> AuctionOutcome:
    try:
        return AuctionOutcome(doc["strategy"], doc["bids"], doc["won"], doc["f_a"], doc["f_b"],
                              doc.get("runtime_ms"))
    except KeyError as exc:
        raise SchemaError(f"solution file lacks field {exc}") from None


def cmd_report(args) -> int:
    groups: dict[tuple, list[dict]] = {}
    for path in args.solutions:
        try:
            doc = json.loads(_existing(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
        key = (doc.get("seed"), doc.get("n"), doc.get("cap"))
        groups.setdefault(key, []).append(doc)
    result = CampaignResult()
    for index, ((seed, n, cap), docs) in enumerate(groups.items()):
        ebbs = [d for d in docs if d.get("strategy") == "ebbs"]
        if len(ebbs) != 1:
            raise ConfigError(f"scenario seed={seed}: need exactly one ebbs solution, found {len(ebbs)}")
        ref = _outcome(ebbs[0])
        rank = {name: k for k, name in enumerate(STRATEGIES)}
        ordered = sorted(docs, key=lambda d: rank.get(d.get("strategy"), len(rank)))
        for d in ordered:
            out = _outcome(d)
            alpha = Fraction(d["alpha"]) if "alpha" in d else None
            result.rows.append(CampaignRow(index, seed, n, cap, out, compute_metrics(out, ref), alpha))
    _emit_report(result, args)
    return EXIT_OK


def _emit_report(result: CampaignResult, args) -> None:
    _write(args.csv, rows_to_csv(result.rows, include_runtime=args.runtime))
    if args.summary:
        _write(args.summary, summary_json(result))
    if args.series:
        _write(args.series, kappa2_series(result.rows))


def cmd_campaign(args) -> int:
    scenarios = [load_scenario(_existing(p).read_bytes()) for p in args.scenarios]
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}")
    result = run_campaign(scenarios, strategies, _config(args), jobs=args.jobs)
    _emit_report(result, args)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _limits(p):
    p.add_argument("--alpha", type=_alpha, default=Fraction(1, 10),
                   help="PSC fraction of top-synergy pairs kept (default 0.1)")
    p.add_argument("--held-karp-limit", type=int, default=HELD_KARP_LIMIT)
    p.add_argument("--pmp-exact-limit", type=int, default=PMP_EXACT_LIMIT)


def _report_outputs(p):
    p.add_argument("--csv", default="-", help="per-row CSV output (default stdout)")
    p.add_argument("--summary", help="aggregate JSON output")
    p.add_argument("--series", help="kappa2 plot series CSV output")
    p.add_argument("--runtime", action="store_true", help="fill the ms column")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bundlebid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--cvrp", help="classic-format CVRP source file")
    src.add_argument("--synthetic", type=int, metavar="N",
                     help="random source with N customers instead of a file")
    p.add_argument("--source-cap", type=int, default=160, help="capacity of the synthetic source")
    p.add_argument("--source-seed", type=int, help="seed of the synthetic source (default --seed)")
    p.add_argument("--m", type=int, help="number of requests taken from the source")
    p.add_argument("--cap", type=int, help="override the vehicle capacity")
    p.add_argument("--rivals", type=int, default=1000, help="number of rival bids")
    p.add_argument("--carriers", type=int, default=5, help="rival carrier ids to cycle through")
    p.add_argument("--seed", type=int, help=f"generator seed (fallback ${SEED_ENV})")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bid", help="generate focal bids for one strategy")
    p.add_argument("scenario")
    p.add_argument("--strategy", choices=STRATEGIES, default="ebbs")
    p.add_argument("--seed", type=int, help="seed for random strategies (default scenario seed)")
    _limits(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--record-runtime", action="store_true",
                   help="store wall-clock runtime in the metadata header")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bid)

    p = sub.add_parser("clear", help="solve the winner determination problem")
    p.add_argument("scenario")
    p.add_argument("--bids", help="focal bid file (JSON or .csv); omitted = rivals only")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("report", help="compute metrics from solution files")
    p.add_argument("solutions", nargs="+")
    _report_outputs(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("campaign", help="run strategies on scenarios in one process")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--strategies", default=",".join(STRATEGIES))
    p.add_argument("--seed", type=int, help="seed for random strategies (default scenario seed)")
    p.add_argument("--jobs", type=int, default=1)
    _limits(p)
    _report_outputs(p)
    p.set_defaults(func=cmd_campaign)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SetTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (Uncoverable, Infeasible, NoFeasiblePair) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ParseError, SchemaError, BundleBidError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
