"""Auction simulation and the four strategy performance measures.

For a scenario the focal carrier's bids are appended after the rival bids and
the combined list is cleared by :func:`bundlebid.wdp.solve_wdp`.  Putting the
rivals first means the tie-broken optimum picks the same rival bids whenever
two focal bid sets admit the same optimal clearings, which keeps ``f_b``
comparable across strategies.

Metric arithmetic uses :class:`fractions.Fraction`; rounding happens only when
rows are written out.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .clustering import (
    DEFAULT_ALPHA,
    PMP_EXACT_LIMIT,
    cpmc_clusters,
    heuristic_bids,
    psc_clusters,
    ran_bids,
    rann_clusters,
)
from .enumeration import ebbs_bids
from .errors import BundleBidError
from .model import Bid, Scenario
from .tsp import HELD_KARP_LIMIT, PricingContext
from .wdp import WdpSolution, solve_wdp

log = logging.getLogger(__name__)

STRATEGIES = ("ebbs", "psc", "cpmc", "ran", "rann")
CSV_COLUMNS = ["seed", "n", "cap", "strategy", "alpha", "bids", "won",
               "f_a", "f_b", "k1", "k2", "k3", "k4", "ms"]


@dataclass(frozen=True)
class StrategyConfig:
    alpha: Fraction = DEFAULT_ALPHA
    seed: int | None = None
    held_karp_limit: int = HELD_KARP_LIMIT
    pmp_exact_limit: int = PMP_EXACT_LIMIT


def _random_seed(scenario: Scenario, cfg: StrategyConfig) -> int:
    return scenario.seed if cfg.seed is None else cfg.seed


def strategy_bids(name: str, scenario: Scenario, cfg: StrategyConfig,
                  pricing: PricingContext | None = None) -> list[Bid]:
    """Bids of the focal carrier under strategy ``name``."""
    inst = scenario.instance
    pricing = pricing or PricingContext(inst, cfg.held_karp_limit)
    seed = _random_seed(scenario, cfg)
    if name == "ebbs":
        return ebbs_bids(inst, pricing)
    if name == "psc":
        return heuristic_bids(inst, psc_clusters(inst, cfg.alpha), pricing)
    if name == "cpmc":
        return heuristic_bids(inst, cpmc_clusters(inst, cfg.pmp_exact_limit, seed), pricing)
    if name == "ran":
        return ran_bids(inst, pricing, seed)
    if name == "rann":
        return heuristic_bids(inst, rann_clusters(inst, seed), pricing)
    raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")


@dataclass(frozen=True)
class AuctionOutcome:
    strategy: str
    bids_submitted: int
    bids_won: int
    f_a: int
    f_b: int
    runtime_ms: int | None = None
    solution: WdpSolution | None = field(default=None, compare=False, repr=False)


def run_auction(scenario: Scenario, bids: Sequence[Bid], strategy: str = "?",
                runtime_ms: int | None = None) -> AuctionOutcome:
    rivals = list(scenario.rival_bids)
    combined = rivals + list(bids)
    sol = solve_wdp(scenario.instance.n, combined)
    focal = [i for i in sol.winning if i >= len(rivals)]
    f_b = sum(combined[i].price for i in focal)
    return AuctionOutcome(strategy, len(bids), len(focal), sol.total_cost, f_b, runtime_ms, sol)


@dataclass(frozen=True)
class MetricsRecord:
    kappa1: Fraction | None
    kappa2: Fraction | None
    kappa3: Fraction | None
    kappa4: Fraction | None


def compute_metrics(phi: AuctionOutcome, ebbs: AuctionOutcome) -> MetricsRecord:
    k1 = Fraction(phi.f_a - ebbs.f_a, ebbs.f_a) if ebbs.f_a else None
    k2 = (1 + Fraction(phi.f_b - ebbs.f_b, ebbs.f_b)) * 100 if ebbs.f_b else None
    k3 = Fraction(100 * phi.bids_won, phi.bids_submitted) if phi.bids_submitted else None
    k4 = Fraction(100 * phi.bids_submitted, ebbs.bids_submitted) if ebbs.bids_submitted else None
    return MetricsRecord(k1, k2, k3, k4)


@dataclass(frozen=True)
class CampaignRow:
    scenario: int
    seed: int
    n: int
    cap: int
    outcome: AuctionOutcome
    metrics: MetricsRecord
    alpha: Fraction | None = None

    @property
    def strategy(self) -> str:
        return self.outcome.strategy


@dataclass
class CampaignResult:
    rows: list[CampaignRow] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)

    def by_strategy(self, name: str) -> list[CampaignRow]:
        return [r for r in self.rows if r.strategy == name]


def timed_outcome(name: str, scenario: Scenario, cfg: StrategyConfig) -> AuctionOutcome:
    start = time.perf_counter()
    bids = strategy_bids(name, scenario, cfg)
    ms = int(round((time.perf_counter() - start) * 1000))
    return run_auction(scenario, bids, name, ms)


def evaluate_scenario(index: int, scenario: Scenario, strategies: Sequence[str],
                      cfg: StrategyConfig) -> list[CampaignRow]:
    inst = scenario.instance
    ebbs = timed_outcome("ebbs", scenario, cfg)
    rows = []
    for name in ["ebbs"] + [s for s in strategies if s != "ebbs"]:
        out = ebbs if name == "ebbs" else timed_outcome(name, scenario, cfg)
        alpha = cfg.alpha if name == "psc" else None
        rows.append(CampaignRow(index, scenario.seed, inst.n, inst.cap, out,
                                compute_metrics(out, ebbs), alpha))
    return rows


def _evaluate_safe(args):
    index, scenario, strategies, cfg = args
    try:
        return evaluate_scenario(index, scenario, strategies, cfg), None
    except BundleBidError as exc:
        return [], (index, f"{type(exc).__name__}: {exc}")


def run_campaign(scenarios: Iterable[Scenario], strategies: Sequence[str] = STRATEGIES,
                 cfg: StrategyConfig = StrategyConfig(), jobs: int = 1) -> CampaignResult:
    """Evaluate every strategy on every scenario against the EBBS reference.

    Failing scenarios are logged and recorded in ``errors``; the rest proceed.
    """
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    tasks = [(k, s, tuple(strategies), cfg) for k, s in enumerate(scenarios)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_safe, tasks))
    else:
        results = [_evaluate_safe(t) for t in tasks]
    out = CampaignResult()
    for rows, err in results:
        out.rows.extend(rows)
        if err:
            log.warning("scenario %d failed: %s", *err)
            out.errors.append(err)
    return out


# -- output -------------------------------------------------------------------

def fmt(x: Fraction | None, digits: int = 6) -> str:
    return "NA" if x is None else f"{float(x):.{digits}f}"


def rows_to_csv(rows: Iterable[CampaignRow], include_runtime: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        o, m = r.outcome, r.metrics
        ms = "" if not include_runtime or o.runtime_ms is None else o.runtime_ms
        w.writerow([r.seed, r.n, r.cap, o.strategy, fmt(r.alpha, 4) if r.alpha is not None else "",
                    o.bids_submitted, o.bids_won, o.f_a, o.f_b,
                    fmt(m.kappa1), fmt(m.kappa2), fmt(m.kappa3), fmt(m.kappa4), ms])
    return buf.getvalue()


def describe(values: Sequence[Fraction]) -> dict:
    if not values:
        return {"count": 0}
    vals = sorted(values)
    if len(vals) > 1:
        q25, median, q75 = statistics.quantiles(vals, n=4, method="inclusive")
    else:
        q25 = median = q75 = vals[0]
    stats = {"min": vals[0], "q25": q25, "median": median, "q75": q75,
             "max": vals[-1], "mean": sum(vals, Fraction(0)) / len(vals)}
    return {"count": len(vals), **{k: round(float(v), 6) for k, v in stats.items()}}


def summarize(result: CampaignResult) -> dict:
    names = list(dict.fromkeys(r.strategy for r in result.rows))
    summary = {}
    for name in names:
        rows = result.by_strategy(name)
        summary[name] = {
            key: describe([getattr(r.metrics, attr) for r in rows
                           if getattr(r.metrics, attr) is not None])
            for key, attr in (("k1", "kappa1"), ("k2", "kappa2"), ("k3", "kappa3"), ("k4", "kappa4"))
        }
    ebbs_rows = result.by_strategy("ebbs")
    return {
        "scenarios": len(ebbs_rows),
        "kappa2_excluded": sum(1 for r in ebbs_rows if r.metrics.kappa2 is None),
        "errors": [{"scenario": k, "message": msg} for k, msg in result.errors],
        "strategies": summary,
    }


def summary_json(result: CampaignResult) -> str:
    return json.dumps(summarize(result), indent=1, sort_keys=True) + "\n"


def kappa2_series(rows: Iterable[CampaignRow]) -> str:
    """Per-strategy kappa2 values in descending order, one CSV line per point."""
    rows = list(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "rank", "k2"])
    for name in dict.fromkeys(r.strategy for r in rows):
        vals = sorted((r.metrics.kappa2 for r in rows
                       if r.strategy == name and r.metrics.kappa2 is not None), reverse=True)
        for rank, v in enumerate(vals, start=1):
            w.writerow([name, rank, fmt(v)])
    return buf.getvalue()


def mean_metric(rows: Iterable[CampaignRow], attr: str) -> Fraction | None:
    vals = [getattr(r.metrics, attr) for r in rows if getattr(r.metrics, attr) is not None]
    return sum(vals, Fraction(0)) / len(vals) if vals else None
