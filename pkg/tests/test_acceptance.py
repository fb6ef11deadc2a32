"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""
import os
import random
import time

import pytest

from bundlebid.cli import main as cli_main
from bundlebid.clustering import cpmc_clusters, min_medians, solve_pmp
from bundlebid.enumeration import ebbs_bids, infer_price
from bundlebid.errors import Infeasible
from bundlebid.evaluation import (
    STRATEGIES,
    StrategyConfig,
    mean_metric,
    run_auction,
    run_campaign,
    strategy_bids,
)
from bundlebid.instance_gen import GenConfig, SyntheticSource, draw_rival, generate_scenario
from bundlebid.model import FOCAL_CARRIER, Bid
from bundlebid.tsp import PricingContext, tsp_brute, tsp_exact
from bundlebid.wdp import solve_wdp, wdp_brute

from conftest import random_instance
from oracles import pmp_oracle

RESULTS = []
HEURISTICS = ("psc", "cpmc", "ran", "rann")


def report(number, name, ok, detail, elapsed=None, limit=None):
    timing = "" if elapsed is None else f" [{elapsed:.1f}s" + ("]" if limit is None else f" / limit {limit}s]")
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'} {name}: {detail}{timing}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def workers():
    return max(1, min(4, os.cpu_count() or 1))


# -- 1 ------------------------------------------------------------------------

def powerset_bids(inst, pricing):
    """A bid on every nonempty subset; non-elementary ones at the cheapest elementary partition."""
    elementary = ebbs_bids(inst, pricing)
    bids = []
    for mask in range(1, 1 << inst.n):
        if inst.is_elementary(mask):
            price = pricing.price(mask)
        else:
            price = infer_price(elementary, mask)
        bids.append(Bid(FOCAL_CARRIER, mask, price))
    return bids


def test_1_ebbs_equivalent_to_powerset_bidding():
    start = time.perf_counter()
    rnd = random.Random(101)
    mismatches, won = [], 0
    for k in range(20):
        n = rnd.randint(5, 10)
        cfg = GenConfig(m=n, cap=rnd.choice([45, 50, 60]), rival_bid_count=rnd.randint(50, 200), seed=k)
        scenario = generate_scenario(SyntheticSource(customers=20, seed=100 + k), cfg)
        pricing = PricingContext(scenario.instance)
        ebbs = run_auction(scenario, ebbs_bids(scenario.instance, pricing))
        full = run_auction(scenario, powerset_bids(scenario.instance, pricing))
        won += ebbs.f_b > 0
        if (ebbs.f_a, ebbs.f_b) != (full.f_a, full.f_b):
            mismatches.append((k, (ebbs.f_a, ebbs.f_b), (full.f_a, full.f_b)))
    elapsed = time.perf_counter() - start
    report(1, "EBBS equivalence", not mismatches and elapsed < 300,
           f"20 scenarios, {won} with focal revenue, mismatches={mismatches}", elapsed, 300)


# -- 2 ------------------------------------------------------------------------

def test_2_held_karp_equals_brute_force():
    start = time.perf_counter()
    rnd = random.Random(202)
    bad = 0
    for k in range(200):
        inst = random_instance(2000 + k, rnd.randint(1, 12), cap=10**6, grid=rnd.choice([20, 100, 1000]))
        size = rnd.randint(1, min(8, inst.n))
        s = sum(1 << i for i in rnd.sample(range(inst.n), size))
        bad += tsp_exact(inst, s) != tsp_brute(inst, s)
    elapsed = time.perf_counter() - start
    report(2, "TSP exactness", bad == 0 and elapsed < 60, f"200 sets, {bad} differences", elapsed, 60)


# -- 3 ------------------------------------------------------------------------

def test_3_wdp_equals_exhaustive_oracle():
    start = time.perf_counter()
    rnd = random.Random(303)
    bad, ties = 0, 0
    for _ in range(500):
        n = rnd.randint(1, 10)
        top = rnd.choice([3, 10, 50])
        bids = [Bid(f"r{rnd.randrange(3)}", rnd.randint(1, (1 << n) - 1), rnd.randint(1, top))
                for _ in range(rnd.randint(0, 18 - n))]
        bids += [Bid("c", 1 << i, rnd.randint(1, 2 * top)) for i in range(n)]
        rnd.shuffle(bids)
        expected = wdp_brute(n, bids)
        got = solve_wdp(n, bids)
        bad += got != expected
        ties += top == 3
    elapsed = time.perf_counter() - start
    report(3, "WDP exactness", bad == 0 and elapsed < 120,
           f"500 cases ({ties} tie-heavy), {bad} differences in cost or winning set", elapsed, 120)


# -- 4 ------------------------------------------------------------------------

def test_4_pmp_equals_exhaustive_oracle():
    start = time.perf_counter()
    rnd = random.Random(404)
    bad = 0
    for k in range(100):
        n = rnd.randint(2, 8)
        inst = random_instance(4000 + k, n, cap=rnd.randint(30, 80), max_demand=30)
        p = rnd.randint(min(min_medians(inst), n), n)
        expected = pmp_oracle(inst, p)
        try:
            got = solve_pmp(inst, p).objective
        except Infeasible:
            got = None
        bad += got != expected
    elapsed = time.perf_counter() - start
    report(4, "PMP exactness", bad == 0 and elapsed < 120, f"100 instances, {bad} differences", elapsed, 120)


# -- 5 and 7 share one campaign ----------------------------------------------

@pytest.fixture(scope="module")
def trend_campaign():
    scenarios = [
        generate_scenario(SyntheticSource(customers=50, seed=k),
                          GenConfig(m=15 + k % 11, cap=60, rival_bid_count=500, seed=k))
        for k in range(40)
    ]
    start = time.perf_counter()
    result = run_campaign(scenarios, STRATEGIES, StrategyConfig(), jobs=workers())
    return result, time.perf_counter() - start


def test_5_metric_identities(trend_campaign):
    result, _ = trend_campaign
    problems = []
    for r in result.by_strategy("ebbs"):
        m = r.metrics
        if m.kappa1 != 0 or m.kappa4 != 100 or m.kappa2 not in (100, None):
            problems.append((r.scenario, "ebbs", m))
    for name in HEURISTICS:
        for r in result.by_strategy(name):
            if r.metrics.kappa1 < 0:
                problems.append((r.scenario, name, r.metrics.kappa1))
    ok = not problems and not result.errors and len(result.by_strategy("ebbs")) == 40
    report(5, "metric identities", ok,
           f"{len(result.rows)} rows over 40 scenarios, violations={problems[:3]}, errors={result.errors}")


def test_7_directional_trends(trend_campaign):
    result, elapsed = trend_campaign
    defined = {r.scenario for r in result.by_strategy("ebbs") if r.metrics.kappa2 is not None}
    k2 = {s: mean_metric([r for r in result.by_strategy(s) if r.scenario in defined], "kappa2")
          for s in HEURISTICS}
    k4 = {s: mean_metric([r for r in result.by_strategy(s) if r.scenario in defined], "kappa4")
          for s in HEURISTICS}
    ok = (len(defined) >= 30 and k2["psc"] > k2["ran"] and k2["cpmc"] > k2["ran"]
          and k4["cpmc"] < k4["psc"] < 100)
    detail = (f"{len(defined)} kappa2-defined scenarios (15-25 requests, 500 rivals); "
              + ", ".join(f"{s}: k2={float(k2[s]):.1f} k4={float(k4[s]):.1f}" for s in HEURISTICS))
    report(7, "directional trends", ok, detail, elapsed, None)


# -- 6 ------------------------------------------------------------------------

def test_6_heuristic_bids_subset_of_ebbs():
    violations = []
    sizes = []
    for k in range(20):
        n = 8 + k % 8
        scenario = generate_scenario(SyntheticSource(customers=30, seed=600 + k),
                                     GenConfig(m=n, cap=60, rival_bid_count=10, seed=k))
        sizes.append(n)
        cfg = StrategyConfig()
        ebbs = {(b.requests, b.price) for b in strategy_bids("ebbs", scenario, cfg)}
        for name in HEURISTICS:
            produced = {(b.requests, b.price) for b in strategy_bids(name, scenario, cfg)}
            if not produced <= ebbs:
                violations.append((k, name, len(produced - ebbs)))
    report(6, "subset property", not violations,
           f"20 scenarios with n in {min(sizes)}..{max(sizes)}, violations={violations}")


# -- 8 ------------------------------------------------------------------------

def run_pipeline(directory):
    directory.mkdir()
    scenario = directory / "scenario.json"
    files = [scenario]
    assert cli_main(["gen", "--synthetic", "40", "--m", "12", "--cap", "60", "--rivals", "300",
                     "--seed", "8", "--out", str(scenario)]) == 0
    solutions = []
    for s in STRATEGIES:
        bids, sol = directory / f"{s}.bids.json", directory / f"{s}.solution.json"
        assert cli_main(["bid", str(scenario), "--strategy", s, "--out", str(bids)]) == 0
        assert cli_main(["clear", str(scenario), "--bids", str(bids), "--out", str(sol)]) == 0
        files += [bids, sol]
        solutions.append(str(sol))
    outputs = [directory / "report.csv", directory / "summary.json", directory / "kappa2.csv"]
    assert cli_main(["report", *solutions, "--csv", str(outputs[0]), "--summary", str(outputs[1]),
                     "--series", str(outputs[2])]) == 0
    return files + outputs


def test_8_pipeline_is_deterministic(tmp_path):
    first = run_pipeline(tmp_path / "run1")
    second = run_pipeline(tmp_path / "run2")
    differing = [a.name for a, b in zip(first, second) if a.read_bytes() != b.read_bytes()]
    report(8, "determinism", not differing,
           f"{len(first)} files compared byte for byte, differing={differing}")


# -- 9 ------------------------------------------------------------------------

def test_9_generator_statistics():
    inst = random_instance(9, 20, cap=60, max_demand=25)
    cfg = GenConfig(seed=909)
    jitters, factors = [], []
    for k in range(10_000):
        d = draw_rival(inst, cfg, k)
        jitters.append(d.jitter)
        factors.extend(d.cap_factors)
    jitter_mean = sum(jitters) / len(jitters)
    cap_mean = inst.cap * sum(factors) / len(factors)
    ok = abs(jitter_mean - 1) <= 0.01 and abs(cap_mean - inst.cap / 2) <= 0.02 * inst.cap / 2
    report(9, "generator statistics", ok,
           f"mean jitter {jitter_mean:.4f} over {len(jitters)} bids, "
           f"mean cap' {cap_mean:.3f} vs cap/2 = {inst.cap / 2} over {len(factors)} draws")
