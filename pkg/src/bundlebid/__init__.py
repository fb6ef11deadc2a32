"""Bundle bidding for a single carrier in combinatorial transport auctions.

The focal carrier prices every request subset it could serve with one vehicle
(elementary sets) at its optimal tour cost, or submits a heuristic subset of
them; an auctioneer clears all bids by exact minimum-cost set covering.
"""
from .clustering import (
    ClusterSet,
    PmpSolution,
    cpmc_clusters,
    heuristic_bids,
    min_medians,
    pair_synergy,
    psc_clusters,
    ran_bids,
    rann_clusters,
    solve_pmp,
)
from .enumeration import ebbs_bids, enumerate_elementary, enumerate_supersets, infer_price
from .errors import BundleBidError
from .evaluation import (
    STRATEGIES,
    AuctionOutcome,
    MetricsRecord,
    StrategyConfig,
    compute_metrics,
    run_auction,
    run_campaign,
    strategy_bids,
)
from .instance_gen import GenConfig, SyntheticSource, generate_rival_bids, generate_scenario
from .model import Bid, Instance, Point, Scenario, build_instance, distance, import_cvrp
from .tsp import PricingContext, tsp_exact
from .wdp import WdpSolution, solve_wdp

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
