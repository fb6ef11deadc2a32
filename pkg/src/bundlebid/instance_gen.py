"""Benchmark scenarios: a focal-carrier instance plus synthetic rival bids.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence`` with a
spawn key per rival bid, so bid ``k`` is the same no matter how many bids are
generated or in which order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import (
    Bid,
    Instance,
    Point,
    Scenario,
    build_instance,
    format_cvrp,
    import_cvrp,
)
from .tsp import PricingContext

# Spawn-key prefixes keep the streams of different consumers apart.
RIVAL_STREAM = 1
SYNTHETIC_STREAM = 3
DEFAULT_JITTER = (Fraction(7, 10), Fraction(13, 10))


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class GenConfig:
    m: int | None = None
    cap: int | None = None
    rival_bid_count: int = 1000
    price_jitter: tuple[Fraction, Fraction] = DEFAULT_JITTER
    seed: int = 0
    rival_carriers: int = 5

    def __post_init__(self):
        lo, hi = self.price_jitter
        if not 0 < lo <= hi:
            raise ValueError(f"price jitter interval {self.price_jitter} must be positive")
        if self.rival_bid_count < 0:
            raise ValueError("rival_bid_count must be nonnegative")
        if self.rival_carriers < 1:
            raise ValueError("need at least one rival carrier id")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class RivalDraw:
    """One rival bid with the random numbers that produced it.

    ``cap_factors`` lists every capacity factor drawn, including those of
    attempts discarded because their first request did not fit.
    """

    requests: int
    cap_factors: tuple[float, ...]
    jitter: float


def draw_rival(instance: Instance, cfg: GenConfig, k: int) -> RivalDraw:
    rng = stream(cfg.seed, RIVAL_STREAM, k)
    demands = instance.demands
    factors = []
    while True:
        u = rng.random()
        if u == 0.0:
            continue
        factors.append(u)
        reduced = instance.cap * u
        mask, load = 0, 0
        for r in rng.permutation(instance.n).tolist():
            if load + demands[r] > reduced:
                break
            mask |= 1 << r
            load += demands[r]
        if mask:
            break
    lo, hi = (float(v) for v in cfg.price_jitter)
    jitter = lo + (hi - lo) * rng.random()
    return RivalDraw(mask, tuple(factors), jitter)


def generate_rival_bids(instance: Instance, cfg: GenConfig,
                        pricing: PricingContext | None = None) -> list[Bid]:
    """Rival bids on randomly shrunk vehicles, priced by a jittered optimal tour."""
    if instance.n == 0:
        return []
    pricing = pricing or PricingContext(instance)
    bids = []
    for k in range(cfg.rival_bid_count):
        d = draw_rival(instance, cfg, k)
        price = max(1, round_half_away(pricing.price(d.requests) * d.jitter))
        bids.append(Bid(f"r{k % cfg.rival_carriers}", d.requests, price))
    return bids


@dataclass(frozen=True)
class SyntheticSource:
    """Parameters for a random CVRP-style source file in the classic layout."""

    customers: int = 50
    cap: int = 160
    seed: int = 0
    grid: int = 100
    demand: tuple[int, int] = field(default=(3, 41))

    def text(self) -> str:
        rng = stream(self.seed, SYNTHETIC_STREAM)
        lo, hi = self.demand
        depot = Point(self.grid // 2, self.grid // 2)
        xy = rng.integers(0, self.grid + 1, size=(self.customers, 2)).tolist()
        dem = rng.integers(lo, hi + 1, size=self.customers).tolist()
        return format_cvrp(depot, [(Point(x, y), d) for (x, y), d in zip(xy, dem)], self.cap)


def generate_scenario(source: str | SyntheticSource, cfg: GenConfig) -> Scenario:
    text = source.text() if isinstance(source, SyntheticSource) else source
    depot, customers, cap = import_cvrp(text, cfg.m)
    instance = build_instance(depot, customers, cfg.cap or cap)
    rivals = generate_rival_bids(instance, cfg)
    return Scenario(instance, tuple(rivals), cfg.seed)
