"""Promising request combinations for the heuristic bidding strategies.

* PSC: request pairs with the highest savings-times-idle-capacity synergy.
* CPMC: the clusters of a capacitated p-median solution.
* RAN / RANN: random capacity-bounded request sets, as bids or as roots.

Every strategy ends in :func:`heuristic_bids` (except RAN, which bids on its
draws directly), so the emitted bids are always a subset of the EBBS bids.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .enumeration import enumerate_supersets, price_sets
from .errors import CapacityViolated, Infeasible, NoFeasiblePair
from .instance_gen import stream
from .model import FOCAL_CARRIER, Bid, Instance, RequestSet, members
from .tsp import PricingContext

PMP_EXACT_LIMIT = 12
DEFAULT_ALPHA = Fraction(1, 10)
RANDOM_STREAM = 2
PMP_STREAM = 4


@dataclass(frozen=True)
class SynergyPair:
    i: int
    j: int
    sigma: int


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[RequestSet, ...]
    origin: str

    def to_json(self) -> dict:
        return {"origin": self.origin, "clusters": [members(c) for c in self.clusters]}


# -- PSC ----------------------------------------------------------------------

def pair_synergy(instance: Instance, i: int, j: int) -> int:
    """Savings of serving ``i`` and ``j`` in one tour times the idle capacity left."""
    if i == j:
        raise ValueError("synergy needs two distinct requests")
    di, dj = instance.customers[i].demand, instance.customers[j].demand
    if di + dj > instance.cap:
        raise CapacityViolated(f"requests {i} and {j} do not fit one vehicle")
    dist = instance.dist
    saving = dist[0][i + 1] + dist[0][j + 1] - dist[i + 1][j + 1]
    return saving * (instance.cap - di - dj)


def _fraction(alpha) -> Fraction:
    # str() keeps 0.1 as 1/10 instead of the binary float's expansion.
    return alpha if isinstance(alpha, Fraction) else Fraction(str(alpha))


def scored_pairs(instance: Instance) -> list[SynergyPair]:
    demands = instance.demands
    pairs = [
        SynergyPair(i, j, pair_synergy(instance, i, j))
        for i, j in itertools.combinations(range(instance.n), 2)
        if demands[i] + demands[j] <= instance.cap
    ]
    pairs.sort(key=lambda p: (-p.sigma, p.i, p.j))
    return pairs


def alpha_fractile(pairs: list[SynergyPair], alpha) -> list[SynergyPair]:
    """Pairs whose synergy ranks in the top ``ceil(alpha * len(pairs))``; ties at the cutoff kept."""
    alpha = _fraction(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not pairs:
        return []
    ranked = sorted(pairs, key=lambda p: (-p.sigma, p.i, p.j))
    cutoff = ranked[math.ceil(alpha * len(ranked)) - 1].sigma
    return [p for p in ranked if p.sigma >= cutoff]


def psc_clusters(instance: Instance, alpha=DEFAULT_ALPHA) -> ClusterSet:
    pairs = scored_pairs(instance)
    if not pairs:
        raise NoFeasiblePair("no two requests fit into one vehicle")
    chosen = alpha_fractile(pairs, alpha)
    return ClusterSet(tuple((1 << p.i) | (1 << p.j) for p in chosen), "PSC")


# -- CPMC ---------------------------------------------------------------------

@dataclass(frozen=True)
class PmpSolution:
    medians: tuple[int, ...]
    assignment: tuple[int, ...]
    objective: int
    exact: bool = True

    def clusters(self) -> list[RequestSet]:
        groups = {m: 0 for m in self.medians}
        for i, m in enumerate(self.assignment):
            groups[m] |= 1 << i
        return [groups[m] for m in self.medians]


def min_medians(instance: Instance) -> int:
    return -(-sum(instance.demands) // instance.cap)


def _cost(instance: Instance):
    d = instance.dist
    return [row[1:] for row in d[1:]]


def _assign_exact(cost, demands, cap, medians, bound):
    """Cheapest capacity-feasible assignment to fixed medians, if below ``bound``."""
    n = len(demands)
    residual = {m: cap - demands[m] for m in medians}
    if min(residual.values()) < 0:
        return None
    others = [i for i in range(n) if i not in residual]
    others.sort(key=lambda i: (-demands[i], i))
    options = [sorted(medians, key=lambda m: (cost[i][m], m)) for i in others]
    nearest = [cost[i][opts[0]] for i, opts in zip(others, options)]
    tail = [0] * (len(others) + 1)
    for k in range(len(others) - 1, -1, -1):
        tail[k] = tail[k + 1] + nearest[k]
    best = [bound, None]
    current = {}

    def place(k, total):
        if total + tail[k] >= best[0]:
            return
        if k == len(others):
            best[0], best[1] = total, dict(current)
            return
        i = others[k]
        for m in options[k]:
            if demands[i] <= residual[m]:
                residual[m] -= demands[i]
                current[i] = m
                place(k + 1, total + cost[i][m])
                residual[m] += demands[i]
                del current[i]

    place(0, 0)
    if best[1] is None:
        return None
    assignment = [0] * n
    for m in medians:
        assignment[m] = m
    for i, m in best[1].items():
        assignment[i] = m
    return best[0], assignment


def _solve_pmp_exact(instance: Instance, p: int) -> PmpSolution:
    cost = _cost(instance)
    demands = instance.demands
    n = instance.n
    best = None
    for medians in itertools.combinations(range(n), p):
        # Uncapacitated nearest-median distance bounds the capacitated optimum.
        relaxed = sum(min(cost[i][m] for m in medians) for i in range(n))
        bound = math.inf if best is None else best.objective
        if relaxed >= bound:
            continue
        found = _assign_exact(cost, demands, instance.cap, medians, bound)
        if found is not None:
            best = PmpSolution(medians, tuple(found[1]), found[0], True)
    if best is None:
        raise Infeasible(f"no assignment of {n} requests to {p} medians respects capacity {instance.cap}")
    return best


def _assign_greedy(cost, demands, cap, medians):
    """Regret-ordered assignment followed by single-point moves and swaps."""
    n = len(demands)
    residual = {m: cap - demands[m] for m in medians}
    assignment = list(range(n))
    others = [i for i in range(n) if i not in residual]

    def regret(i):
        ds = sorted(cost[i][m] for m in medians)
        return (ds[1] - ds[0] if len(ds) > 1 else 0, demands[i])

    for i in sorted(others, key=lambda i: (regret(i), -i), reverse=True):
        fits = [m for m in medians if residual[m] >= demands[i]]
        if not fits:
            return None
        m = min(fits, key=lambda m: (cost[i][m], m))
        assignment[i] = m
        residual[m] -= demands[i]

    improved = True
    while improved:
        improved = False
        for i in others:
            cur = assignment[i]
            for m in medians:
                if m != cur and residual[m] >= demands[i] and cost[i][m] < cost[i][cur]:
                    residual[cur] += demands[i]
                    residual[m] -= demands[i]
                    assignment[i], cur, improved = m, m, True
        for i, j in itertools.combinations(others, 2):
            a, b = assignment[i], assignment[j]
            if a == b:
                continue
            delta = cost[i][b] + cost[j][a] - cost[i][a] - cost[j][b]
            shift = demands[i] - demands[j]
            if delta < 0 and residual[b] >= shift and residual[a] >= -shift:
                residual[a] += shift
                residual[b] -= shift
                assignment[i], assignment[j] = b, a
                improved = True
    return sum(cost[i][assignment[i]] for i in range(n)), assignment


def _first_fit(demands, cap, medians):
    residual = {m: cap - demands[m] for m in medians}
    assignment = list(range(len(demands)))
    for i in sorted(range(len(demands)), key=lambda i: (-demands[i], i)):
        if i in residual:
            continue
        m = next((m for m in medians if residual[m] >= demands[i]), None)
        if m is None:
            return None
        residual[m] -= demands[i]
        assignment[i] = m
    return assignment


def _solve_pmp_heuristic(instance: Instance, p: int, seed: int, rounds: int) -> PmpSolution:
    cost = _cost(instance)
    demands = instance.demands
    n = instance.n
    rng = stream(seed, PMP_STREAM, n, p)

    # Seed with the demand-weighted 1-median, then repeatedly add the point with
    # the largest demand-weighted distance to its nearest chosen median.
    first = min(range(n), key=lambda j: (sum(demands[i] * cost[i][j] for i in range(n)), j))
    medians = [first]
    while len(medians) < p:
        spread = lambda j: demands[j] * min(cost[j][m] for m in medians)
        medians.append(max((j for j in range(n) if j not in medians), key=lambda j: (spread(j), -j)))

    def evaluate(ms):
        ms = tuple(sorted(ms))
        found = _assign_greedy(cost, demands, instance.cap, ms)
        if found is None:
            fallback = _first_fit(demands, instance.cap, ms)
            if fallback is None:
                return None
            found = (sum(cost[i][fallback[i]] for i in range(n)), fallback)
        return found[0], ms, found[1]

    current = evaluate(medians)
    attempts = 0
    while current is None and attempts < rounds:
        attempts += 1
        current = evaluate(rng.choice(n, size=p, replace=False).tolist())
    if current is None:
        raise Infeasible(f"heuristic found no capacity-feasible assignment to {p} medians")

    for _ in range(rounds):
        best = current
        for out in current[1]:
            for q in range(n):
                if q in current[1]:
                    continue
                cand = evaluate([m for m in current[1] if m != out] + [q])
                if cand is not None and (cand[0], cand[1]) < (best[0], best[1]):
                    best = cand
        if best is current:
            break
        current = best
    objective, ms, assignment = current
    return PmpSolution(ms, tuple(assignment), objective, False)


def solve_pmp(instance: Instance, p: int, exact_limit: int = PMP_EXACT_LIMIT,
              seed: int = 0, rounds: int = 50) -> PmpSolution:
    """Capacitated p-median over the customers, exact up to ``exact_limit`` points.

    Larger instances use median seeding plus best-improvement median swaps and
    the result carries ``exact=False``.
    """
    n = instance.n
    if not 1 <= p <= n:
        raise ValueError(f"p must lie in 1..{n}, got {p}")
    if p * instance.cap < sum(instance.demands):
        raise Infeasible(f"{p} medians of capacity {instance.cap} cannot hold demand {sum(instance.demands)}")
    if n <= exact_limit:
        return _solve_pmp_exact(instance, p)
    return _solve_pmp_heuristic(instance, p, seed, rounds)


def cpmc_clusters(instance: Instance, exact_limit: int = PMP_EXACT_LIMIT, seed: int = 0) -> ClusterSet:
    """Partition the requests by a capacitated p-median solution.

    ``p`` starts at the demand lower bound and grows while the demands cannot
    be packed into ``p`` vehicles.
    """
    p = min_medians(instance)
    while True:
        try:
            sol = solve_pmp(instance, p, exact_limit, seed)
            break
        except Infeasible:
            if p >= instance.n:
                raise
            p += 1
    return ClusterSet(tuple(sol.clusters()), "CPMC")


# -- RAN / RANN ---------------------------------------------------------------

def ran_draws(instance: Instance, seed: int) -> list[RequestSet]:
    """``|R|`` random request sets, each grown until the next draw overflows."""
    rng = stream(seed, RANDOM_STREAM)
    demands = instance.demands
    draws = []
    for _ in range(instance.n):
        pool = list(range(instance.n))
        mask, load = 0, 0
        while pool:
            r = pool.pop(int(rng.integers(len(pool))))
            if load + demands[r] > instance.cap:
                break
            mask |= 1 << r
            load += demands[r]
        draws.append(mask)
    return draws


def ran_bids(instance: Instance, pricing: PricingContext, seed: int,
             carrier: str = FOCAL_CARRIER) -> list[Bid]:
    """Priced RAN draws; repeated draws collapse to one bid."""
    return price_sets(ran_draws(instance, seed), pricing, carrier)


def rann_clusters(instance: Instance, seed: int) -> ClusterSet:
    unique = dict.fromkeys(ran_draws(instance, seed))
    return ClusterSet(tuple(unique), "RANN")


# -- superset expansion -------------------------------------------------------

def expand_clusters(instance: Instance, clusters: ClusterSet) -> set[RequestSet]:
    generated: set[RequestSet] = set()
    for root in clusters.clusters:
        generated.update(e.requests for e in enumerate_supersets(instance, root))
    return generated


def heuristic_bids(instance: Instance, clusters: ClusterSet, pricing: PricingContext,
                   carrier: str = FOCAL_CARRIER) -> list[Bid]:
    """Bids on every elementary superset of every promising cluster."""
    return price_sets(expand_clusters(instance, clusters), pricing, carrier)
