"""Winner determination as minimum-cost set covering over OR-bids.

Among equally cheap covers the solver returns the one whose ascending list of
winning bid positions is lexicographically smallest, so the clearing is fully
determined by the order of the input bids.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import TooManyBids, Uncoverable
from .model import Bid, members

BRUTE_LIMIT = 20
_EPS = 1e-6


@dataclass(frozen=True)
class WdpSolution:
    winning: tuple[int, ...]
    total_cost: int
    per_carrier_revenue: dict = field(default_factory=dict)
    nodes: int = field(default=0, compare=False)

    def to_json(self, **extra) -> dict:
        doc = {
            "winning": list(self.winning),
            "f_a": self.total_cost,
            "per_carrier": dict(sorted(self.per_carrier_revenue.items())),
        }
        doc.update(extra)
        return doc


def solution_document(sol: WdpSolution, **extra) -> bytes:
    return (json.dumps(sol.to_json(**extra), sort_keys=True, indent=1) + "\n").encode("utf-8")


def _finish(bids: Sequence[Bid], winning, nodes=0) -> WdpSolution:
    winning = tuple(sorted(winning))
    revenue: dict[str, int] = {}
    for i in winning:
        revenue[bids[i].carrier] = revenue.get(bids[i].carrier, 0) + bids[i].price
    return WdpSolution(winning, sum(bids[i].price for i in winning), revenue, nodes)


def _check_cover(n_requests: int, bids: Sequence[Bid]) -> None:
    full = (1 << n_requests) - 1
    union = 0
    for b in bids:
        if b.requests >> n_requests:
            raise ValueError(f"bid on {b.members} references requests beyond {n_requests}")
        union |= b.requests
    if union != full:
        raise Uncoverable(members(full & ~union))


def remove_dominated(bids: Sequence[Bid]) -> list[int]:
    """Positions of bids not dominated by another bid.

    Bid ``j`` is dominated by ``k`` when ``k`` covers a superset of ``j`` and is
    cheaper, or equally cheap and earlier in the input.  Such a ``j`` never
    appears in the tie-broken optimum, so dropping it is exact.
    """
    idx = [i for i, b in enumerate(bids) if b.requests]
    if not idx:
        return []
    masks = np.array([bids[i].requests for i in idx], dtype=np.uint64)
    prices = np.array([bids[i].price for i in idx], dtype=np.int64)
    pos = np.arange(len(idx))
    keep = []
    for j in range(len(idx)):
        m = masks[j]
        covers = (masks & m) == m
        better = (prices < prices[j]) | ((prices == prices[j]) & (pos < j))
        if not np.any(covers & better):
            keep.append(idx[j])
    return keep


class _Search:
    def __init__(self, n, bids: Sequence[Bid], candidates: list[int]):
        self.n = n
        self.index = np.array(candidates, dtype=np.int64)
        self.masks = np.array([bids[i].requests for i in candidates], dtype=np.uint64)
        self.mask_list = [bids[i].requests for i in candidates]
        self.prices = np.array([bids[i].price for i in candidates], dtype=np.float64)
        self.price_list = [bids[i].price for i in candidates]
        self.active = np.ones(len(candidates), dtype=bool)
        # Incidence lists laid out for a single minimum.reduceat per node.
        inc = [[] for _ in range(n)]
        for k, m in enumerate(self.mask_list):
            for r in members(m):
                inc[r].append(k)
        self.inc = [np.array(v, dtype=np.int64) for v in inc]
        self.flat = np.concatenate(self.inc)
        self.offsets = np.cumsum([0] + [len(v) for v in inc[:-1]])
        self.nodes = 0

    def amortized(self, uncovered: int):
        cnt = np.bitwise_count(self.masks & np.uint64(uncovered)).astype(np.float64)
        with np.errstate(divide="ignore"):
            ratio = np.where(self.active & (cnt > 0), self.prices / cnt, np.inf)
        per_request = np.minimum.reduceat(ratio[self.flat], self.offsets)
        return ratio, per_request

    def lower_bound(self, uncovered: int) -> float:
        if not uncovered:
            return 0.0
        _, per_request = self.amortized(uncovered)
        return float(per_request[members(uncovered)].sum())

    def greedy(self, full: int):
        uncovered, chosen, cost = full, [], 0
        while uncovered:
            ratio, _ = self.amortized(uncovered)
            k = int(np.argmin(ratio))
            if not np.isfinite(ratio[k]):
                return None
            chosen.append(k)
            cost += self.price_list[k]
            uncovered &= ~self.mask_list[k]
        return cost, chosen

    def lp_bound(self, uncovered: int):
        """Dual bound of the covering LP restricted to the active bids.

        The LP duals are rescaled until every active bid's constraint holds, so
        the bound is valid whatever the solver tolerance.  Returns the bound,
        the integral primal solution if there is one, and the reduced cost of
        every active column (any cover using column ``k`` costs at least
        ``bound + reduced[k]``).
        """
        rows = members(uncovered)
        cnt = np.bitwise_count(self.masks & np.uint64(uncovered))
        cols = np.flatnonzero(self.active & (cnt > 0))
        sub = self.masks[cols]
        A = np.array([(sub >> np.uint64(r)) & np.uint64(1) for r in rows], dtype=np.float64)
        if np.any(A.sum(axis=1) == 0):
            return math.inf, None, cols, None
        prices = self.prices[cols]
        res = linprog(prices, A_ub=-A, b_ub=-np.ones(len(rows)), bounds=(0, None), method="highs")
        if res.status != 0:  # pragma: no cover - covering LP with a cover is feasible
            return 0.0, None, cols, None
        y = np.maximum(-res.ineqlin.marginals, 0.0)
        y /= max(1.0, float(((y @ A) / prices).max()))
        reduced = prices - y @ A
        integral = None
        if np.all(np.minimum(res.x, np.abs(1 - res.x)) < 1e-9):
            integral = cols[res.x > 0.5]
        return float(y.sum()), integral, cols, reduced

    def run(self, full: int, best_cost: int, enumerate_ties: bool):
        """Depth-first branch and bound.

        First pass (``enumerate_ties`` false) tightens ``best_cost``; the second
        pass visits every cover at exactly ``best_cost`` and keeps the
        lexicographically smallest one.
        """
        self.best_cost = best_cost
        self.best_set = None
        self.ties = enumerate_ties
        chosen: list[int] = []
        self._dfs(full, 0, chosen)
        return self.best_cost, self.best_set

    def _pruned(self, cost: int, bound: float) -> bool:
        if bound == math.inf:
            return True
        total = cost + math.ceil(bound - _EPS)
        return total > self.best_cost if self.ties else total >= self.best_cost

    def _leaf(self, cost: int, chosen) -> None:
        if self.ties:
            key = sorted(int(self.index[k]) for k in chosen)
            if cost == self.best_cost and (self.best_set is None or key < self.best_set):
                self.best_set = key
        elif cost < self.best_cost:
            self.best_cost = cost
            self.best_set = list(chosen)

    def _dfs(self, uncovered: int, cost: int, chosen: list[int]) -> None:
        self.nodes += 1
        if not uncovered:
            self._leaf(cost, chosen)
            return
        if self._pruned(cost, self.lower_bound(uncovered)):
            return
        bound, integral, cols, reduced = self.lp_bound(uncovered)
        if self._pruned(cost, bound):
            return
        if integral is not None and not self.ties:
            # An integral LP optimum is the best completion of this node.
            self._leaf(cost + sum(self.price_list[k] for k in integral.tolist()),
                       chosen + integral.tolist())
            return
        # Reduced-cost fixing: drop columns that cannot reach the target cost.
        fixed = cols[[self._pruned(cost, bound + rc) for rc in reduced.tolist()]]
        self.active[fixed] = False
        cand = None
        for r in members(uncovered):
            c = self.inc[r]
            c = c[self.active[c]]
            if cand is None or c.size < cand.size:
                cand = c
                if c.size <= 1:
                    break
        excluded = []
        if cand.size:
            cnt = np.bitwise_count(self.masks[cand] & np.uint64(uncovered))
            order = cand[np.lexsort((cand, self.prices[cand] / cnt))]
            for k in order.tolist():
                chosen.append(k)
                self._dfs(uncovered & ~self.mask_list[k], cost + self.price_list[k], chosen)
                chosen.pop()
                # Later siblings must not reuse this bid: each cover is visited once.
                self.active[k] = False
                excluded.append(k)
        self.active[excluded] = True
        self.active[fixed] = True


def solve_wdp(n_requests: int, bids: Sequence[Bid], dominance: bool = True) -> WdpSolution:
    """Exact minimum-cost cover of requests ``0..n_requests-1``."""
    _check_cover(n_requests, bids)
    if n_requests == 0:
        return _finish(bids, ())
    candidates = remove_dominated(bids) if dominance else [i for i, b in enumerate(bids) if b.requests]
    full = (1 << n_requests) - 1
    search = _Search(n_requests, bids, candidates)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n_requests + 200))
    cost, chosen = search.greedy(full)
    upper = cost + 1
    cost, _ = search.run(full, upper, enumerate_ties=False)
    if cost == upper:  # pragma: no cover - greedy cover is feasible
        raise AssertionError("search lost the greedy incumbent")
    _, best = search.run(full, cost, enumerate_ties=True)
    return _finish(bids, best, search.nodes)


def wdp_brute(n_requests: int, bids: Sequence[Bid]) -> WdpSolution:
    """Exhaustive search over all bid subsets (test oracle)."""
    if len(bids) > BRUTE_LIMIT:
        raise TooManyBids(f"{len(bids)} bids exceed the brute-force limit of {BRUTE_LIMIT}")
    _check_cover(n_requests, bids)
    if n_requests == 0:
        return _finish(bids, ())
    full = (1 << n_requests) - 1
    cover = np.zeros(1, dtype=np.int64)
    cost = np.zeros(1, dtype=np.int64)
    valid = np.ones(1, dtype=bool)
    # Subset s of bids maps to bit pattern s; bids with empty request sets are
    # never taken so winning sets stay minimal and comparable.
    for b in bids:
        cover = np.concatenate([cover, cover | b.requests])
        cost = np.concatenate([cost, cost + b.price])
        valid = np.concatenate([valid, valid & bool(b.requests)])
    feasible = (cover == full) & valid
    best = cost[feasible].min()
    winners = np.flatnonzero(feasible & (cost == best))
    sets = [[i for i in range(len(bids)) if s >> i & 1] for s in winners.tolist()]
    return _finish(bids, min(sets))
