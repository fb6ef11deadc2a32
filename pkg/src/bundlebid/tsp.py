"""Exact bundle pricing by minimum-cost tours through the depot.

Ties between equally short tours are resolved by taking the lexicographically
smallest visiting order of request ids, so prices and tours are reproducible.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

from .errors import SetTooLarge
from .model import Instance, RequestSet, members

HELD_KARP_LIMIT = 18
BRUTE_LIMIT = 9
# Above this size the dynamic program runs vectorised over whole popcount layers.
_NUMPY_FROM = 9


@dataclass(frozen=True)
class TourResult:
    cost: int
    order: tuple[int, ...]


def tour_cost(instance: Instance, order) -> int:
    dist = instance.dist
    nodes = [0] + [i + 1 for i in order] + [0]
    return sum(dist[a][b] for a, b in zip(nodes, nodes[1:]))


def _local_matrix(instance: Instance, ids: list[int]):
    dist = instance.dist
    nodes = [i + 1 for i in ids]
    d = [[dist[a][b] for b in nodes] for a in nodes]
    d0 = [dist[0][a] for a in nodes]
    return d, d0


def _table_python(d, d0):
    # h[mask][j]: cheapest path that starts at j, visits every node in mask and
    # ends at the depot; mask never contains j.
    k = len(d0)
    size = 1 << k
    inf = float("inf")
    h = [None] * size
    h[0] = list(d0)
    for mask in range(1, size):
        inside = [l for l in range(k) if mask >> l & 1]
        row = [inf] * k
        for j in range(k):
            if mask >> j & 1:
                continue
            dj = d[j]
            best = inf
            for l in inside:
                c = dj[l] + h[mask ^ (1 << l)][l]
                if c < best:
                    best = c
            row[j] = best
        h[mask] = row
    return h


def _table_numpy(d, d0):
    k = len(d0)
    size = 1 << k
    D = np.asarray(d, dtype=np.int64)
    big = np.iinfo(np.int64).max // 4
    h = np.full((size, k), big, dtype=np.int64)
    h[0] = np.asarray(d0, dtype=np.int64)
    masks = np.arange(size, dtype=np.int64)
    popcount = np.zeros(size, dtype=np.int64)
    for l in range(k):
        popcount += (masks >> l) & 1
    for c in range(1, k):
        layer = masks[popcount == c]
        for l in range(k):
            sub = layer[(layer >> l) & 1 == 1]
            if sub.size == 0:
                continue
            prev = h[sub ^ (1 << l), l]
            cand = D[:, l][None, :] + prev[:, None]
            h[sub] = np.minimum(h[sub], cand)
    return h


def _solve(d, d0, use_numpy: bool) -> tuple[int, list[int]]:
    k = len(d0)
    h = _table_numpy(d, d0) if use_numpy else _table_python(d, d0)
    full = (1 << k) - 1
    best = min(d0[j] + int(h[full ^ (1 << j)][j]) for j in range(k))
    # Greedy walk picking the smallest local index that stays optimal yields
    # the lexicographically smallest optimal order.
    order = []
    remaining = full
    target = best
    prev = None
    while remaining:
        for j in range(k):
            if not remaining >> j & 1:
                continue
            step = d0[j] if prev is None else d[prev][j]
            rest = remaining ^ (1 << j)
            if step + int(h[rest][j]) == target:
                order.append(j)
                target -= step
                remaining = rest
                prev = j
                break
        else:  # pragma: no cover - table is consistent by construction
            raise AssertionError("tour reconstruction failed")
    return best, order


def tsp_exact(instance: Instance, s: RequestSet, limit: int = HELD_KARP_LIMIT,
              *, vectorized: bool | None = None) -> TourResult:
    """Held-Karp optimum tour from the depot through every request in ``s``."""
    ids = members(s)
    if not ids:
        raise ValueError("cannot price an empty request set")
    if len(ids) > limit:
        raise SetTooLarge(len(ids), limit)
    if len(ids) == 1:
        return TourResult(2 * instance.dist[0][ids[0] + 1], (ids[0],))
    d, d0 = _local_matrix(instance, ids)
    if vectorized is None:
        vectorized = len(ids) >= _NUMPY_FROM
    cost, order = _solve(d, d0, vectorized)
    return TourResult(cost, tuple(ids[j] for j in order))


def tsp_brute(instance: Instance, s: RequestSet) -> TourResult:
    """Exhaustive permutation search; only meant as a test oracle."""
    ids = members(s)
    if not ids:
        raise ValueError("cannot price an empty request set")
    if len(ids) > BRUTE_LIMIT:
        raise SetTooLarge(len(ids), BRUTE_LIMIT)
    best = None
    for perm in itertools.permutations(ids):
        c = tour_cost(instance, perm)
        if best is None or c < best[0]:
            best = (c, perm)
    return TourResult(best[0], tuple(best[1]))


class PricingContext:
    """Per-instance memo of bundle prices keyed by request bitmask.

    Cache inserts go through ``dict.setdefault`` so concurrent threads may
    share one context; a racing duplicate computation yields the same value.
    """

    def __init__(self, instance: Instance, limit: int = HELD_KARP_LIMIT):
        self.instance = instance
        self.limit = limit
        self._cache: dict[int, int] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def price(self, s: RequestSet) -> int:
        cached = self._cache.get(s)
        if cached is not None:
            with self._lock:
                self.hits += 1
            return cached
        cost = tsp_exact(self.instance, s, self.limit).cost
        with self._lock:
            self.misses += 1
        return self._cache.setdefault(s, cost)

    def __len__(self):
        return len(self._cache)


def price_bundle(pricing: PricingContext, s: RequestSet) -> int:
    return pricing.price(s)
