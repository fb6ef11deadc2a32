"""Elementary request combinations and the exact bidding strategy (EBBS).

A request combination is elementary when its total demand fits into one
vehicle.  All of them are generated by a binary include/exclude tree whose
levels visit requests in non-ascending demand order; an include child that
overflows the capacity is cut together with its subtree.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NoPartitionExists, RootNotElementary, SchemaError
from .model import (
    FOCAL_CARRIER,
    Bid,
    Instance,
    RequestSet,
    bid_to_json,
    members,
    parse_bid,
    set_size,
)
from .tsp import PricingContext


@dataclass(frozen=True)
class ElementarySet:
    requests: RequestSet
    total_demand: int


def branching_order(instance: Instance) -> list[int]:
    """Request ids by non-ascending demand, ties broken by id."""
    return sorted(range(instance.n), key=lambda i: (-instance.customers[i].demand, i))


def _walk(instance: Instance, root: RequestSet, root_load: int) -> list[tuple[int, int]]:
    order = [i for i in branching_order(instance) if not root >> i & 1]
    demand = [instance.customers[i].demand for i in order]
    bits = [1 << i for i in order]
    cap = instance.cap
    depth = len(order)
    out: list[tuple[int, int]] = []

    limit = sys.getrecursionlimit()
    if depth + 50 > limit:  # pragma: no cover - n is capped at 64
        sys.setrecursionlimit(depth + 100)

    def visit(level, mask, load):
        if level == depth:
            out.append((mask, load))
            return
        nxt = load + demand[level]
        if nxt <= cap:
            visit(level + 1, mask | bits[level], nxt)
        visit(level + 1, mask, load)

    visit(0, root, root_load)
    return out


def enumerate_elementary(instance: Instance) -> list[ElementarySet]:
    """Every nonempty request set whose demand fits the vehicle, each once.

    Sets come out in depth-first, include-first order of the search tree.
    """
    return [ElementarySet(m, load) for m, load in _walk(instance, 0, 0) if m]


def enumerate_supersets(instance: Instance, root: RequestSet,
                        strict: bool = False) -> list[ElementarySet]:
    """Elementary sets containing ``root``; the root itself is included unless ``strict``."""
    if root == 0:
        return enumerate_elementary(instance)
    if not instance.is_elementary(root):
        raise RootNotElementary(f"root {members(root)} is not an elementary request set")
    found = _walk(instance, root, instance.demand_of(root))
    return [ElementarySet(m, load) for m, load in found if not (strict and m == root)]


def canonical_sort(bids: Iterable[Bid]) -> list[Bid]:
    return sorted(bids, key=lambda b: (set_size(b.requests), b.requests))


def price_sets(sets: Iterable[RequestSet], pricing: PricingContext,
               carrier: str = FOCAL_CARRIER) -> list[Bid]:
    unique = sorted(set(sets), key=lambda m: (set_size(m), m))
    return [Bid(carrier, m, pricing.price(m)) for m in unique]


def ebbs_bids(instance: Instance, pricing: PricingContext,
              carrier: str = FOCAL_CARRIER) -> list[Bid]:
    """One truthfully priced bid on every elementary request combination."""
    return price_sets((e.requests for e in enumerate_elementary(instance)), pricing, carrier)


def infer_price(bids: Sequence[Bid], target: RequestSet) -> int:
    """Cheapest exact partition of ``target`` into bid request sets."""
    if target == 0:
        return 0
    by_low: dict[int, list[tuple[int, int]]] = {}
    for b in bids:
        if b.requests and b.requests & ~target == 0:
            low = (b.requests & -b.requests).bit_length() - 1
            by_low.setdefault(low, []).append((b.requests, b.price))
    memo: dict[int, float] = {0: 0}
    inf = float("inf")

    def best(rest):
        if rest in memo:
            return memo[rest]
        low = (rest & -rest).bit_length() - 1
        value = inf
        # A set whose lowest member is below ``low`` would reuse a covered request.
        for mask, price in by_low.get(low, ()):
            if mask & ~rest == 0:
                value = min(value, price + best(rest ^ mask))
        memo[rest] = value
        return value

    value = best(target)
    if value == inf:
        raise NoPartitionExists(f"bids cannot partition {members(target)}")
    return int(value)


# -- bid file formats -------------------------------------------------------

def bids_to_csv(bids: Iterable[Bid]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["carrier", "mask", "size", "price"])
    for b in bids:
        w.writerow([b.carrier, b.requests, set_size(b.requests), b.price])
    return buf.getvalue()


def bids_from_csv(text: str, n: int) -> list[Bid]:
    rows = csv.DictReader(io.StringIO(text))
    if rows.fieldnames is None or not {"carrier", "mask", "price"} <= set(rows.fieldnames):
        raise SchemaError("bid CSV needs carrier, mask and price columns")
    out = []
    for k, row in enumerate(rows):
        try:
            mask, price = int(row["mask"]), int(row["price"])
        except ValueError as exc:
            raise SchemaError(f"bid row {k}: {exc}") from exc
        if mask <= 0 or mask >> n:
            raise SchemaError(f"bid row {k}: mask {mask} outside 1..2^{n}-1")
        if price < 1:
            raise SchemaError(f"bid row {k}: price must be positive")
        out.append(Bid(row["carrier"], mask, price))
    return out


def bids_document(bids: Iterable[Bid], meta: dict) -> bytes:
    rows = ",\n".join("  " + json.dumps(bid_to_json(b), separators=(",", ":")) for b in bids)
    head = json.dumps(meta, sort_keys=True, separators=(",", ":"))
    return ('{\n"meta": ' + head + ',\n"bids": [\n' + rows + "\n]\n}\n").encode("utf-8")


def read_bids_document(data: bytes | str, n: int) -> tuple[dict, list[Bid]]:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "bids" not in doc:
        raise SchemaError("bid document needs a 'bids' list")
    meta = doc.get("meta", {})
    bids = [parse_bid(e, n, f"bid {k}") for k, e in enumerate(doc["bids"])]
    return meta, bids
