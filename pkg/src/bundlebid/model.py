"""Core domain types: points, instances, bids, scenarios and their persistence.

Request sets are plain ``int`` bitmasks throughout the package (bit ``i`` set
means request ``i`` is a member).  Helpers here convert between masks and id
sequences.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    DemandExceedsCapacity,
    NonIntegerDemand,
    ParseError,
    SchemaError,
    TooManyRequests,
)

MAX_REQUESTS = 64
FOCAL_CARRIER = "c"
_INT32 = (-(2**31), 2**31 - 1)

RequestSet = int


def to_mask(ids: Iterable[int]) -> RequestSet:
    mask = 0
    for i in ids:
        if not 0 <= i < MAX_REQUESTS:
            raise ValueError(f"request id {i} outside 0..{MAX_REQUESTS - 1}")
        mask |= 1 << i
    return mask


def members(mask: RequestSet) -> list[int]:
    """Ascending request ids contained in ``mask``."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def set_size(mask: RequestSet) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Point:
    x: int
    y: int

    def __post_init__(self):
        for v in (self.x, self.y):
            if not isinstance(v, int) or isinstance(v, bool):
                raise TypeError(f"coordinates must be integers, got {v!r}")
            if not _INT32[0] <= v <= _INT32[1]:
                raise ValueError(f"coordinate {v} outside 32-bit range")


def distance(p: Point, q: Point) -> int:
    """Euclidean distance rounded to the nearest integer (half away from zero).

    Computed exactly: for an integer squared length ``s`` the rounded root is
    ``isqrt(s)`` plus one when ``s >= k*k + k + 1``.
    """
    s = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
    k = math.isqrt(s)
    return k + 1 if s >= k * k + k + 1 else k


@dataclass(frozen=True)
class Customer:
    id: int
    location: Point
    demand: int


@dataclass(frozen=True)
class Instance:
    """Focal carrier view of a tender: depot (= warehouse), customers, capacity.

    ``dist`` is indexed with 0 for the depot and ``i + 1`` for request ``i``.
    """

    depot: Point
    customers: tuple[Customer, ...]
    cap: int
    dist: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.customers)

    @property
    def demands(self) -> tuple[int, ...]:
        return tuple(c.demand for c in self.customers)

    @property
    def full_mask(self) -> RequestSet:
        return (1 << self.n) - 1

    def demand_of(self, mask: RequestSet) -> int:
        return sum(self.customers[i].demand for i in members(mask))

    def is_elementary(self, mask: RequestSet) -> bool:
        return mask != 0 and mask >> self.n == 0 and self.demand_of(mask) <= self.cap


def build_instance(depot: Point, customers: Sequence[tuple[Point, int]], cap: int) -> Instance:
    if not isinstance(cap, int) or cap <= 0:
        raise ValueError(f"capacity must be a positive integer, got {cap!r}")
    if len(customers) > MAX_REQUESTS:
        raise TooManyRequests(f"{len(customers)} customers exceed the limit of {MAX_REQUESTS}")
    custs = []
    for i, (loc, demand) in enumerate(customers):
        if not isinstance(demand, int) or demand < 1:
            raise ValueError(f"request {i}: demand must be a positive integer, got {demand!r}")
        if demand > cap:
            raise DemandExceedsCapacity(f"request {i}: demand {demand} exceeds capacity {cap}")
        custs.append(Customer(i, loc, demand))
    nodes = [depot] + [c.location for c in custs]
    dist = tuple(tuple(distance(p, q) for q in nodes) for p in nodes)
    return Instance(depot, tuple(custs), cap, dist)


@dataclass(frozen=True)
class Bid:
    carrier: str
    requests: RequestSet
    price: int

    def __post_init__(self):
        if self.price < 0:
            raise ValueError("bid price must be nonnegative")
        if self.requests and self.price == 0:
            raise ValueError("bid on a nonempty request set must have a positive price")

    @property
    def members(self) -> list[int]:
        return members(self.requests)

    @property
    def size(self) -> int:
        return set_size(self.requests)


@dataclass(frozen=True)
class Scenario:
    instance: Instance
    rival_bids: tuple[Bid, ...]
    seed: int


# -- CVRP text import -------------------------------------------------------

def _ints(line: str, lineno: int, expect: int, what: str) -> list[int]:
    tokens = line.split()
    if len(tokens) < expect:
        raise ParseError(f"expected {expect} values for {what}, found {len(tokens)}", lineno)
    out = []
    for tok in tokens[:expect]:
        try:
            out.append(int(tok))
        except ValueError:
            raise ParseError(f"malformed {what} token {tok!r}", lineno) from None
    return out


def import_cvrp(text: str, m: int | None = None) -> tuple[Point, list[tuple[Point, int]], int]:
    """Parse a Christofides/Eilon plain-format CVRP file.

    The header holds ``count cap max_route_time drop_time``, followed by the
    depot coordinates and one ``x y demand`` line per customer.  When ``m`` is
    given only the first ``m`` customers are kept.
    """
    lines = [(no, ln) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if len(lines) < 2:
        raise ParseError("file must contain a header and a depot line", len(lines) + 1)
    no, header = lines[0]
    tokens = header.split()
    if len(tokens) < 2:
        raise ParseError("header needs customer count and capacity", no)
    count, cap = _ints(header, no, 2, "header")
    if count < 0 or cap <= 0:
        raise ParseError("header values must be positive", no)
    no, depot_line = lines[1]
    dx, dy = _ints(depot_line, no, 2, "depot coordinate")
    body = lines[2:]
    if len(body) < count:
        raise ParseError(f"header announces {count} customers, file has {len(body)}",
                         body[-1][0] + 1 if body else no + 1)
    if m is None:
        m = count
    if m < 0 or m > count:
        raise ValueError(f"cannot keep {m} of {count} customers")
    customers = []
    for no, ln in body[:m]:
        tokens = ln.split()
        if len(tokens) < 3:
            raise ParseError(f"expected x y demand, found {len(tokens)} values", no)
        x, y = _ints(ln, no, 2, "customer coordinate")
        try:
            demand = int(tokens[2])
        except ValueError:
            raise NonIntegerDemand(f"demand {tokens[2]!r} is not an integer", no) from None
        customers.append((Point(x, y), demand))
    return Point(dx, dy), customers, cap


def format_cvrp(depot: Point, customers: Sequence[tuple[Point, int]], cap: int) -> str:
    lines = [f"{len(customers)} {cap} 999999 0", f"{depot.x} {depot.y}"]
    lines += [f"{p.x} {p.y} {d}" for p, d in customers]
    return "\n".join(lines) + "\n"


# -- Scenario persistence ---------------------------------------------------

def bid_to_json(bid: Bid) -> dict:
    return {"carrier": bid.carrier, "requests": members(bid.requests), "price": bid.price}


def _dump_rows(rows: list, indent: str) -> str:
    if not rows:
        return "[]"
    body = ",\n".join(indent + "  " + json.dumps(r, separators=(",", ":")) for r in rows)
    return "[\n" + body + "\n" + indent + "]"


def save_scenario(s: Scenario) -> bytes:
    inst = s.instance
    customers = [[c.location.x, c.location.y, c.demand] for c in inst.customers]
    rivals = [bid_to_json(b) for b in s.rival_bids]
    text = (
        "{\n"
        f'  "cap": {inst.cap},\n'
        f'  "depot": [{inst.depot.x},{inst.depot.y}],\n'
        f'  "customers": {_dump_rows(customers, "  ")},\n'
        f'  "seed": {s.seed},\n'
        f'  "rival_bids": {_dump_rows(rivals, "  ")}\n'
        "}\n"
    )
    return text.encode("utf-8")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}")
    return doc[key]


def parse_bid(entry, n: int, where: str) -> Bid:
    if not isinstance(entry, dict):
        raise SchemaError(f"{where}: bid must be an object")
    carrier = _require(entry, "carrier")
    requests = _require(entry, "requests")
    price = _require(entry, "price")
    if not isinstance(carrier, str):
        raise SchemaError(f"{where}: carrier must be a string")
    if not isinstance(requests, list) or not requests or not all(_is_int(r) for r in requests):
        raise SchemaError(f"{where}: requests must be a nonempty list of integers")
    if len(set(requests)) != len(requests) or not all(0 <= r < n for r in requests):
        raise SchemaError(f"{where}: request ids must be distinct and in 0..{n - 1}")
    if not _is_int(price) or price < 1:
        raise SchemaError(f"{where}: price must be a positive integer")
    return Bid(carrier, to_mask(requests), price)


def scenario_from_json(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    cap = _require(doc, "cap")
    depot = _require(doc, "depot")
    customers = _require(doc, "customers")
    seed = _require(doc, "seed")
    rivals = _require(doc, "rival_bids")
    if not _is_int(cap) or cap <= 0:
        raise SchemaError("cap must be a positive integer")
    if not (isinstance(depot, list) and len(depot) == 2 and all(_is_int(v) for v in depot)):
        raise SchemaError("depot must be [x, y] integers")
    if not _is_int(seed) or not 0 <= seed < 2**64:
        raise SchemaError("seed must be an unsigned 64-bit integer")
    if not isinstance(customers, list):
        raise SchemaError("customers must be a list")
    parsed = []
    for k, c in enumerate(customers):
        if not (isinstance(c, list) and len(c) == 3 and all(_is_int(v) for v in c)):
            raise SchemaError(f"customer {k} must be [x, y, demand] integers")
        parsed.append((Point(c[0], c[1]), c[2]))
    try:
        inst = build_instance(Point(*depot), parsed, cap)
    except (ValueError, DemandExceedsCapacity, TooManyRequests) as exc:
        raise SchemaError(str(exc)) from exc
    if not isinstance(rivals, list):
        raise SchemaError("rival_bids must be a list")
    bids = []
    for k, entry in enumerate(rivals):
        bid = parse_bid(entry, inst.n, f"rival bid {k}")
        if not inst.is_elementary(bid.requests):
            raise SchemaError(f"rival bid {k}: request set exceeds vehicle capacity")
        bids.append(bid)
    return Scenario(inst, tuple(bids), seed)


def load_scenario(data: bytes | str) -> Scenario:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return scenario_from_json(doc)
