import json
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundlebid.errors import (
    DemandExceedsCapacity,
    NonIntegerDemand,
    ParseError,
    SchemaError,
    TooManyRequests,
)
from bundlebid.model import (
    Bid,
    Point,
    Scenario,
    build_instance,
    distance,
    format_cvrp,
    import_cvrp,
    load_scenario,
    members,
    save_scenario,
    to_mask,
)

coord = st.integers(-(2**31), 2**31 - 1)
small = st.integers(-1000, 1000)


def test_distance_examples():
    assert distance(Point(0, 0), Point(3, 4)) == 5
    assert distance(Point(0, 0), Point(0, 0)) == 0
    assert distance(Point(0, 0), Point(1, 1)) == 1


def test_distance_half_rounds_away_from_zero():
    # sqrt(a) lands exactly on k + 1/2 only if a = k^2 + k + 1/4, impossible for integers,
    # so check the neighbourhood of the boundary instead.
    assert distance(Point(0, 0), Point(1, 2)) == 2   # 2.236
    assert distance(Point(0, 0), Point(2, 2)) == 3   # 2.828
    assert distance(Point(0, 0), Point(1, 3)) == 3   # 3.162


@settings(max_examples=300)
@given(coord, coord, coord, coord)
def test_distance_matches_high_precision_oracle(x1, y1, x2, y2):
    p, q = Point(x1, y1), Point(x2, y2)
    with mpmath.workdps(60):
        exact = mpmath.sqrt(mpmath.mpf(x1 - x2) ** 2 + mpmath.mpf(y1 - y2) ** 2)
        assert abs(distance(p, q) - exact) <= mpmath.mpf("0.5")
        assert distance(p, q) == int(mpmath.floor(exact + mpmath.mpf("0.5")))
    assert distance(p, q) == distance(q, p)


def test_point_rejects_out_of_range():
    with pytest.raises(ValueError):
        Point(2**31, 0)


def test_build_instance_examples():
    inst = build_instance(Point(0, 0), [(Point(3, 4), 2)], 10)
    assert inst.dist[0][1] == 5 and inst.n == 1
    assert build_instance(Point(0, 0), [(Point(1, 1), 10)], 10).demands == (10,)
    with pytest.raises(TooManyRequests):
        build_instance(Point(0, 0), [(Point(i, 0), 1) for i in range(65)], 10)
    with pytest.raises(DemandExceedsCapacity):
        build_instance(Point(0, 0), [(Point(1, 1), 11)], 10)


@settings(max_examples=50)
@given(st.lists(st.tuples(small, small, st.integers(1, 9)), min_size=1, max_size=12), small, small)
def test_matrix_equals_recomputation(custs, dx, dy):
    inst = build_instance(Point(dx, dy), [(Point(x, y), d) for x, y, d in custs], 10)
    nodes = [inst.depot] + [c.location for c in inst.customers]
    for i, p in enumerate(nodes):
        for j, q in enumerate(nodes):
            assert inst.dist[i][j] == distance(p, q) == inst.dist[j][i]


def test_mask_helpers():
    assert to_mask([0, 3]) == 0b1001
    assert members(0b1001) == [0, 3]
    with pytest.raises(ValueError):
        to_mask([64])


CVRP5 = """5 100 0 0
0 0
1 2 10
3 4 20
5 6 30
7 8 40
9 10 50
"""


def test_import_cvrp():
    depot, customers, cap = import_cvrp(CVRP5)
    assert depot == Point(0, 0) and cap == 100 and len(customers) == 5
    assert customers[1] == (Point(3, 4), 20)
    _, first3, _ = import_cvrp(CVRP5, m=3)
    assert first3 == customers[:3]


def test_import_cvrp_errors():
    bad = CVRP5.replace("5 6 30", "5 x 30")
    with pytest.raises(ParseError, match="line 5"):
        import_cvrp(bad)
    with pytest.raises(NonIntegerDemand):
        import_cvrp(CVRP5.replace("5 6 30", "5 6 30.5"))
    with pytest.raises(ValueError):
        import_cvrp(CVRP5, m=6)
    with pytest.raises(ParseError):
        import_cvrp("5 100 0 0\n0 0\n1 2 3\n")


def test_format_cvrp_round_trip():
    depot, customers, cap = import_cvrp(CVRP5)
    assert import_cvrp(format_cvrp(depot, customers, cap)) == (depot, customers, cap)


def _scenario():
    inst = build_instance(Point(5, 5), [(Point(0, 0), 3), (Point(10, 0), 4), (Point(0, 10), 5)], 9)
    bids = (Bid("r0", 0b011, 30), Bid("r1", 0b100, 12))
    return Scenario(inst, bids, 2**64 - 1)


def test_scenario_round_trip_bit_identical():
    s = _scenario()
    data = save_scenario(s)
    back = load_scenario(data)
    assert back == s
    assert save_scenario(back) == data


def test_load_rejects_bad_documents():
    doc = json.loads(save_scenario(_scenario()))
    missing = dict(doc)
    del missing["cap"]
    with pytest.raises(SchemaError):
        load_scenario(json.dumps(missing))
    heavy = dict(doc, rival_bids=[{"carrier": "r0", "requests": [0, 1, 2], "price": 5}])
    with pytest.raises(SchemaError):
        load_scenario(json.dumps(heavy))
    with pytest.raises(SchemaError):
        load_scenario(b"{not json")
    with pytest.raises(SchemaError):
        load_scenario(json.dumps(dict(doc, seed=-1)))


def test_bid_price_rules():
    with pytest.raises(ValueError):
        Bid("c", 1, 0)
    assert Bid("c", 0, 0).size == 0
    assert Bid("c", 0b101, 3).members == [0, 2]
