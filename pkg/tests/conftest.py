import random

import pytest

from bundlebid.model import Point, build_instance


def random_instance(seed, n, cap=None, grid=100, max_demand=30, min_demand=1):
    rnd = random.Random(seed)
    customers = [(Point(rnd.randint(0, grid), rnd.randint(0, grid)), rnd.randint(min_demand, max_demand))
                 for _ in range(n)]
    if cap is None:
        cap = max([d for _, d in customers] + [1]) + rnd.randint(0, 2 * max_demand)
    depot = Point(rnd.randint(0, grid), rnd.randint(0, grid))
    return build_instance(depot, customers, cap)


@pytest.fixture
def make_instance():
    return random_instance


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
