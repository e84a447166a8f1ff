import pytest

from antnet.roadmap import City, Roadmap


def make_map(points, edges):
    return Roadmap(tuple(City(i, float(x), float(y)) for i, (x, y) in enumerate(points)),
                   tuple(edges))


@pytest.fixture
def two_node():
    return make_map([(0, 0), (3, 4)], [(0, 1)])


@pytest.fixture
def triangle():
    # 0-1 direct is 5; 0-2-1 detour is 3 + 4
    return make_map([(0, 0), (5, 0), (1.8, 2.4)], [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def line3():
    return make_map([(0, 0), (1, 0.5), (2, 0)], [(0, 1), (1, 2)])


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str):
        request.config.stash.setdefault(ACCEPTANCE, {})[criterion] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    rows = config.stash.get(ACCEPTANCE, {})
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(rows):
        ok, detail = rows[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
