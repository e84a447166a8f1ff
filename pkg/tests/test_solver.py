import json
import statistics
from concurrent.futures import ThreadPoolExecutor

import pytest

from antnet.colony import SolverParams
from antnet.roadmap import corner_endpoints, dijkstra, generate_roadmap
from antnet.solver import NOT_FOUND, convergence_time, run, sign_test
from antnet.trail import DepositionRule
from conftest import make_map

EXP = SolverParams(alpha=1.5, beta=4.0, rule=DepositionRule.exponential(10.0), seed=3)


class TestConvergenceTime:
    @pytest.mark.parametrize("series, expected", [
        ([4.0, 4.0, 4.0], 1),
        ([10, 8, 8, 7, 7, 7], 4),
        ([5, 4, 3, 2, 1], 5),
    ])
    def test_examples(self, series, expected):
        assert convergence_time(series) == expected

    def test_leading_none(self):
        assert convergence_time([None, None, 9.0, 9.0]) == 3

    def test_empty(self):
        with pytest.raises(ValueError):
            convergence_time([])


class TestSignTest:
    def test_all_wins(self):
        # 10 wins of 10: p = 2^-10
        assert sign_test([(1, 2)] * 10) == (10, 0, 1 / 1024)

    def test_ties_dropped(self):
        assert sign_test([(1, 1), (1, 2), (3, 2)]) == (1, 1, 0.75)

    def test_no_information(self):
        assert sign_test([(1, 1)]) == (0, 0, 1.0)


class TestRun:
    def test_two_node(self, two_node):
        rep = run(two_node, 0, 1, SolverParams(n_iterations=5))
        assert rep.best_path.nodes == (0, 1)
        assert rep.convergence_iteration == 1
        assert rep.best_length_series == [5.0] * 5
        assert rep.optimal_gap == 0.0 and rep.optimal_found

    def test_triangle_finds_direct_edge(self, triangle):
        rep = run(triangle, 0, 1, SolverParams(alpha=1, beta=2, n_ants=20, n_iterations=100))
        assert rep.best_length == pytest.approx(dijkstra(triangle, 0, 1)[1])
        assert rep.best_path.nodes == (0, 1)

    def test_deterministic(self):
        m = generate_roadmap(40, (200, 200), 3, seed=2)
        s, d = corner_endpoints(m)
        a = run(m, s, d, EXP).to_json()
        assert a == run(m, s, d, EXP).to_json()
        assert a != run(m, s, d, SolverParams(**{**EXP.__dict__, "seed": 4})).to_json()

    def test_schedule_independent(self):
        m = generate_roadmap(40, (200, 200), 3, seed=2)
        s, d = corner_endpoints(m)
        serial = run(m, s, d, EXP).to_json()
        with ThreadPoolExecutor(4) as pool:
            assert run(m, s, d, EXP, executor=pool).to_json() == serial

    @pytest.mark.parametrize("seed", range(8))
    def test_report_invariants(self, seed):
        m = generate_roadmap(50, (200, 200), 3, seed=seed)
        s, d = corner_endpoints(m)
        rep = run(m, s, d, SolverParams(alpha=1, beta=2, n_iterations=40, seed=seed))
        series = rep.best_length_series
        assert all(b <= a for a, b in zip(series, series[1:]) if a is not None)
        assert rep.best_length >= rep.optimum * (1 - 1e-12)
        assert rep.optimal_gap >= 0
        assert series[rep.convergence_iteration - 1] == series[-1]
        assert rep.convergence_iteration == 1 or series[rep.convergence_iteration - 2] != series[-1]
        for it_best, so_far in zip(rep.iteration_best_series, series):
            assert it_best is None or it_best >= so_far

    def test_not_found(self):
        # greedy with beta=0 ties on equal pheromone, picks leaf 1 and dead-ends every time
        m = make_map([(0, 0), (-1, 0), (0, -1), (5, 5)], [(0, 1), (0, 2), (2, 3)])
        rep = run(m, 0, 3, SolverParams(q0=0.0, beta=0.0, n_ants=4, n_iterations=3))
        assert rep.status == NOT_FOUND
        assert rep.best_path is None and rep.convergence_iteration == 0
        assert rep.best_length_series == [None] * 3
        d = rep.to_dict()
        assert d["best_length"] is None and d["optimal_gap"] is None
        assert rep.optimum == pytest.approx(dijkstra(m, 0, 3)[1])

    def test_json_and_csv(self, triangle):
        rep = run(triangle, 0, 1, SolverParams(n_iterations=3))
        d = json.loads(rep.to_json())
        assert d["best_length_series"] == rep.best_length_series
        assert set(d) >= {"status", "best_path", "convergence_iteration", "iterations_run",
                          "optimal_gap", "params"}
        assert rep.series_csv().splitlines()[0] == "iteration,length"
        assert len(rep.series_csv().splitlines()) == 4

    def test_rejects_bad_endpoints(self, triangle):
        with pytest.raises(ValueError):
            run(triangle, 1, 1, SolverParams())
        with pytest.raises(ValueError):
            run(triangle, 0, 7, SolverParams())


def test_elitism_does_not_hurt():
    m = generate_roadmap(30, (200, 200), 3, seed=77)
    s, d = corner_endpoints(m)
    pairs = []
    for seed in range(30):
        with_e = run(m, s, d, SolverParams(alpha=1, beta=2, e_weight=15, seed=seed))
        without = run(m, s, d, SolverParams(alpha=1, beta=2, e_weight=0, seed=seed))
        pairs.append((with_e.best_length, without.best_length))
    assert statistics.mean(a for a, _ in pairs) <= statistics.mean(b for _, b in pairs)
    # the reverse direction (elitism worse) must not be significant
    assert sign_test([(b, a) for a, b in pairs])[2] >= 0.05
