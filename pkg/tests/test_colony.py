import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from antnet.colony import (
    DEAD_END,
    PathResult,
    SolverParams,
    ant_rng,
    construct_path,
    step,
    transition_probabilities,
    visibility,
)
from antnet.roadmap import City, Roadmap, generate_roadmap
from antnet.trail import TrailState
from conftest import make_map

P = SolverParams()


def star(n_leaves=5):
    # centre 0, leaves 1..n on a circle of radius 10 at uneven angles
    pts = [(0.0, 0.0)] + [(10 * math.cos(0.9 * k), 10 * math.sin(0.9 * k))
                          for k in range(n_leaves)]
    return make_map(pts, [(0, k) for k in range(1, n_leaves + 1)])


def scaled(m, c):
    return Roadmap(tuple(City(p.id, p.x * c, p.y * c) for p in m.cities), m.edges)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(alpha=-1), dict(beta=-0.1), dict(rho=0), dict(rho=1),
                                    dict(q0=1.2), dict(e_weight=-1), dict(n_ants=0),
                                    dict(n_iterations=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)


class TestVisibility:
    def test_arithmetic(self):
        # 0 -> 1 is 3 long; city 1 is 7 from the goal city 2
        m = make_map([(0, 0), (3, 0), (3, 7)], [(0, 1), (1, 2)])
        assert visibility(m, 0, 1, 2) == pytest.approx(0.1)

    def test_destination_neighbour(self):
        m = make_map([(0, 0), (4, 0)], [(0, 1)])
        assert visibility(m, 0, 1, 1) == 0.25

    def test_homogeneous(self):
        m = generate_roadmap(10, (50, 50), 3, seed=2)
        u, v = m.edges[3]
        assert visibility(scaled(m, 2.5), u, v, 9) == pytest.approx(visibility(m, u, v, 9) / 2.5)


class TestTransitionProbabilities:
    def test_single_neighbour(self, line3):
        assert transition_probabilities(TrailState.for_roadmap(line3), line3, 0, {0}, 2, P) == {1: 1.0}

    def test_symmetric_pair(self):
        # neighbours 1 and 2 mirror each other about the axis through the goal 3
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        probs = transition_probabilities(TrailState.for_roadmap(m), m, 0, {0}, 3, P)
        assert probs[1] == pytest.approx(0.5) and probs[2] == pytest.approx(0.5)

    def test_pheromone_ratio(self):
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        s = TrailState.for_roadmap(m)
        s.tau[m.edge_id(0, 1)] = 1.0
        s.tau[m.edge_id(0, 2)] = 2.0
        probs = transition_probabilities(s, m, 0, {0}, 3, SolverParams(alpha=1, beta=1))
        assert probs[1] == pytest.approx(1 / 3, rel=1e-14)
        assert probs[2] == pytest.approx(2 / 3, rel=1e-14)

    def test_visited_neighbours_excluded(self, triangle):
        probs = transition_probabilities(TrailState.for_roadmap(triangle), triangle, 0, {0, 2},
                                         1, P)
        assert probs == {1: 1.0}

    def test_dead_end(self, line3):
        assert transition_probabilities(TrailState.for_roadmap(line3), line3, 1, {0, 1, 2}, 2,
                                        P) is DEAD_END

    def test_matches_hand_computed_weights(self):
        m = generate_roadmap(15, (60, 60), 4, seed=8)
        s = TrailState.for_roadmap(m)
        s.tau[:] = np.linspace(0.1, 1.5, s.tau.size)
        params = SolverParams(alpha=1.7, beta=3.2)
        cur, g = 4, 11
        probs = transition_probabilities(s, m, cur, {cur}, g, params)
        w = {k: s.tau[m.edge_id(cur, k)] ** 1.7 * visibility(m, cur, k, g) ** 3.2
             for k, _ in m.adjacency[cur]}
        total = sum(w.values())
        assert probs == pytest.approx({k: v / total for k, v in w.items()}, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 500), cur=st.integers(0, 19), mask=st.integers(0, 2**20 - 1),
           alpha=st.floats(0, 5), beta=st.floats(0, 5))
    def test_normalised(self, seed, cur, mask, alpha, beta):
        m = generate_roadmap(20, (100, 100), 3, seed=seed % 7)
        s = TrailState.for_roadmap(m)
        s.tau[:] = np.random.default_rng(seed).uniform(1e-3, 5, s.tau.size)
        visited = {cur} | {i for i in range(20) if mask >> i & 1}
        probs = transition_probabilities(s, m, cur, visited, (cur + 7) % 20,
                                         SolverParams(alpha=alpha, beta=beta))
        if probs is not DEAD_END:
            assert abs(math.fsum(probs.values()) - 1.0) < 1e-12

    def test_more_pheromone_never_less_likely(self):
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        prev = 0.0
        for t in np.linspace(0.05, 5, 40):
            s = TrailState.for_roadmap(m, 1.0)
            s.tau[m.edge_id(0, 1)] = t
            p = transition_probabilities(s, m, 0, {0}, 3, SolverParams(alpha=0.7))[1]
            assert p >= prev
            prev = p

    def test_scale_invariance(self):
        m = generate_roadmap(25, (100, 100), 4, seed=6)
        s = TrailState.for_roadmap(m)
        s.tau[:] = np.random.default_rng(1).uniform(0.1, 2, s.tau.size)
        bigger = s.copy()
        bigger.tau *= 7.0
        params = SolverParams(alpha=1.5, beta=4.0)
        base = transition_probabilities(s, m, 3, {3}, 20, params)
        assert transition_probabilities(bigger, m, 3, {3}, 20, params) == pytest.approx(base, rel=1e-12)
        assert transition_probabilities(s, scaled(m, 3.0), 3, {3}, 20, params) == pytest.approx(
            base, rel=1e-12)


class TestStep:
    def test_greedy_when_q0_zero(self):
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        s = TrailState.for_roadmap(m)
        s.tau[m.edge_id(0, 2)] = 0.2
        params = SolverParams(q0=0.0)
        assert {step(s, m, 0, {0}, 3, params, ant_rng(0, 0, a)) for a in range(50)} == {2}

    def test_greedy_tie_goes_to_lowest_id(self):
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        s = TrailState.for_roadmap(m)
        assert step(s, m, 0, {0}, 3, SolverParams(q0=0.0), ant_rng(1, 0, 0)) == 1

    def test_probabilistic_when_q0_one(self):
        m = make_map([(0, 0), (1, 1), (1, -1), (2, 0)], [(0, 1), (0, 2), (1, 3), (2, 3)])
        s = TrailState.for_roadmap(m)
        s.tau[m.edge_id(0, 2)] = 0.2
        picks = [step(s, m, 0, {0}, 3, SolverParams(q0=1.0), ant_rng(0, 0, a)) for a in range(400)]
        # P(1) = 0.1^1 / (0.1 + 0.2) = 1/3 under alpha=1
        assert 0.25 < picks.count(1) / 400 < 0.42

    def test_replay(self):
        m = generate_roadmap(30, (100, 100), 4, seed=3)
        s = TrailState.for_roadmap(m)
        a = [step(s, m, 5, {5}, 17, P, ant_rng(9, 2, k)) for k in range(20)]
        b = [step(s, m, 5, {5}, 17, P, ant_rng(9, 2, k)) for k in range(20)]
        assert a == b

    def test_dead_end(self, line3):
        assert step(TrailState.for_roadmap(line3), line3, 2, {0, 1, 2}, 0, P,
                    ant_rng(0, 0, 0)) is DEAD_END


class TestConstructPath:
    def test_two_node(self, two_node):
        p = construct_path(TrailState.for_roadmap(two_node), two_node, 0, 1, P, ant_rng(0, 0, 0))
        assert p == PathResult((0, 1), 5.0, True)

    def test_forced_moves(self, line3):
        p = construct_path(TrailState.for_roadmap(line3), line3, 0, 2, P, ant_rng(0, 0, 0))
        assert p.nodes == (0, 1, 2) and p.complete

    def test_rejects_equal_endpoints(self, line3):
        with pytest.raises(ValueError):
            construct_path(TrailState.for_roadmap(line3), line3, 1, 1, P, ant_rng(0, 0, 0))

    def test_star_dead_end_rate(self):
        m = star(5)
        s = TrailState.for_roadmap(m)
        dest = 3
        w = {k: (1 / (m.edge_length(0, k) + m.distance(k, dest))) ** P.beta for k in range(1, 6)}
        p_complete = w[dest] / sum(w.values())
        n = 10_000
        done = sum(construct_path(s, m, 0, dest, P, ant_rng(42, 0, a)).complete for a in range(n))
        sigma = math.sqrt(n * p_complete * (1 - p_complete))
        assert abs(done - n * p_complete) < 3 * sigma

    @pytest.mark.parametrize("seed", range(10))
    def test_paths_are_simple_and_lengths_exact(self, seed):
        m = generate_roadmap(40, (100, 100), 3, seed=seed)
        s = TrailState.for_roadmap(m)
        for a in range(30):
            p = construct_path(s, m, 0, 39, SolverParams(alpha=1, beta=1), ant_rng(seed, 0, a))
            assert len(set(p.nodes)) == len(p.nodes)
            assert all(m.edge_id(u, v) is not None for u, v in zip(p.nodes, p.nodes[1:]))
            assert p.length == m.path_length(p.nodes)
            if p.complete:
                assert p.nodes[0] == 0 and p.nodes[-1] == 39 and p.length > 0
