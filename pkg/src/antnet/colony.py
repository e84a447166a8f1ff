"""Single-ant path construction from a source city toward a destination.

The move rule follows the printed convention: for a uniform draw ``q``,
``q < q0`` picks the next city by roulette wheel over ``tau^alpha * eta^beta``
and otherwise the ant moves greedily to the argmax. With the default
``q0 = 1`` every move is probabilistic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .trail import DepositionRule, TrailState

DEAD_END = None


@dataclass(frozen=True)
class SolverParams:
    """Colony hyperparameters.

    Attributes
    ----------
    alpha, beta : float
        Exponents on pheromone and visibility.
    rho : float
        Evaporation rate per iteration, in (0, 1).
    q0 : float
        Probabilistic-move threshold in [0, 1].
    e_weight : float
        Elitist weight on the best-so-far path.
    n_ants, n_iterations : int
    rule : DepositionRule
    seed : int
    """

    alpha: float = 1.0
    beta: float = 2.0
    rho: float = 0.1
    q0: float = 1.0
    e_weight: float = 15.0
    n_ants: int = 20
    n_iterations: int = 100
    rule: DepositionRule = field(default_factory=DepositionRule)
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.alpha >= 0, f"alpha must be >= 0, got {self.alpha}"),
            (self.beta >= 0, f"beta must be >= 0, got {self.beta}"),
            (0 < self.rho < 1, f"rho must lie in (0, 1), got {self.rho}"),
            (0 <= self.q0 <= 1, f"q0 must lie in [0, 1], got {self.q0}"),
            (self.e_weight >= 0, f"e_weight must be >= 0, got {self.e_weight}"),
            (self.n_ants >= 1, f"n_ants must be >= 1, got {self.n_ants}"),
            (self.n_iterations >= 1, f"n_iterations must be >= 1, got {self.n_iterations}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        if not isinstance(self.rule, DepositionRule):
            raise TypeError("rule must be a DepositionRule")


@dataclass(frozen=True)
class PathResult:
    nodes: tuple[int, ...]
    length: float
    complete: bool

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "length": self.length, "complete": self.complete}


def ant_rng(seed: int, iteration: int, ant: int) -> random.Random:
    """Independent stream for one ant in one iteration.

    Derived only from ``(seed, iteration, ant)``, so results do not depend on
    the order in which ants are scheduled.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(iteration, ant))
    return random.Random(int.from_bytes(ss.generate_state(4).tobytes(), "little"))


def visibility(roadmap, i: int, k: int, g: int) -> float:
    """``1 / (d_ik + d_kg)`` where ``(i, k)`` is an edge and ``g`` the destination."""
    return 1.0 / (roadmap.edge_length(i, k) + roadmap.distance(k, g))


class Heuristic:
    """``eta^beta`` for every directed edge, for a fixed destination.

    Aligned with ``roadmap.adjacency`` so construction can index it directly.
    """

    def __init__(self, roadmap, dest: int, beta: float):
        self.dest = dest
        lengths = roadmap.lengths
        to_goal = np.hypot(*(roadmap.coords - roadmap.coords[dest]).T).tolist()
        self.eta_beta = [
            [(1.0 / (lengths[e] + to_goal[k])) ** beta for k, e in adj]
            for adj in roadmap.adjacency
        ]


def _weights(tau_alpha, heur, adjacency, current, visited):
    nbrs, weights = [], []
    for (k, e), hb in zip(adjacency[current], heur.eta_beta[current]):
        if k not in visited:
            nbrs.append(k)
            weights.append(tau_alpha[e] * hb)
    return nbrs, weights


def _tau_alpha(state: TrailState, alpha: float):
    return np.power(state.tau, alpha).tolist()


def make_context(state: TrailState, roadmap, dest: int, params: SolverParams):
    """Precompute ``tau^alpha`` per edge and ``eta^beta`` per move.

    Valid while the trail state is unchanged, i.e. for every ant of one
    iteration.
    """
    return _tau_alpha(state, params.alpha), Heuristic(roadmap, dest, params.beta)


def transition_probabilities(
    state: TrailState, roadmap, current: int, visited, g: int, params: SolverParams
):
    """Selection probabilities over unvisited neighbours of ``current``.

    Returns a ``{city: probability}`` dict, or ``DEAD_END`` when no unvisited
    neighbour exists.
    """
    heur = Heuristic(roadmap, g, params.beta)
    nbrs, weights = _weights(_tau_alpha(state, params.alpha), heur, roadmap.adjacency,
                             current, visited)
    if not nbrs:
        return DEAD_END
    total = math.fsum(weights)
    if not total > 0:
        return {k: 1.0 / len(nbrs) for k in nbrs}
    return {k: w / total for k, w in zip(nbrs, weights)}


def _choose(nbrs, weights, q0, rng):
    if not nbrs:
        return DEAD_END
    if rng.random() < q0:
        total = sum(weights)
        if not total > 0:
            return nbrs[int(rng.random() * len(nbrs))]
        r = rng.random() * total
        acc = 0.0
        for k, w in zip(nbrs, weights):
            acc += w
            if r < acc:
                return k
        # rounding can leave r just above the final partial sum
        return next(k for k, w in zip(reversed(nbrs), reversed(weights)) if w > 0)
    best, best_w = nbrs[0], weights[0]
    for k, w in zip(nbrs[1:], weights[1:]):
        if w > best_w:
            best, best_w = k, w
    return best


def step(state, roadmap, current, visited, g, params, rng, *, context=None):
    """Choose the next city, or return ``DEAD_END``.

    Greedy ties go to the lowest city id.
    """
    tau_alpha, heur = context or make_context(state, roadmap, g, params)
    nbrs, weights = _weights(tau_alpha, heur, roadmap.adjacency, current, visited)
    return _choose(nbrs, weights, params.q0, rng)


def construct_path(state, roadmap, source, dest, params, rng, *, context=None) -> PathResult:
    """Walk one ant from ``source`` until it reaches ``dest`` or dead-ends."""
    if source == dest:
        raise ValueError("source and dest must differ")
    tau_alpha, heur = context or make_context(state, roadmap, dest, params)
    adjacency, lengths, q0 = roadmap.adjacency, roadmap.lengths, params.q0
    nodes = [source]
    visited = {source}
    length = 0.0
    current = source
    for _ in range(roadmap.n_cities):
        nxt = _choose(*_weights(tau_alpha, heur, adjacency, current, visited), q0, rng)
        if nxt is DEAD_END:
            break
        length += lengths[roadmap.edge_ids[(min(current, nxt), max(current, nxt))]]
        nodes.append(nxt)
        visited.add(nxt)
        current = nxt
        if nxt == dest:
            return PathResult(tuple(nodes), length, True)
    return PathResult(tuple(nodes), length, False)
