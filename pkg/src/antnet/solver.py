"""Elitist Ant System main loop and run statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import colony, trail
from .colony import PathResult, SolverParams
from .roadmap import Roadmap, dijkstra
from .trail import DEFAULT_TAU0, TrailState

FOUND = "found"
NOT_FOUND = "not_found"


@dataclass
class RunReport:
    """Outcome of one solver run.

    ``best_length_series[i]`` is the best-so-far length after iteration
    ``i + 1`` (``None`` until a complete path exists);
    ``iteration_best_series`` holds the best complete path of each iteration
    alone. ``convergence_iteration`` is 1-based, 0 when nothing was found.
    """

    best_length_series: list
    iteration_best_series: list
    best_path: PathResult | None
    convergence_iteration: int
    iterations_run: int
    status: str
    optimum: float | None = None
    n_complete: int = 0
    params: dict = field(default_factory=dict)

    @property
    def best_length(self) -> float | None:
        return self.best_path.length if self.best_path else None

    @property
    def optimal_gap(self) -> float | None:
        if self.optimum is None or self.best_path is None:
            return None
        return (self.best_path.length - self.optimum) / self.optimum

    @property
    def optimal_found(self) -> bool:
        # In floating point a path equal to the optimum may differ by summation order.
        gap = self.optimal_gap
        return gap is not None and gap <= 1e-12

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "best_path": self.best_path.to_dict() if self.best_path else None,
            "best_length": self.best_length,
            "convergence_iteration": self.convergence_iteration,
            "iterations_run": self.iterations_run,
            "optimum": self.optimum,
            "optimal_gap": self.optimal_gap,
            "optimal_found": self.optimal_found,
            "n_complete": self.n_complete,
            "params": self.params,
            "best_length_series": self.best_length_series,
            "iteration_best_series": self.iteration_best_series,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def series_csv(self) -> str:
        rows = ["iteration,length"]
        for i, v in enumerate(self.best_length_series, start=1):
            rows.append(f"{i},{'' if v is None else repr(v)}")
        return "\n".join(rows) + "\n"


def params_dict(params: SolverParams) -> dict:
    return {
        "alpha": params.alpha,
        "beta": params.beta,
        "rho": params.rho,
        "q0": params.q0,
        "e_weight": params.e_weight,
        "n_ants": params.n_ants,
        "n_iterations": params.n_iterations,
        "rule": params.rule.kind.value,
        "T": params.rule.T,
        "seed": params.seed,
    }


def convergence_time(series) -> int:
    """1-based index of the first entry equal to the final value."""
    if not series:
        raise ValueError("series must be nonempty")
    final = series[-1]
    for i, v in enumerate(series, start=1):
        if v == final:
            return i
    raise AssertionError("unreachable")


def run(
    roadmap: Roadmap,
    source: int,
    dest: int,
    params: SolverParams,
    tau0: float = DEFAULT_TAU0,
    *,
    oracle: bool = True,
    executor=None,
) -> RunReport:
    """Run the Elitist Ant System.

    Per iteration every ant builds a path on the frozen trail, the best-so-far
    path is updated from complete paths, trails evaporate once, each
    complete ant deposits, and the best-so-far path is reinforced with
    ``params.e_weight``.

    ``executor`` (anything with an ordered ``map``) may be given to build the
    ants of an iteration concurrently; results are unaffected because each
    ant draws from its own ``(seed, iteration, ant)`` stream.
    """
    if source == dest:
        raise ValueError("source and dest must differ")
    n = roadmap.n_cities
    for name, v in (("source", source), ("dest", dest)):
        if not 0 <= v < n:
            raise ValueError(f"{name} {v} is not a valid city id")

    state = TrailState.for_roadmap(roadmap, tau0)
    heur = colony.Heuristic(roadmap, dest, params.beta)
    best: PathResult | None = None
    best_series, iter_series = [], []
    n_complete = 0

    for it in range(params.n_iterations):
        context = (colony._tau_alpha(state, params.alpha), heur)

        def build(ant, it=it, context=context):
            rng = colony.ant_rng(params.seed, it, ant)
            return colony.construct_path(state, roadmap, source, dest, params, rng,
                                         context=context)

        ants = range(params.n_ants)
        paths = list(executor.map(build, ants)) if executor else [build(a) for a in ants]
        complete = [p for p in paths if p.complete]
        n_complete += len(complete)

        it_best = min(complete, key=lambda p: p.length, default=None)
        if it_best is not None and (best is None or it_best.length < best.length):
            best = it_best
        iter_series.append(it_best.length if it_best else None)
        best_series.append(best.length if best else None)

        trail.evaporate(state, params.rho)
        for p in complete:
            trail.deposit_path(state, roadmap, p, params.rule)
        if best is not None:
            trail.elitist_reinforce(state, roadmap, best, params.e_weight, params.rule)

    optimum = dijkstra(roadmap, source, dest)[1] if oracle else None
    return RunReport(
        best_length_series=best_series,
        iteration_best_series=iter_series,
        best_path=best,
        convergence_iteration=convergence_time(best_series) if best else 0,
        iterations_run=params.n_iterations,
        status=FOUND if best else NOT_FOUND,
        optimum=optimum,
        n_complete=n_complete,
        params=params_dict(params),
    )


def sign_test(pairs) -> tuple[int, int, float]:
    """One-sided sign test that the first member of each pair is smaller.

    Ties are dropped. Returns ``(n_less, n_greater, p)`` with ``p`` the
    binomial tail probability of at least ``n_less`` successes among the
    untied pairs under a fair coin.
    """
    less = sum(1 for a, b in pairs if a < b)
    greater = sum(1 for a, b in pairs if a > b)
    n = less + greater
    if n == 0:
        return 0, 0, 1.0
    p = sum(math.comb(n, k) for k in range(less, n + 1)) / 2**n
    return less, greater, p
