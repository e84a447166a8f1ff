"""Parameter sweeps, rule comparisons, and the fitted (alpha, beta) predictor.

Sweep work items (one per grid cell and seed) are independent; results are
always reduced in cell order, so output does not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .colony import SolverParams
from .roadmap import Roadmap, extract_features
from .solver import run, sign_test
from .trail import DepositionRule, Rule

ALPHA_BAND = (0.5, 1.5)
BETA_BAND = (3.5, 4.0)


class ExtrapolationWarning(UserWarning):
    """Inputs or predictions fell outside the calibrated range and were clamped."""


def _steps(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


@dataclass(frozen=True)
class SweepGrid:
    alphas: tuple = tuple(_steps(0.5, 5.0, 0.5))
    betas: tuple = tuple(_steps(0.5, 5.0, 0.5))
    Ts: tuple = tuple(_steps(7.0, 13.0, 0.5))
    seeds: tuple = (0,)

    def __post_init__(self):
        for name in ("alphas", "betas", "Ts", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")


@dataclass
class Cell:
    alpha: float
    beta: float
    T: float | None
    lengths: list = field(default_factory=list)
    convergence: list = field(default_factory=list)
    n_seeds: int = 0

    @property
    def n_complete(self) -> int:
        return len(self.lengths)

    @property
    def mean_len(self):
        return sum(self.lengths) / len(self.lengths) if self.lengths else None

    @property
    def mean_conv(self):
        return sum(self.convergence) / len(self.convergence) if self.convergence else None

    def row(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "T": self.T,
            "mean_len": self.mean_len,
            "mean_conv": self.mean_conv,
            "n_complete": self.n_complete,
        }


CSV_COLUMNS = ["alpha", "beta", "T", "mean_len", "mean_conv", "n_complete"]


def _fmt(v):
    return "" if v is None else repr(v)


def cells_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        r = c.row()
        w.writerow([_fmt(r[k]) for k in CSV_COLUMNS])
    return buf.getvalue()


def _run_item(item):
    roadmap, source, dest, params, tau0 = item
    rep = run(roadmap, source, dest, params, tau0, oracle=False)
    if rep.best_path is None:
        return None
    return rep.best_path.length, rep.convergence_iteration


def _map_items(items, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_item, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [_run_item(it) for it in items]


def _sweep(roadmap, source, dest, combos, seeds, base, tau0, jobs):
    items, cells = [], []
    for alpha, beta, T in combos:
        rule = DepositionRule(base.rule.kind, T) if T is not None else base.rule
        cells.append(Cell(alpha, beta, rule.T if rule.kind is Rule.EXPONENTIAL else None))
        for s in seeds:
            p = replace(base, alpha=alpha, beta=beta, rule=rule, seed=s)
            items.append((roadmap, source, dest, p, tau0))
    results = _map_items(items, jobs)
    k = 0
    for cell in cells:
        for _ in seeds:
            res = results[k]
            k += 1
            cell.n_seeds += 1
            if res is not None:
                cell.lengths.append(res[0])
                cell.convergence.append(res[1])
    return cells


@dataclass
class AlphaBetaSweep:
    alphas: list
    betas: list
    cells: list

    def cell(self, alpha, beta) -> Cell:
        return self.cells[self.alphas.index(alpha) * len(self.betas) + self.betas.index(beta)]

    def to_csv(self) -> str:
        return cells_csv(self.cells)

    def convergence_table(self) -> str:
        """Convergence-time matrix, alpha rows by beta columns; empty cells had
        no complete path."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha\\beta"] + [repr(b) for b in self.betas])
        for a in self.alphas:
            w.writerow([repr(a)] + [_fmt(self.cell(a, b).mean_conv) for b in self.betas])
        return buf.getvalue()

    def surface(self) -> list:
        return [(c.alpha, c.beta, c.mean_len) for c in self.cells]

    def to_json(self) -> str:
        return json.dumps(
            {
                "alphas": self.alphas,
                "betas": self.betas,
                "cells": [c.row() for c in self.cells],
                "surface": self.surface(),
            },
            indent=2,
        )


def sweep_alpha_beta(
    roadmap: Roadmap,
    source: int,
    dest: int,
    grid: SweepGrid,
    fixed: SolverParams,
    tau0: float = 0.1,
    jobs: int = 1,
) -> AlphaBetaSweep:
    """Mean best length and mean convergence time for every (alpha, beta).

    ``fixed`` supplies the remaining parameters, including the rule and its
    ``T``; its ``alpha``, ``beta`` and ``seed`` are overridden.
    """
    combos = [(a, b, None) for a in grid.alphas for b in grid.betas]
    cells = _sweep(roadmap, source, dest, combos, grid.seeds, fixed, tau0, jobs)
    return AlphaBetaSweep(list(grid.alphas), list(grid.betas), cells)


@dataclass
class TSweep:
    cells: list

    @property
    def best_T(self):
        scored = [c for c in self.cells if c.mean_conv is not None]
        if not scored:
            return None
        return min(scored, key=lambda c: c.mean_conv).T

    def to_csv(self) -> str:
        return cells_csv(self.cells)

    def to_json(self) -> str:
        return json.dumps({"best_T": self.best_T, "cells": [c.row() for c in self.cells]},
                          indent=2)


def sweep_T(
    roadmap: Roadmap,
    source: int,
    dest: int,
    Ts,
    fixed: SolverParams,
    seeds=(0,),
    tau0: float = 0.1,
    jobs: int = 1,
) -> TSweep:
    """Mean convergence time per time constant at fixed alpha and beta.

    Ties in the argmin go to the earliest T listed.
    """
    if fixed.rule.kind is not Rule.EXPONENTIAL:
        raise ValueError("sweep_T needs the exponential deposition rule")
    if not Ts:
        raise ValueError("Ts must be nonempty")
    combos = [(fixed.alpha, fixed.beta, T) for T in Ts]
    return TSweep(_sweep(roadmap, source, dest, combos, tuple(seeds), fixed, tau0, jobs))


@dataclass
class Comparison:
    """Paired runs of two parameter sets.

    ``curves`` holds, per (instance, seed), the iteration-best and
    best-so-far series of both arms and the exact optimum.
    """

    curves: list
    convergence_pairs: list
    gap_pairs: list

    @property
    def summary(self) -> dict:
        def med(xs):
            xs = [x for x in xs if x is not None]
            return statistics.median(xs) if xs else None

        # exponential arm first: the one-sided alternative is that it converges sooner
        paired = [(e, c) for c, e in self.convergence_pairs if c is not None and e is not None]
        faster, slower, p = sign_test(paired)
        return {
            "n_pairs": len(self.convergence_pairs),
            "constant": {
                "median_convergence": med(c for c, _ in self.convergence_pairs),
                "median_gap": med(c for c, _ in self.gap_pairs),
            },
            "exponential": {
                "median_convergence": med(e for _, e in self.convergence_pairs),
                "median_gap": med(e for _, e in self.gap_pairs),
            },
            "sign_test": {"n_faster": faster, "n_slower": slower, "p_value": p},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", "seed", "iteration", "constant", "exponential", "optimum"])
        for c in self.curves:
            for i, (a, b) in enumerate(zip(c["constant"], c["exponential"]), start=1):
                w.writerow([c["instance"], c["seed"], i, _fmt(a), _fmt(b), repr(c["optimum"])])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"summary": self.summary, "curves": self.curves}, indent=2)


def _compare_item(item):
    roadmap, source, dest, params, tau0 = item
    return run(roadmap, source, dest, params, tau0)


def compare_on_maps(
    instances,
    params_constant: SolverParams,
    params_exponential: SolverParams,
    seeds=(0,),
    tau0: float = 0.1,
    jobs: int = 1,
) -> Comparison:
    """Pair both parameter sets on every ``(roadmap, source, dest)`` and seed.

    Both arms of a pair see the same roadmap and the same seed.
    """
    items, keys = [], []
    for idx, (roadmap, source, dest) in enumerate(instances):
        for s in seeds:
            keys.append((idx, s))
            for p in (params_constant, params_exponential):
                items.append((roadmap, source, dest, replace(p, seed=s), tau0))
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_compare_item, items))
    else:
        reports = [_compare_item(it) for it in items]

    curves, conv, gaps = [], [], []
    for k, (idx, s) in enumerate(keys):
        rc, re = reports[2 * k], reports[2 * k + 1]
        curves.append({
            "instance": idx,
            "seed": s,
            "optimum": rc.optimum,
            "constant": rc.iteration_best_series,
            "exponential": re.iteration_best_series,
            "constant_best": rc.best_length_series,
            "exponential_best": re.best_length_series,
        })
        conv.append((rc.convergence_iteration or None, re.convergence_iteration or None))
        gaps.append((rc.optimal_gap, re.optimal_gap))
    return Comparison(curves, conv, gaps)


def compare_rules(
    roadmap: Roadmap,
    source: int,
    dest: int,
    params_constant: SolverParams,
    params_exponential: SolverParams,
    seeds=(0,),
    tau0: float = 0.1,
    jobs: int = 1,
) -> Comparison:
    return compare_on_maps([(roadmap, source, dest)], params_constant, params_exponential,
                           seeds, tau0, jobs)


class SeriesKind(str, Enum):
    COSINE = "cosine"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class FittedSeries:
    """Order-4 bivariate series ``f(x, y)`` with coefficients ``a..o``.

    ``bounds = (x_min, x_max, y_min, y_max)`` define the affine map of raw
    features onto the basis domain ([0, pi] for cosine, [-1, 1] for sigmoid).
    """

    kind: SeriesKind
    coefficients: tuple
    bounds: tuple
    order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", SeriesKind(self.kind))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.coefficients) != 15:
            raise ValueError(f"expected 15 coefficients, got {len(self.coefficients)}")
        if self.order != 4:
            raise ValueError("only order-4 series are supported")
        x0, x1, y0, y1 = self.bounds
        if not all(math.isfinite(v) for v in self.bounds) or not (x0 < x1 and y0 < y1):
            raise ValueError(f"invalid scaling bounds {self.bounds}")

    def in_bounds(self, x, y) -> bool:
        x0, x1, y0, y1 = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1

    def with_coefficients(self, coefficients) -> FittedSeries:
        return replace(self, coefficients=tuple(coefficients))


# Calibrated on generated 200x200 maps with 120..240 cities (degree 4), padded.
DEFAULT_BOUNDS = (0.6, 1.25, 3.0, 6.0)

ALPHA_FIT = FittedSeries(
    SeriesKind.COSINE,
    (0.935, -0.237, -0.020, -0.011, -0.028, 0.028, -0.002, 0.027, 0.0006, -0.039,
     -0.006, 0.056, -0.022, 0.047, -0.020),
    DEFAULT_BOUNDS,
)
BETA_FIT = FittedSeries(
    SeriesKind.SIGMOID,
    (3.742, 0.323, 0.422, -0.090, 0.414, -0.124, -0.105, -0.12, -0.131, -0.111,
     0.019, -0.196, 0.100, 0.007, -0.139),
    DEFAULT_BOUNDS,
)

# (power of x-basis, power of y-basis) for terms a..o
_TERMS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2),
          (0, 3), (4, 0), (3, 1), (2, 2), (1, 3), (0, 4)]


def _scale(v, lo, hi, a, b):
    return a + (v - lo) * (b - a) / (hi - lo)


def _scaled_inputs(fit, x, y, a, b):
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"inputs must be finite, got x={x}, y={y}")
    x0, x1, y0, y1 = fit.bounds
    if not fit.in_bounds(x, y):
        warnings.warn(
            f"features ({x:g}, {y:g}) outside scaling bounds {fit.bounds}; clamped",
            ExtrapolationWarning,
            stacklevel=3,
        )
        x, y = min(max(x, x0), x1), min(max(y, y0), y1)
    return _scale(x, x0, x1, a, b), _scale(y, y0, y1, a, b)


def cosine_series(coefficients, xs, ys) -> float:
    """Evaluate the cosine expansion at already-scaled ``xs, ys`` in [0, pi]."""
    cx = [math.cos(i * xs) for i in range(5)]
    cy = [math.cos(j * ys) for j in range(5)]
    return sum(c * cx[i] * cy[j] for c, (i, j) in zip(coefficients, _TERMS))


def sigmoid_basis(i: int, u: float, n: int = 4) -> float:
    """``S_1(u) = u``; ``S_i(u) = -1 + 2 / (1 + exp(-(u + 1 - (i-1) 2/n) / 0.12))``."""
    if i == 1:
        return u
    z = (u + 1.0 - (i - 1) * (2.0 / n)) / 0.12
    return -1.0 + 2.0 / (1.0 + math.exp(-z))


def sigmoid_series(coefficients, xs, ys) -> float:
    """Evaluate the sigmoid expansion at already-scaled ``xs, ys`` in [-1, 1].

    A power of 0 denotes the constant term; power ``i >= 1`` selects ``S_i``.
    """
    sx = [1.0] + [sigmoid_basis(i, xs) for i in range(1, 5)]
    sy = [1.0] + [sigmoid_basis(j, ys) for j in range(1, 5)]
    return sum(c * sx[i] * sy[j] for c, (i, j) in zip(coefficients, _TERMS))


def eval_cosine_series(fit: FittedSeries, x: float, y: float) -> float:
    """Predicted alpha from node density ``x`` and smallest-arc stddev ``y``."""
    if fit.kind is not SeriesKind.COSINE:
        raise ValueError("expected a cosine series")
    xs, ys = _scaled_inputs(fit, x, y, 0.0, math.pi)
    return cosine_series(fit.coefficients, xs, ys)


def eval_sigmoid_series(fit: FittedSeries, x: float, y: float) -> float:
    """Predicted beta from node density ``x`` and smallest-arc stddev ``y``."""
    if fit.kind is not SeriesKind.SIGMOID:
        raise ValueError("expected a sigmoid series")
    xs, ys = _scaled_inputs(fit, x, y, -1.0, 1.0)
    return sigmoid_series(fit.coefficients, xs, ys)


@dataclass(frozen=True)
class Prediction:
    alpha: float
    beta: float
    raw_alpha: float
    raw_beta: float
    node_density: float
    smallest_arc_stddev: float
    extrapolated: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def clamp_to_band(value: float, band, name: str) -> float:
    lo, hi = band
    if value < lo or value > hi:
        warnings.warn(f"predicted {name}={value:.4g} outside [{lo}, {hi}]; clamped",
                      ExtrapolationWarning, stacklevel=2)
        return min(max(value, lo), hi)
    return value


def predict_params(roadmap: Roadmap, alpha_fit: FittedSeries = ALPHA_FIT,
                   beta_fit: FittedSeries = BETA_FIT) -> Prediction:
    """Recommended (alpha, beta) for a roadmap from its features.

    ``extrapolated`` is set when a feature had to be clamped into a fit's
    scaling bounds or a prediction into the observed optimum band.
    """
    f = extract_features(roadmap)
    x, y = f.node_density, f.smallest_arc_stddev
    extrapolated = not (alpha_fit.in_bounds(x, y) and beta_fit.in_bounds(x, y))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        raw_a = eval_cosine_series(alpha_fit, x, y)
        raw_b = eval_sigmoid_series(beta_fit, x, y)
    if extrapolated:
        warnings.warn(f"features ({x:g}, {y:g}) outside calibrated bounds; clamped",
                      ExtrapolationWarning, stacklevel=2)
    a = clamp_to_band(raw_a, ALPHA_BAND, "alpha")
    b = clamp_to_band(raw_b, BETA_BAND, "beta")
    extrapolated = extrapolated or a != raw_a or b != raw_b
    return Prediction(a, b, raw_a, raw_b, x, y, extrapolated)


def feature_grid(alphas_fit=ALPHA_FIT, n=5) -> np.ndarray:
    """Raw feature points spanning a fit's bounds, for tabulating predictions."""
    x0, x1, y0, y1 = alphas_fit.bounds
    xs, ys = np.linspace(x0, x1, n), np.linspace(y0, y1, n)
    return np.array([(x, y) for x in xs for y in ys])


# Level-II refit: per-environment optimum (alpha, beta), then least squares
# onto the two bases. Reproduces the method, not the published coefficients.

def series_terms(kind, xs: float, ys: float) -> np.ndarray:
    """Basis products for terms ``a..o`` at already-scaled inputs."""
    kind = SeriesKind(kind)
    if kind is SeriesKind.COSINE:
        bx = [math.cos(i * xs) for i in range(5)]
        by = [math.cos(j * ys) for j in range(5)]
    else:
        bx = [1.0] + [sigmoid_basis(i, xs) for i in range(1, 5)]
        by = [1.0] + [sigmoid_basis(j, ys) for j in range(1, 5)]
    return np.array([bx[i] * by[j] for i, j in _TERMS])


def fit_series(kind, features, targets, bounds=DEFAULT_BOUNDS) -> FittedSeries:
    """Least-squares coefficients for raw ``features`` (rows of x, y).

    Features outside ``bounds`` are clamped before scaling. With fewer than
    15 distinct environments the minimum-norm solution is returned.
    """
    kind = SeriesKind(kind)
    features = np.asarray(features, dtype=float).reshape(-1, 2)
    targets = np.asarray(targets, dtype=float)
    if len(features) != len(targets) or len(targets) == 0:
        raise ValueError("features and targets must be nonempty and the same length")
    if not (np.isfinite(features).all() and np.isfinite(targets).all()):
        raise ValueError("features and targets must be finite")
    probe = FittedSeries(kind, (0.0,) * 15, bounds)
    a, b = (0.0, math.pi) if kind is SeriesKind.COSINE else (-1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        design = np.array([series_terms(kind, *_scaled_inputs(probe, x, y, a, b))
                           for x, y in features])
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return probe.with_coefficients(coef)


@dataclass(frozen=True)
class EnvironmentOptimum:
    node_density: float
    smallest_arc_stddev: float
    alpha: float | None
    beta: float | None
    mean_len: float | None
    mean_conv: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def best_cell(sweep: AlphaBetaSweep) -> Cell | None:
    """Shortest mean length, then fastest mean convergence, then grid order."""
    scored = [c for c in sweep.cells if c.mean_len is not None]
    if not scored:
        return None
    return min(scored, key=lambda c: (c.mean_len, c.mean_conv))


def level2_optima(instances, grid: SweepGrid, fixed: SolverParams, tau0: float = 0.1,
                  jobs: int = 1) -> list:
    """Optimum (alpha, beta) and features of each ``(roadmap, source, dest)``."""
    out = []
    for roadmap, source, dest in instances:
        f = extract_features(roadmap)
        c = best_cell(sweep_alpha_beta(roadmap, source, dest, grid, fixed, tau0, jobs))
        out.append(EnvironmentOptimum(
            f.node_density, f.smallest_arc_stddev,
            c.alpha if c else None, c.beta if c else None,
            c.mean_len if c else None, c.mean_conv if c else None,
        ))
    return out


def refit(optima, bounds=DEFAULT_BOUNDS) -> tuple[FittedSeries, FittedSeries]:
    """Cosine fit for alpha and sigmoid fit for beta from environment optima."""
    rows = [o for o in optima if o.alpha is not None]
    if not rows:
        raise ValueError("no environment produced a complete path")
    feats = [(o.node_density, o.smallest_arc_stddev) for o in rows]
    return (fit_series(SeriesKind.COSINE, feats, [o.alpha for o in rows], bounds),
            fit_series(SeriesKind.SIGMOID, feats, [o.beta for o in rows], bounds))
