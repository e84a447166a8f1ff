"""Pheromone trails: per-edge state, evaporation, deposition, elitist
reinforcement, and the continuous-time trail dynamics

    d tau / dt = -rho * tau + signal(t + 1)

solved in closed form for constant and exponentially saturating signals and
numerically by fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.signal import lfilter

DEFAULT_TAU0 = 0.1
# |rho - 1/T| below this makes the exponential closed form singular.
RESONANCE_TOL = 1e-9


class Rule(str, Enum):
    CONSTANT = "constant"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DepositionRule:
    kind: Rule = Rule.CONSTANT
    T: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Rule(self.kind))
        if self.kind is Rule.EXPONENTIAL and not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive for the exponential rule, got {self.T}")

    @classmethod
    def constant(cls) -> DepositionRule:
        return cls(Rule.CONSTANT)

    @classmethod
    def exponential(cls, T: float = 10.0) -> DepositionRule:
        return cls(Rule.EXPONENTIAL, T)


class TrailState:
    """Pheromone concentration on every undirected edge of a roadmap.

    Indexed by edge id, so ``tau_ij`` and ``tau_ji`` are the same entry.
    """

    def __init__(self, n_edges: int, tau0: float = DEFAULT_TAU0):
        if not (tau0 >= 0 and math.isfinite(tau0)):
            raise ValueError(f"tau0 must be finite and nonnegative, got {tau0}")
        self.tau0 = float(tau0)
        self.tau = np.full(n_edges, self.tau0)

    @classmethod
    def for_roadmap(cls, roadmap, tau0: float = DEFAULT_TAU0) -> TrailState:
        return cls(len(roadmap.edges), tau0)

    def copy(self) -> TrailState:
        other = TrailState(0, self.tau0)
        other.tau = self.tau.copy()
        return other

    def __repr__(self):
        return f"TrailState(n_edges={self.tau.size}, tau0={self.tau0})"


def evaporate(state: TrailState, rho: float) -> TrailState:
    """Scale every trail by ``1 - rho`` in place."""
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    state.tau *= 1.0 - rho
    return state


def deposit_shaping(rule: DepositionRule, hop_index: int) -> float:
    """Deposit multiplier for the ``hop_index``-th edge (1-based from the source).

    Constant: 1. Exponential: ``1 - exp(-hop_index / T)``, so edges nearer the
    destination receive more.
    """
    if hop_index < 1:
        raise ValueError(f"hop_index is 1-based, got {hop_index}")
    if rule.kind is Rule.CONSTANT:
        return 1.0
    return -math.expm1(-hop_index / rule.T)


def _edge_ids(roadmap, nodes):
    return [roadmap.edge_id(a, b) for a, b in zip(nodes, nodes[1:])]


def _deposit(state, roadmap, path, rule, weight):
    amount = weight / path.length
    for s, e in enumerate(_edge_ids(roadmap, path.nodes), start=1):
        state.tau[e] += amount * deposit_shaping(rule, s)


def deposit_path(state: TrailState, roadmap, path, rule: DepositionRule) -> TrailState:
    """Lay ``(1 / C_k) * shaping(s)`` on the s-th edge of a completed path.

    Incomplete (dead-ended) paths deposit nothing.
    """
    if not path.complete:
        return state
    if not path.length > 0:
        raise ValueError("a complete path must have positive length")
    _deposit(state, roadmap, path, rule, 1.0)
    return state


def elitist_reinforce(
    state: TrailState, roadmap, best, e_weight: float, rule: DepositionRule
) -> TrailState:
    """Extra ``e_weight / C_bs``-scaled deposit on the best-so-far path."""
    if e_weight < 0:
        raise ValueError(f"e_weight must be nonnegative, got {e_weight}")
    if not best.complete:
        raise ValueError("elitist reinforcement needs a complete best-so-far path")
    if e_weight == 0:
        return state
    _deposit(state, roadmap, best, rule, e_weight)
    return state


@dataclass(frozen=True)
class ClosedFormTrail:
    """Parameters of the continuous trail model for one edge.

    ``deposit_total`` is the summed per-step deposit; ``T`` is only used by
    the exponential solution. ``A`` is the transient amplitude fixed by
    ``tau(0) = tau0``.
    """

    tau0: float
    rho: float
    deposit_total: float
    T: float = 10.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive for a stable trail, got {self.rho}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def steady_state(self) -> float:
        return self.deposit_total / self.rho

    def _resonance_gap(self) -> float:
        gap = self.rho - 1.0 / self.T
        if abs(gap) < RESONANCE_TOL:
            raise ValueError(
                f"rho={self.rho} is resonant with 1/T={1.0 / self.T}; the closed form is "
                "singular here, use integrate_trail_ode instead"
            )
        return gap

    def A(self, rule: DepositionRule | Rule = Rule.CONSTANT) -> float:
        kind = rule.kind if isinstance(rule, DepositionRule) else Rule(rule)
        a = self.tau0 - self.steady_state
        if kind is Rule.EXPONENTIAL:
            a += self.deposit_total * math.exp(-1.0 / self.T) / self._resonance_gap()
        return a


def closed_form_constant(cf: ClosedFormTrail, t):
    """``[tau0 - S] exp(-rho t) + S`` with ``S = deposit_total / rho``.

    Evaluated as ``tau0 e + S (1 - e)``, ``e = exp(-rho t)``, which returns
    ``tau0`` exactly at ``t = 0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = cf.tau0 * np.exp(-cf.rho * t) - cf.steady_state * np.expm1(-cf.rho * t)
    return float(out) if out.ndim == 0 else out


def closed_form_exponential(cf: ClosedFormTrail, t):
    """Solution for the signal ``deposit_total * (1 - exp(-(t + 1) / T))``.

    ``A exp(-rho t) + S - K exp(-(t + 1) / T)`` with ``K = deposit_total /
    (rho - 1/T)`` and ``A = tau0 - S + K exp(-1/T)``. Regrouped as

        tau0 e + S (1 - e) + K exp(-1/T) (e - exp(-t/T)),   e = exp(-rho t)

    so ``t = 0`` gives ``tau0`` exactly and the last bracket is formed
    without cancellation.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    gap = cf._resonance_gap()
    k = cf.deposit_total / gap
    decay = np.exp(-cf.rho * t)
    # factor out the slower exponential so expm1 never overflows
    if gap > 0:
        bracket = np.exp(-t / cf.T) * np.expm1(-gap * t)
    else:
        bracket = -decay * np.expm1(gap * t)
    out = (
        cf.tau0 * decay
        - cf.steady_state * np.expm1(-cf.rho * t)
        + k * math.exp(-1.0 / cf.T) * bracket
    )
    return float(out) if out.ndim == 0 else out


def closed_form(cf: ClosedFormTrail, rule: DepositionRule | Rule, t):
    kind = rule.kind if isinstance(rule, DepositionRule) else Rule(rule)
    if kind is Rule.CONSTANT:
        return closed_form_constant(cf, t)
    return closed_form_exponential(cf, t)


def deposition_signal(cf: ClosedFormTrail, rule: DepositionRule | Rule) -> Callable:
    """Deposit rate as a function of time, vectorised over numpy arrays."""
    kind = rule.kind if isinstance(rule, DepositionRule) else Rule(rule)
    total = cf.deposit_total
    if kind is Rule.CONSTANT:
        return lambda t: np.full_like(np.asarray(t, dtype=float), total)
    T = cf.T
    return lambda t: -total * np.expm1(-np.asarray(t, dtype=float) / T)


def _sample_signal(signal, t):
    try:
        values = signal(t)
    except (TypeError, ValueError):
        values = np.vectorize(signal, otypes=[float])(t)
    return np.broadcast_to(np.asarray(values, dtype=float), t.shape)


def integrate_trail_ode(
    tau0: float,
    rho: float,
    signal: Callable,
    t_end: float,
    dt: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 for ``d tau / dt = -rho tau + signal(t + 1)``.

    Returns ``(times, tau)`` sampled at every multiple of ``dt`` up to
    ``t_end``. ``signal`` should accept numpy arrays; scalar-only callables
    are vectorised.

    The right-hand side is linear in ``tau``, so each RK4 step collapses to

        y+ = P y + (dt/6) [c_a s(t) + c_b s(t + dt/2) + s(t + dt)]

    with ``z = rho dt``, ``P = 1 - z + z^2/2 - z^3/6 + z^4/24``,
    ``c_a = 1 - z + z^2/2 - z^3/4`` and ``c_b = 4 - 2z + z^2/2``, which is run
    as a first-order recursive filter.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9, abs_tol=1e-12):
        n_steps = int(math.ceil(t_end / dt))
    times = np.arange(n_steps + 1) * dt

    s_full = _sample_signal(signal, times + 1.0)
    s_half = _sample_signal(signal, times[:-1] + (dt / 2.0 + 1.0))
    for name, vals, ts in (("t", s_full, times), ("t + dt/2", s_half, times[:-1])):
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise FloatingPointError(
                f"non-finite deposition signal {vals[bad[0]]} at {name} = {ts[bad[0]]:g}"
            )

    z = rho * dt
    P = 1.0 - z + z * z / 2.0 - z**3 / 6.0 + z**4 / 24.0
    c_a = 1.0 - z + z * z / 2.0 - z**3 / 4.0
    c_b = 4.0 - 2.0 * z + z * z / 2.0
    forcing = (dt / 6.0) * (c_a * s_full[:-1] + c_b * s_half + s_full[1:])

    tau = np.empty(n_steps + 1)
    tau[0] = tau0
    tau[1:], _ = lfilter([1.0], [1.0, -P], forcing, zi=[P * tau0])
    if not np.all(np.isfinite(tau)):
        raise FloatingPointError("trail integration produced non-finite values")
    return times, tau
