"""Numerical experiments for the qualitative features of sequential quantum
measurements: causality, failure of classical consistency, Markov chains
of fine-grained devices, uncertainty, the Zeno effect and the placement
dependence of coarse-graining.

Equality-type experiments pass when the deviation stays below the
threshold; violation-type witnesses pass when it exceeds the threshold.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .biprob import conditional, probabilities
from .errors import InvalidState, NotFineGrained, PositionOutOfRange, ScheduleError
from .system import (
    InitializationEvent,
    MeasurementSchedule,
    Observable,
    QuantumSystem,
    Resolution,
    coarse_grain,
    pure_initialization,
    synthetic_observable,
)

EQUALITY = "equality"
VIOLATION = "violation"
EQUALITY_TOL = 1e-10
VIOLATION_TOL = 0.01


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    deviation: float
    threshold: float
    type: str = EQUALITY
    witness: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if self.type not in (EQUALITY, VIOLATION):
            raise ValueError(f"unknown experiment type {self.type!r}")

    @property
    def passed(self) -> bool:
        if self.type == EQUALITY:
            return bool(self.deviation <= self.threshold)
        return bool(self.deviation >= self.threshold)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "deviation": float(self.deviation),
            "threshold": float(self.threshold),
            "type": self.type,
            "passed": self.passed,
        }


def _max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def causality_experiment(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                         threshold: float = EQUALITY_TOL) -> ExperimentReport:
    """Summing out the latest outcome reproduces the shorter schedule."""
    if schedule.n < 2:
        raise ScheduleError("causality experiment needs at least two deployments")
    full = probabilities(sys, init, schedule)
    shorter = probabilities(sys, init, schedule.truncated(schedule.n - 1))
    return ExperimentReport("causality", _max_abs(full.sum(axis=-1) - shorter), threshold)


def inconsistency_witness(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule, j: int,
                          threshold: float = VIOLATION_TOL) -> ExperimentReport:
    """Summing out an interior outcome versus never deploying that device."""
    if not 1 <= j < schedule.n:
        raise PositionOutOfRange(f"position {j} not in 1..{schedule.n - 1}")
    full = probabilities(sys, init, schedule)
    without = probabilities(sys, init, schedule.without(j))
    dev = _max_abs(full.sum(axis=j - 1) - without)
    return ExperimentReport("inconsistency", dev, threshold, VIOLATION)


def _transition(a: np.ndarray, b: np.ndarray) -> float:
    # rank-1 projectors: tr(P_a P_b) = |<a|b>|^2
    return float(np.einsum("ij,ji->", a, b).real)


def markov_chain_probabilities(sys: QuantumSystem, init: InitializationEvent,
                               schedule: MeasurementSchedule) -> np.ndarray:
    """Sequence probabilities as products of pairwise transition factors."""
    if not init.weights:
        raise InvalidState("initialization was not built from fine-grained preparations")
    for obs in schedule.observables:
        if not obs.fine_grained:
            raise NotFineGrained(f"{obs.name} is not fine-grained")
    evolved = [obs.evolved(sys, t) for t, obs in schedule.entries]
    out = np.zeros(schedule.shape)
    for idx in np.ndindex(*schedule.shape):
        chain = 1.0
        for j in range(1, len(idx)):
            chain *= _transition(evolved[j][idx[j]], evolved[j - 1][idx[j - 1]])
        start = 0.0
        for obs, k, p in init.weights:
            p0 = obs.evolved(sys, init.time)[obs.index(k)]
            start += p * (_transition(evolved[0][idx[0]], p0) if idx else 1.0)
        out[idx] = start * chain
    return out


def markov_experiment(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                      threshold: float = EQUALITY_TOL) -> ExperimentReport:
    """Joint probabilities of fine-grained devices versus the Markov chain of
    transition probabilities."""
    chain = markov_chain_probabilities(sys, init, schedule)
    return ExperimentReport("markov", _max_abs(probabilities(sys, init, schedule) - chain), threshold)


def uncertainty_correlation(sys: QuantumSystem, k_obs: Observable, l_obs: Observable, t: float) -> np.ndarray:
    """``C[k, l] = |<Psi^K_t(k)|Psi^L_t(l)>|^2`` for two fine-grained devices."""
    for obs in (k_obs, l_obs):
        if not obs.fine_grained:
            raise NotFineGrained(f"{obs.name} is not fine-grained")
    a, b = k_obs.evolved(sys, t), l_obs.evolved(sys, t)
    return np.einsum("kij,lji->kl", a, b).real


def zeno_experiment(sys: QuantumSystem, k_obs: Observable, k0, total_t: float, n: int) -> float:
    """Survival probability of ``k0`` under ``n`` equally spaced re-checks."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not k_obs.fine_grained:
        raise NotFineGrained(f"{k_obs.name} is not fine-grained")
    dt = total_t / n
    out = 1.0
    for j in range(n):
        s = j * dt
        init = pure_initialization(sys, k_obs, k0, s)
        out *= conditional(sys, init, MeasurementSchedule(s, ()), (), s + dt, k_obs, k0)
    return out


def zeno_report(sys: QuantumSystem, k_obs: Observable, k0, total_t: float, ns=(1, 2, 4, 8, 16, 32, 64, 128, 256),
                threshold: float = EQUALITY_TOL) -> ExperimentReport:
    """Largest drop of the survival probability along increasing ``ns``."""
    values = [zeno_experiment(sys, k_obs, k0, total_t, n) for n in ns]
    drop = max([0.0] + [a - b for a, b in zip(values, values[1:])])
    return ExperimentReport("zeno_monotone", drop, threshold, witness={"n": list(ns), "survival": values})


def _placement_deviation(sys, init, schedule, j, res) -> float:
    obs = schedule.observables[j - 1]
    coarse = probabilities(sys, init, schedule.replaced(j, coarse_grain(obs, res)))
    fine = probabilities(sys, init, schedule)
    ind = np.zeros((len(res.cells), len(obs.outcomes)))
    for r, members in enumerate(res.cells.values()):
        for f in members:
            ind[r, obs.index(f)] = 1.0
    summed = np.moveaxis(np.tensordot(ind, fine, axes=([1], [j - 1])), 0, j - 1)
    return _max_abs(summed - coarse)


def coarse_grain_placement_experiment(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                                      j: int, res: Resolution) -> tuple:
    """Coarse-graining the device at position ``j`` (1-based).

    Returns ``(terminal_dev, interior_dev)``: the deviation between the
    coarse device and cell sums of the fine device, first with the schedule
    cut after position ``j`` (so the device is last) and then within the
    full schedule.
    """
    if not 1 <= j <= schedule.n:
        raise PositionOutOfRange(f"position {j} not in 1..{schedule.n}")
    terminal = _placement_deviation(sys, init, schedule.truncated(j), j, res)
    interior = _placement_deviation(sys, init, schedule, j, res)
    return terminal, interior


def statics_equivalence(sys: QuantumSystem, init: InitializationEvent, k_obs: Observable, t: float,
                        threshold: float = 1e-12) -> ExperimentReport:
    """Reading ``K`` at ``t`` versus reading, right after initialization, a
    device whose projectors are those of ``K`` carried forward by ``t - t0``."""
    if not t > init.time:
        raise ScheduleError(f"readout time {t} must follow the initialization at {init.time}")
    timed = probabilities(sys, init, MeasurementSchedule(init.time, ((t, k_obs),)))
    static = synthetic_observable(sys, k_obs, t - init.time)
    # same-time readout, exact limit
    instant = np.einsum("kij,ji->k", static.evolved(sys, init.time), init.metric).real
    return ExperimentReport("statics", _max_abs(timed - instant), threshold)


def short_time_decay(sys: QuantumSystem, k_obs: Observable, k0, t: float, dt: float) -> float:
    """Finite-difference ``(1 - P(k0 at t+dt | k0 at t)) / dt^2``; tends to
    the energy variance of the selected state as ``dt -> 0``."""
    init = pure_initialization(sys, k_obs, k0, t)
    p = conditional(sys, init, MeasurementSchedule(t, ()), (), t + dt, k_obs, k0)
    return (1.0 - p) / dt**2
