"""Quantum systems, observables, coarse-graining and initialization events.

Conventions
-----------
* ``hbar = 1``; Hamiltonian entries are angular frequencies.
* Projectors are stored at the reference time ``t = 0`` and evolve in the
  Heisenberg picture, ``P_t(f) = U_t^dagger P_0(f) U_t`` with
  ``U_t = exp(-i t H)``.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import (
    CellMismatch,
    DimensionMismatch,
    InvalidObservable,
    InvalidState,
    LengthMismatch,
    NotFineGrained,
    ScheduleError,
    UnknownOutcome,
    WeightSumError,
)
from .linalg import as_matrix, check_hermitian, dagger, degenerate_clusters, eig_hermitian

PROJECTOR_TOL = 1e-10
WEIGHT_TOL = 1e-9
DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """A finite-dimensional system: Hilbert-space dimension plus a constant
    Hermitian Hamiltonian."""

    hamiltonian: np.ndarray

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian)
        if h.shape[0] < 2:
            raise DimensionMismatch("a quantum system needs dimension >= 2")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)

    @classmethod
    def free(cls, dim: int) -> "QuantumSystem":
        return cls(np.zeros((dim, dim), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @cached_property
    def spectrum(self):
        return eig_hermitian(self.hamiltonian)

    def evolution(self, t: float, t_prime: float = 0.0) -> np.ndarray:
        """``U(t, t') = exp(-i (t - t') H)``."""
        vals, vecs = self.spectrum
        return (vecs * np.exp(-1j * (t - t_prime) * vals)) @ dagger(vecs)

    def heisenberg(self, op, t: float) -> np.ndarray:
        """``U_t^dagger op U_t``."""
        if t == 0:
            return np.array(op, dtype=np.complex128)
        u = self.evolution(t)
        return dagger(u) @ op @ u


def evolution(sys: QuantumSystem, t: float, t_prime: float) -> np.ndarray:
    return sys.evolution(t, t_prime)


@dataclass(frozen=True, eq=False)
class Observable:
    """A measuring device: outcome labels with a complete family of
    orthogonal projectors (at reference time zero).

    ``projectors`` is a ``(k, d, d)`` array, ordered like ``outcomes``.
    """

    name: str
    outcomes: tuple
    projectors: np.ndarray

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        if len(set(outcomes)) != len(outcomes):
            raise InvalidObservable(f"{self.name}: outcomes are not distinct")
        projs = np.array([as_matrix(p) for p in self.projectors], dtype=np.complex128)
        if projs.ndim != 3 or len(projs) != len(outcomes) or projs.shape[1] != projs.shape[2]:
            raise InvalidObservable(f"{self.name}: need one square projector per outcome")
        d = projs.shape[1]
        total = np.zeros((d, d), dtype=np.complex128)
        for i, p in enumerate(projs):
            if np.max(np.abs(p - dagger(p))) > PROJECTOR_TOL:
                raise InvalidObservable(f"{self.name}: projector for {outcomes[i]!r} is not Hermitian")
            for j in range(i, len(projs)):
                expected = p if i == j else 0.0
                if np.max(np.abs(p @ projs[j] - expected)) > PROJECTOR_TOL:
                    raise InvalidObservable(
                        f"{self.name}: projectors for {outcomes[i]!r}, {outcomes[j]!r} violate orthogonality"
                    )
            if abs(np.trace(p)) < 0.5:
                raise InvalidObservable(f"{self.name}: projector for {outcomes[i]!r} is zero")
            total += p
        if np.max(np.abs(total - np.eye(d))) > PROJECTOR_TOL:
            raise InvalidObservable(f"{self.name}: projectors do not sum to the identity")
        projs.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def from_projectors(cls, name: str, projectors: Mapping[Hashable, np.ndarray]) -> "Observable":
        return cls(name, tuple(projectors), np.array(list(projectors.values())))

    @classmethod
    def from_basis(cls, name: str, outcomes: Sequence, vectors) -> "Observable":
        """Fine-grained observable: outcome ``outcomes[i]`` projects onto
        column ``i`` of ``vectors``."""
        v = as_matrix(vectors)
        return cls(name, tuple(outcomes), np.array([np.outer(v[:, i], np.conj(v[:, i])) for i in range(v.shape[1])]))

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    @property
    def ranks(self) -> tuple:
        return tuple(int(round(np.trace(p).real)) for p in self.projectors)

    @property
    def fine_grained(self) -> bool:
        return all(abs(np.trace(p).real - 1.0) <= PROJECTOR_TOL for p in self.projectors)

    def index(self, f) -> int:
        try:
            return self.outcomes.index(f)
        except ValueError:
            raise UnknownOutcome(f"{f!r} is not an outcome of {self.name} {self.outcomes}") from None

    def projector(self, f) -> np.ndarray:
        return self.projectors[self.index(f)]

    def matrix(self) -> np.ndarray:
        """The Hermitian operator ``sum_f f P(f)``; needs numeric outcomes."""
        return np.einsum("k,kij->ij", np.array(self.outcomes, dtype=float), self.projectors)

    def evolved(self, sys: QuantumSystem, t: float) -> np.ndarray:
        """All Heisenberg-picture projectors at time ``t`` as a ``(k, d, d)`` array."""
        if sys.dim != self.dim:
            raise DimensionMismatch(f"{self.name} has dimension {self.dim}, system has {sys.dim}")
        if t == 0:
            return np.array(self.projectors)
        u = sys.evolution(t)
        return dagger(u) @ self.projectors @ u

    def __repr__(self):
        return f"Observable({self.name!r}, outcomes={self.outcomes})"


def heisenberg_projector(sys: QuantumSystem, obs: Observable, f, t: float) -> np.ndarray:
    return sys.heisenberg(obs.projector(f), t)


def observable_from_matrix(sys: QuantumSystem, m, name: str = "F", rtol: float = DEGENERACY_RTOL) -> Observable:
    """Spectral observable of a Hermitian matrix.

    Eigenvalues closer than ``rtol * (1 + spread)`` are merged into a single
    outcome whose value is the cluster mean.
    """
    vals, vecs = eig_hermitian(m)
    if vecs.shape[0] != sys.dim:
        raise DimensionMismatch(f"matrix has dimension {vecs.shape[0]}, system has {sys.dim}")
    outcomes, projs = [], []
    for cluster in degenerate_clusters(vals, rtol):
        v = vecs[:, cluster]
        outcomes.append(float(np.mean(vals[cluster])))
        projs.append(v @ dagger(v))
    return Observable(name, tuple(outcomes), np.array(projs))


def synthetic_observable(sys: QuantumSystem, obs: Observable, t: float, name: str = None) -> Observable:
    """The device whose reference-time projectors equal those of ``obs`` deployed at ``t``."""
    return Observable(name or f"{obs.name}@{t:g}", obs.outcomes, obs.evolved(sys, t))


def survival_variance(sys: QuantumSystem, obs: Observable, k, t: float) -> float:
    """Energy variance ``<H^2> - <H>^2`` in the state selected by outcome ``k`` at ``t``.

    This is the coefficient of the quadratic short-time decay of the
    probability to find ``k`` again right after finding it.
    """
    if not obs.fine_grained:
        raise NotFineGrained(f"{obs.name} is not fine-grained")
    p = heisenberg_projector(sys, obs, k, t)
    h = sys.hamiltonian
    mean = np.trace(p @ h).real
    return max(float(np.trace(p @ h @ h).real - mean**2), 0.0)


@dataclass(frozen=True, eq=False)
class Resolution:
    """Partition of the outcomes of ``parent`` into labelled cells."""

    parent: Observable
    cells: Mapping[Hashable, frozenset]

    def __post_init__(self):
        cells = {label: frozenset(members) for label, members in dict(self.cells).items()}
        seen = set()
        for label, members in cells.items():
            if not members:
                raise CellMismatch(f"cell {label!r} is empty")
            unknown = members - set(self.parent.outcomes)
            if unknown:
                raise CellMismatch(f"cell {label!r} has outcomes {sorted(map(repr, unknown))} not in {self.parent.name}")
            if seen & members:
                raise CellMismatch(f"cell {label!r} overlaps another cell")
            seen |= members
        if seen != set(self.parent.outcomes):
            raise CellMismatch("cells do not cover every outcome")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def trivial(cls, obs: Observable) -> "Resolution":
        return cls(obs, {f: {f} for f in obs.outcomes})

    @classmethod
    def full(cls, obs: Observable, label="all") -> "Resolution":
        return cls(obs, {label: set(obs.outcomes)})

    def cell_of(self, f):
        for label, members in self.cells.items():
            if f in members:
                return label
        raise UnknownOutcome(f"{f!r} is not an outcome of {self.parent.name}")

    def then(self, outer: "Resolution") -> "Resolution":
        """Compose with a resolution ``outer`` of the coarse-grained observable."""
        if tuple(outer.parent.outcomes) != tuple(self.cells):
            raise CellMismatch("outer resolution does not partition this resolution's cells")
        return Resolution(
            self.parent,
            {label: frozenset().union(*(self.cells[c] for c in members)) for label, members in outer.cells.items()},
        )


def coarse_grain(obs: Observable, res: Resolution, name: str = None) -> Observable:
    """Observable of the coarse device: one projector per cell, the sum of its members."""
    parent = res.parent
    if parent is not obs and (
        parent.outcomes != obs.outcomes or not np.allclose(parent.projectors, obs.projectors, atol=PROJECTOR_TOL)
    ):
        raise CellMismatch(f"resolution belongs to {parent.name}, not {obs.name}")
    projs = [sum(obs.projector(f) for f in sorted(members, key=obs.index)) for members in res.cells.values()]
    return Observable(name or f"{obs.name}~", tuple(res.cells), np.array(projs))


@dataclass(frozen=True, eq=False)
class InitializationEvent:
    """Initialization at ``time``: the metric ``rho`` (PSD, unit trace).

    ``weights`` lists ``(observable, outcome, p)`` triples with
    fine-grained observables; it is empty when the event was built directly
    from a metric.
    """

    time: float
    metric: np.ndarray
    weights: tuple = field(default=())

    def __post_init__(self):
        rho = np.array(self.metric, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidState("metric must be a square matrix")
        if np.max(np.abs(rho - dagger(rho))) > 1e-10:
            raise InvalidState("metric is not Hermitian")
        rho = 0.5 * (rho + dagger(rho))
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise InvalidState(f"metric has trace {np.trace(rho).real:.12g}, expected 1")
        lam = float(np.linalg.eigvalsh(rho)[0])
        if lam < -1e-10:
            raise InvalidState(f"metric is not PSD (min eigenvalue {lam:.3e})")
        rho.setflags(write=False)
        object.__setattr__(self, "metric", rho)
        object.__setattr__(self, "weights", tuple(self.weights))

    @property
    def dim(self) -> int:
        return self.metric.shape[0]

    def shifted(self, sys: QuantumSystem, s: float) -> "InitializationEvent":
        """The same preparation carried out ``s`` later."""
        if self.weights:
            return initialize(sys, self.weights, self.time + s)
        u = sys.evolution(s)
        return InitializationEvent(self.time + s, dagger(u) @ self.metric @ u)


def initialize(sys: QuantumSystem, weights: Sequence, time: float = 0.0) -> InitializationEvent:
    """Build the metric ``sum p P^K_{t0}(k)`` from fine-grained preparations."""
    weights = tuple((obs, k, float(p)) for obs, k, p in weights)
    if not weights:
        raise WeightSumError("no initialization weights given")
    total = 0.0
    rho = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    for obs, k, p in weights:
        if not obs.fine_grained:
            raise NotFineGrained(f"initializing device {obs.name} is not fine-grained")
        if p < 0:
            raise WeightSumError(f"negative weight {p} for {obs.name}={k!r}")
        rho += p * heisenberg_projector(sys, obs, k, time)
        total += p
    if abs(total - 1.0) > WEIGHT_TOL:
        raise WeightSumError(f"weights sum to {total:.12g}, expected 1")
    return InitializationEvent(time, rho / total, weights)


def pure_initialization(sys: QuantumSystem, obs: Observable, k, time: float = 0.0) -> InitializationEvent:
    return initialize(sys, [(obs, k, 1.0)], time)


@dataclass(frozen=True, eq=False)
class MeasurementSchedule:
    """Deployment plan: initialization time ``t0`` and chronologically
    ordered ``(time, observable)`` entries with ``t0 < t1 < ... < tn``."""

    t0: float
    entries: tuple

    def __post_init__(self):
        entries = tuple((float(t), obs) for t, obs in self.entries)
        last = float(self.t0)
        dims = {obs.dim for _, obs in entries}
        if len(dims) > 1:
            raise DimensionMismatch(f"observables of different dimensions {sorted(dims)} in one schedule")
        for t, _ in entries:
            if not t > last:
                raise ScheduleError(f"deployment times must increase strictly from t0={self.t0}: got {t} after {last}")
            last = t
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "entries", entries)

    @classmethod
    def repeated(cls, obs: Observable, times: Sequence[float], t0: float = 0.0) -> "MeasurementSchedule":
        return cls(t0, tuple((t, obs) for t in times))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def times(self) -> tuple:
        return tuple(t for t, _ in self.entries)

    @property
    def observables(self) -> tuple:
        return tuple(obs for _, obs in self.entries)

    @property
    def shape(self) -> tuple:
        return tuple(len(obs.outcomes) for obs in self.observables)

    def without(self, j: int) -> "MeasurementSchedule":
        """Drop the ``j``-th deployment (1-based, chronological)."""
        return MeasurementSchedule(self.t0, self.entries[: j - 1] + self.entries[j:])

    def truncated(self, j: int) -> "MeasurementSchedule":
        """Keep only the first ``j`` deployments."""
        return MeasurementSchedule(self.t0, self.entries[:j])

    def replaced(self, j: int, obs: Observable) -> "MeasurementSchedule":
        entries = list(self.entries)
        entries[j - 1] = (entries[j - 1][0], obs)
        return MeasurementSchedule(self.t0, tuple(entries))

    def extended(self, t: float, obs: Observable) -> "MeasurementSchedule":
        return MeasurementSchedule(self.t0, self.entries + ((t, obs),))

    def shifted(self, s: float) -> "MeasurementSchedule":
        return MeasurementSchedule(self.t0 + s, tuple((t + s, obs) for t, obs in self.entries))

    def outcome_indices(self, seq: Sequence) -> tuple:
        """Map a chronological outcome sequence to per-position indices."""
        if len(seq) != self.n:
            raise LengthMismatch(f"sequence of length {len(seq)} for a schedule of {self.n} deployments")
        return tuple(obs.index(f) for obs, f in zip(self.observables, seq))
