"""Bi-probability distributions of measurement schedules.

For a schedule ``(t_1, F_1), ..., (t_n, F_n)`` and initialization metric
``rho`` the bi-probability of a pair of outcome sequences is

    Q(f+, f-) = tr[ P_n(f_n+) ... P_1(f_1+) rho P_1(f_1-) ... P_n(f_n-) ]

with Heisenberg-picture projectors ``P_j = P^{F_j}_{t_j}``.  Its diagonal is
the probability of the sequence; off-diagonal entries carry interference.

Outcome sequences are always chronological, ``(f_1, ..., f_n)``, matching
the order of ``schedule.entries``.
"""
import csv
import io
import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EnumerationCapExceeded,
    NotPSD,
    PositionOutOfRange,
    ScheduleError,
    ZeroConditioningEvent,
)
from .linalg import FORWARD, REVERSE, dagger, ordered_product
from .system import InitializationEvent, MeasurementSchedule, QuantumSystem, Resolution, coarse_grain

ENUMERATION_CAP = 10**6
CONDITIONAL_FLOOR = 1e-14
PSD_TOL = 1e-10
RANK_TOL = 1e-10


def _check_compatible(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule):
    if init.dim != sys.dim:
        raise DimensionMismatch(f"metric has dimension {init.dim}, system has {sys.dim}")
    if schedule.n and schedule.observables[0].dim != sys.dim:
        raise DimensionMismatch(f"schedule observables have dimension {schedule.observables[0].dim}, system has {sys.dim}")
    if abs(schedule.t0 - init.time) > 1e-12:
        raise ScheduleError(f"schedule starts at t0={schedule.t0} but initialization happens at {init.time}")


def _projectors(sys, schedule, seq) -> list:
    idx = schedule.outcome_indices(seq)
    return [obs.evolved(sys, t)[i] for (t, obs), i in zip(schedule.entries, idx)]


def branch_operators(sys: QuantumSystem, schedule: MeasurementSchedule) -> np.ndarray:
    """Products ``P_n(f_n) ... P_1(f_1)`` for every outcome sequence.

    Returns an ``(N, d, d)`` array; sequence index order is C-order over the
    chronological index tuple ``(i_1, ..., i_n)``.
    """
    ops = np.eye(sys.dim, dtype=np.complex128)[None]
    for t, obs in schedule.entries:
        projs = obs.evolved(sys, t)
        ops = np.einsum("kij,ajl->akil", projs, ops).reshape(-1, sys.dim, sys.dim)
    return ops


def _count_pairs(shape) -> int:
    if not shape:
        return 1
    n = math.prod(shape)
    return n * n // shape[-1]


def biprob_matrix(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                  enforce_causality: bool = True) -> np.ndarray:
    """Dense ``N x N`` bi-probability matrix over all sequence pairs, in the
    sequence order of :func:`branch_operators`."""
    _check_compatible(sys, init, schedule)
    ops = branch_operators(sys, schedule)
    left = ops @ init.metric
    m = np.einsum("aij,bij->ab", left, ops.conj())
    if enforce_causality and schedule.n:
        last = np.arange(len(ops)) % schedule.shape[-1]
        m[last[:, None] != last[None, :]] = 0.0
    return m


def biprob(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
           f_plus: Sequence, f_minus: Sequence) -> complex:
    """Bi-probability ``Q(f+, f-)`` of two chronological outcome sequences."""
    _check_compatible(sys, init, schedule)
    plus = _projectors(sys, schedule, f_plus)
    minus = _projectors(sys, schedule, f_minus)
    if schedule.n and schedule.outcome_indices(f_plus)[-1] != schedule.outcome_indices(f_minus)[-1]:
        return 0j
    left = ordered_product(plus, REVERSE, dim=sys.dim)
    right = ordered_product(minus, FORWARD, dim=sys.dim)
    return complex(np.trace(left @ init.metric @ right))


def probability(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                f: Sequence) -> float:
    q = biprob(sys, init, schedule, f, f)
    if abs(q.imag) > 1e-12:
        raise ArithmeticError(f"diagonal bi-probability has imaginary part {q.imag:.3e}")
    return q.real


def probabilities(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule) -> np.ndarray:
    """All sequence probabilities as a real array of shape ``schedule.shape``."""
    _check_compatible(sys, init, schedule)
    ops = branch_operators(sys, schedule)
    p = np.einsum("aij,jk,aik->a", ops, init.metric, ops.conj()).real
    return p.reshape(schedule.shape)


def pseudo_metric(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                  f: Sequence) -> np.ndarray:
    """Non-normalized metric ``P_n ... P_1 rho P_1 ... P_n`` left after observing ``f``."""
    _check_compatible(sys, init, schedule)
    a = ordered_product(_projectors(sys, schedule, f), REVERSE, dim=sys.dim)
    return a @ init.metric @ dagger(a)


def effect_operator(sys: QuantumSystem, schedule: MeasurementSchedule, f: Sequence) -> np.ndarray:
    """``E(f) = A^dagger A`` with ``A = P_n(f_n) ... P_1(f_1)``.

    For non-commuting sequences this is not a projector.
    """
    a = ordered_product(_projectors(sys, schedule, f), REVERSE, dim=sys.dim)
    return dagger(a) @ a


def conditional(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                f_prefix: Sequence, next_time: float, next_obs, f_next,
                floor: float = CONDITIONAL_FLOOR) -> float:
    """Probability of ``f_next`` at ``next_time`` given the observed prefix."""
    p_prefix = probability(sys, init, schedule, f_prefix)
    if p_prefix <= floor:
        raise ZeroConditioningEvent(f"conditioning sequence {tuple(f_prefix)} has probability {p_prefix:.3e}")
    joint = probability(sys, init, schedule.extended(next_time, next_obs), tuple(f_prefix) + (f_next,))
    return joint / p_prefix


@dataclass(frozen=True, eq=False)
class BiProbabilityTable:
    """Bi-probability over all sequence pairs of a schedule.

    ``values`` maps ``(plus_indices, minus_indices)`` to a complex number;
    index tuples are chronological positions into each observable's
    outcome list.  Pairs whose final outcomes differ vanish identically and
    are not stored.
    """

    system: QuantumSystem
    init: InitializationEvent
    schedule: MeasurementSchedule
    sequences: tuple
    values: dict

    @property
    def shape(self) -> tuple:
        return self.schedule.shape

    def __len__(self):
        return len(self.values)

    def __getitem__(self, key) -> complex:
        f_plus, f_minus = key
        k = (self.schedule.outcome_indices(f_plus), self.schedule.outcome_indices(f_minus))
        return self.values.get(k, 0j)

    def outcomes(self, indices) -> tuple:
        return tuple(obs.outcomes[i] for obs, i in zip(self.schedule.observables, indices))

    def total(self) -> complex:
        return complex(math.fsum(v.real for v in self.values.values()), math.fsum(v.imag for v in self.values.values()))

    def dense(self) -> np.ndarray:
        """``N x N`` matrix over ``sequences`` with explicit zeros for the
        causality-violating pairs."""
        pos = {s: i for i, s in enumerate(self.sequences)}
        m = np.zeros((len(self.sequences),) * 2, dtype=np.complex128)
        for (a, b), v in self.values.items():
            m[pos[a], pos[b]] = v
        return m

    def tensor(self) -> np.ndarray:
        """Dense values reshaped to ``shape + shape`` (plus axes first)."""
        return self.dense().reshape(self.shape + self.shape)

    def diagonal(self) -> np.ndarray:
        return np.array([self.values[(s, s)] for s in self.sequences])

    def to_csv(self, fh=None) -> Optional[str]:
        """Write one row per stored pair, outcomes latest-first.

        Columns: ``f_plus_n..f_plus_1, f_minus_n..f_minus_1, re, im``.
        Returns the text when ``fh`` is ``None``.
        """
        n = self.schedule.n
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            [f"f_plus_{j}" for j in range(n, 0, -1)] + [f"f_minus_{j}" for j in range(n, 0, -1)] + ["re", "im"]
        )
        for (a, b), v in self.values.items():
            plus, minus = self.outcomes(a)[::-1], self.outcomes(b)[::-1]
            writer.writerow([*map(str, plus), *map(str, minus), repr(float(v.real)), repr(float(v.imag))])
        if fh is None:
            return out.getvalue()
        return None


def read_table_csv(fh) -> dict:
    """Parse a table CSV into ``{(plus, minus): complex}`` with chronological
    tuples of outcome strings."""
    reader = csv.reader(fh)
    header = next(reader)
    n = (len(header) - 2) // 2
    if header[-2:] != ["re", "im"] or len(header) != 2 * n + 2:
        raise ValueError(f"unexpected table header {header}")
    table = {}
    for row in reader:
        plus = tuple(row[:n][::-1])
        minus = tuple(row[n:2 * n][::-1])
        table[(plus, minus)] = complex(float(row[-2]), float(row[-1]))
    return table


def full_table(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
               cap: int = ENUMERATION_CAP) -> BiProbabilityTable:
    """Enumerate every non-vanishing bi-probability of the schedule."""
    pairs = _count_pairs(schedule.shape)
    if pairs > cap:
        raise EnumerationCapExceeded(f"{pairs} stored pairs exceed the cap of {cap}")
    m = biprob_matrix(sys, init, schedule)
    seqs = tuple(product(*(range(k) for k in schedule.shape)))
    values = {}
    for a, sa in enumerate(seqs):
        for b, sb in enumerate(seqs):
            if not schedule.n or sa[-1] == sb[-1]:
                values[(sa, sb)] = complex(m[a, b])
    return BiProbabilityTable(sys, init, schedule, seqs, values)


@dataclass(frozen=True, eq=False)
class GudderMetric:
    """Gram operator of a bi-probability over the sequence-indexed basis.

    ``null_basis`` spans the vectors of zero norm; quotienting them out turns
    the positive semi-definite form into a proper inner product.
    """

    basis_index: tuple
    gram: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    null_basis: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.gram))

    def inner(self, psi, phi) -> complex:
        return complex(np.conj(psi) @ self.gram @ phi)


def check_positivity(table: BiProbabilityTable, psd_tol: float = PSD_TOL, rank_tol: float = RANK_TOL) -> GudderMetric:
    """Assemble the Gram operator and certify it is PSD with unit trace."""
    gram = table.dense()
    herm = 0.5 * (gram + dagger(gram))
    vals, vecs = np.linalg.eigh(herm)
    if vals[0] < -psd_tol:
        raise NotPSD(vals[0])
    if abs(np.trace(gram) - 1.0) > 1e-10:
        raise NotPSD(vals[0]) if vals[0] < 0 else ValueError(f"Gram trace {np.trace(gram):.12g} != 1")
    null = vecs[:, vals <= rank_tol]
    return GudderMetric(table.sequences, gram, vals, int(np.sum(vals > rank_tol)), null)


def check_normalization(table: BiProbabilityTable) -> float:
    return abs(table.total() - 1.0)


def check_hermitian_pairing(table: BiProbabilityTable) -> float:
    return max(abs(v - np.conj(table.values[(b, a)])) for (a, b), v in table.values.items())


def check_measurement_link(table: BiProbabilityTable) -> float:
    """Diagonal versus independently computed sequence probabilities."""
    dev = 0.0
    for s in table.sequences:
        q = table.values[(s, s)]
        p = probability(table.system, table.init, table.schedule, table.outcomes(s))
        dev = max(dev, abs(q - p), -min(q.real, 0.0))
    return dev


def causality_residual(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule) -> float:
    """Largest magnitude among the pairs with differing final outcomes,
    computed without the structural zero."""
    if not schedule.n:
        return 0.0
    m = biprob_matrix(sys, init, schedule, enforce_causality=False)
    last = np.arange(m.shape[0]) % schedule.shape[-1]
    mask = last[:, None] != last[None, :]
    return float(np.max(np.abs(m[mask]))) if mask.any() else 0.0


def check_bi_consistency(table: BiProbabilityTable, j: int) -> float:
    """Marginalize position ``j`` (1-based, ``j < n``) on both branches and
    compare with the table of the schedule without that deployment."""
    n = table.schedule.n
    if not 1 <= j < n:
        raise PositionOutOfRange(f"position {j} not in 1..{n - 1}")
    marg = table.tensor().sum(axis=(j - 1, n + j - 1))
    shorter = full_table(table.system, table.init, table.schedule.without(j)).tensor()
    return float(np.max(np.abs(marg - shorter)))


def _cell_indicator(res: Optional[Resolution], obs) -> np.ndarray:
    if res is None:
        return np.eye(len(obs.outcomes))
    c = np.zeros((len(res.cells), len(obs.outcomes)))
    for r, members in enumerate(res.cells.values()):
        for f in members:
            c[r, obs.index(f)] = 1.0
    return c


def check_additivity(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                     resolutions: Sequence[Optional[Resolution]]) -> float:
    """Coarse-device bi-probabilities versus cell sums of the fine ones."""
    if len(resolutions) != schedule.n:
        raise ValueError(f"{len(resolutions)} resolutions for {schedule.n} deployments")
    coarse = schedule
    for j, res in enumerate(resolutions, start=1):
        if res is not None:
            coarse = coarse.replaced(j, coarse_grain(schedule.observables[j - 1], res))
    fine = full_table(sys, init, schedule).dense()
    direct = full_table(sys, init, coarse).dense()
    k = np.ones((1, 1))
    for res, obs in zip(resolutions, schedule.observables):
        k = np.kron(k, _cell_indicator(res, obs))
    summed = k @ fine @ k.T
    return float(np.max(np.abs(summed - direct)))


def check_stationarity(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                       s: float) -> float:
    """Shift the preparation and every deployment by ``s``; with a constant
    Hamiltonian the bi-probabilities must not change."""
    moved = biprob_matrix(sys, init.shifted(sys, s), schedule.shifted(s))
    return float(np.max(np.abs(moved - biprob_matrix(sys, init, schedule))))
