"""Observer-independent layer: Lie-generator coordinates for fine-grained
frames and the system bi-probabilities they label.

A coordinate ``tau = (t, phi)`` selects the rank-1 projectors

    P_tau(eta) = e^{iHt} e^{i T.phi} |eta><eta| e^{-i T.phi} e^{-iHt}

for ``eta = 0..d-1`` (indices are 0-based).  Every observable is recovered
by grouping these projectors with an index map ``eta -> f(eta)``.
"""
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
import scipy.linalg

from .biprob import biprob, full_table, probabilities
from .composite import check_split, ordered_moment
from .errors import BadDimension, DegenerateGaugeWarning, IndexOutOfRange, LengthMismatch
from .linalg import dagger, expm_hermitian_phase
from .system import InitializationEvent, MeasurementSchedule, Observable, QuantumSystem, observable_from_matrix

ROUND_TRIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    """Generalized Gell-Mann matrices with ``tr(T_l T_m) = 2 delta_lm``.

    Order: for each pair ``j < k`` (lexicographic) the symmetric then the
    antisymmetric generator, followed by the ``d - 1`` diagonal ones.
    """

    dim: int
    generators: np.ndarray

    def __len__(self):
        return len(self.generators)

    def combine(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (len(self),):
            raise LengthMismatch(f"expected {len(self)} coordinates, got shape {phi.shape}")
        return np.einsum("l,lij->ij", phi, self.generators)

    def coordinates(self, g) -> np.ndarray:
        """``phi_l = tr(T_l G) / 2``; drops the trace part of ``G``."""
        return np.einsum("lij,ji->l", self.generators, g).real / 2.0


@lru_cache(maxsize=None)
def generator_basis(d: int) -> GeneratorBasis:
    if d < 2:
        raise BadDimension(f"generator basis needs d >= 2, got {d}")
    gens = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=np.complex128)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), dtype=np.complex128)
            a[j, k], a[k, j] = -1j, 1j
            gens += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(np.complex128))
    gens = np.array(gens)
    gens.setflags(write=False)
    return GeneratorBasis(d, gens)


@dataclass(frozen=True)
class SpaceTimeCoordinate:
    t: float
    phi: tuple

    def __post_init__(self):
        phi = tuple(float(x) for x in np.ravel(self.phi))
        if not all(np.isfinite(phi)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "t", float(self.t))


def coords_to_unitary(basis: GeneratorBasis, phi) -> np.ndarray:
    """``exp(i T.phi)``."""
    return expm_hermitian_phase(basis.combine(phi), -1.0)


def frame_projectors(sys: QuantumSystem, coord: SpaceTimeCoordinate) -> np.ndarray:
    """All ``P_tau(eta)`` as a ``(d, d, d)`` array."""
    w = coords_to_unitary(generator_basis(sys.dim), coord.phi)
    ref = np.array([np.outer(w[:, e], np.conj(w[:, e])) for e in range(sys.dim)])
    return sys.heisenberg(ref, coord.t) if coord.t != 0 else ref


@dataclass(frozen=True)
class CoordinateObservable:
    """A frame coordinate plus the outcome carried by each reference index."""

    coord: SpaceTimeCoordinate
    index_map: tuple

    def outcome(self, eta: int):
        return self.index_map[eta]

    def members(self, f) -> list:
        return [e for e, g in enumerate(self.index_map) if g == f]

    def projector(self, basis: GeneratorBasis, f) -> np.ndarray:
        w = coords_to_unitary(basis, self.coord.phi)
        cols = w[:, self.members(f)]
        return cols @ dagger(cols)


def _range_basis(p: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (p + dagger(p)))
    return vecs[:, vals > 0.5]


def observable_to_coords(basis: GeneratorBasis, obs: Observable, t: float = 0.0) -> CoordinateObservable:
    """Coordinates of a frame diagonalizing ``obs``.

    Outcomes are taken in ascending order when numeric (otherwise in the
    observable's order); each claims a consecutive block of reference
    indices sized by its rank.  With degenerate outcomes the frame is not
    unique and :class:`DegenerateGaugeWarning` is issued.
    """
    if obs.dim != basis.dim:
        raise BadDimension(f"{obs.name} has dimension {obs.dim}, basis has {basis.dim}")
    order = list(range(len(obs.outcomes)))
    try:
        order.sort(key=lambda i: float(obs.outcomes[i]))
    except (TypeError, ValueError):
        pass
    cols, index_map = [], []
    for i in order:
        v = _range_basis(obs.projectors[i])
        cols.append(v)
        index_map += [obs.outcomes[i]] * v.shape[1]
    if any(r > 1 for r in obs.ranks):
        warnings.warn(f"{obs.name} has degenerate outcomes; frame coordinates are not unique",
                      DegenerateGaugeWarning, stacklevel=2)
    w = np.hstack(cols)
    d = basis.dim
    w = w * np.exp(-1j * np.angle(np.linalg.det(w)) / d)
    tri, z = scipy.linalg.schur(w, output="complex")
    g = z @ np.diag(np.angle(np.diag(tri))) @ dagger(z)
    g = 0.5 * (g + dagger(g))
    return CoordinateObservable(SpaceTimeCoordinate(t, basis.coordinates(g)), tuple(index_map))


def round_trip_residual(basis: GeneratorBasis, obs: Observable, cobs: CoordinateObservable) -> float:
    return max(float(np.max(np.abs(cobs.projector(basis, f) - p))) for f, p in zip(obs.outcomes, obs.projectors))


def _frame_branches(sys: QuantumSystem, coords: Sequence[SpaceTimeCoordinate]) -> np.ndarray:
    """``P_{tau_n}(eta_n) ... P_{tau_0}(eta_0)`` for all index sequences,
    C-ordered over ``(eta_0, ..., eta_n)``."""
    d = sys.dim
    ops = np.eye(d, dtype=np.complex128)[None]
    for c in coords:
        ops = np.einsum("kij,ajl->akil", frame_projectors(sys, c), ops).reshape(-1, d, d)
    return ops


def system_biprob_matrix(sys: QuantumSystem, coords: Sequence[SpaceTimeCoordinate]) -> np.ndarray:
    """Every system bi-probability as a ``d^(n+1)`` square matrix over
    ``(eta_0, ..., eta_n)`` on each branch."""
    ops = _frame_branches(sys, coords)
    return np.einsum("aij,bij->ab", ops, ops.conj())


def system_biprob(sys: QuantumSystem, coords: Sequence[SpaceTimeCoordinate], eta_plus: Sequence[int],
                  eta_minus: Sequence[int], eta0_plus: int, eta0_minus: int) -> complex:
    """``tr[(P_{tau_n}(eta_n+) ... P_{tau_0}(eta_0+)) (P_{tau_0}(eta_0-) ... P_{tau_n}(eta_n-))]``.

    ``coords[0]`` is the initial coordinate ``tau_0``; ``eta_plus`` and
    ``eta_minus`` are chronological over ``coords[1:]``.
    """
    n = len(coords) - 1
    if len(eta_plus) != n or len(eta_minus) != n:
        raise LengthMismatch(f"index sequences must have length {n}")
    seq_plus = (eta0_plus, *eta_plus)
    seq_minus = (eta0_minus, *eta_minus)
    for e in seq_plus + seq_minus:
        if not 0 <= e < sys.dim:
            raise IndexOutOfRange(f"index {e} not in 0..{sys.dim - 1}")
    frames = [frame_projectors(sys, c) for c in coords]
    left = np.eye(sys.dim, dtype=np.complex128)
    right = np.eye(sys.dim, dtype=np.complex128)
    for f, ep, em in zip(frames, seq_plus, seq_minus):
        left = f[ep] @ left
        right = right @ f[em]
    return complex(np.trace(left @ right))


def _initial_frame(sys: QuantumSystem, init: InitializationEvent):
    """Coordinate at time 0 diagonalizing the metric, with eigenvalue weights."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGaugeWarning)
        rho_obs = observable_from_matrix(sys, init.metric, name="rho")
        cobs = observable_to_coords(generator_basis(sys.dim), rho_obs)
    return cobs.coord, np.array(cobs.index_map, dtype=float)


def _schedule_frames(sys: QuantumSystem, schedule: MeasurementSchedule) -> list:
    basis = generator_basis(sys.dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGaugeWarning)
        return [observable_to_coords(basis, obs, t) for t, obs in schedule.entries]


def decomposed_biprob(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                      f_plus: Sequence, f_minus: Sequence) -> complex:
    """The bi-probability rebuilt as a weighted sum of system bi-probabilities."""
    schedule.outcome_indices(f_plus), schedule.outcome_indices(f_minus)
    tau0, rho_w = _initial_frame(sys, init)
    frames = _schedule_frames(sys, schedule)
    q = system_biprob_matrix(sys, [tau0] + [c.coord for c in frames])
    d = sys.dim
    seqs = list(product(range(d), repeat=schedule.n + 1))
    sel_plus = np.array([all(c.outcome(e) == f for c, e, f in zip(frames, s[1:], f_plus)) for s in seqs])
    sel_minus = np.array([all(c.outcome(e) == f for c, e, f in zip(frames, s[1:], f_minus)) for s in seqs])
    eta0 = np.array([s[0] for s in seqs])
    total = 0j
    for e0 in range(d):
        rows = sel_plus & (eta0 == e0)
        cols = sel_minus & (eta0 == e0)
        total += rho_w[e0] * q[np.ix_(rows, cols)].sum()
    return complex(total)


def decomposition_check(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule,
                        f_plus: Sequence, f_minus: Sequence) -> float:
    return abs(biprob(sys, init, schedule, f_plus, f_minus) - decomposed_biprob(sys, init, schedule, f_plus, f_minus))


def multitime_correlation(sys: QuantumSystem, init: InitializationEvent, times: Sequence[float], ops: Sequence,
                          i_plus, i_minus) -> complex:
    """``tr[T{prod_{I+} F_j(t_j)} rho (T{prod_{I-} F_k(t_k)})^dagger]`` (positions 1-based)."""
    if any(not b > a for a, b in zip(times, times[1:])):
        raise ValueError("times must increase strictly")
    return ordered_moment(sys, init, times, ops, i_plus, i_minus)


def multitime_moments(sys: QuantumSystem, init: InitializationEvent, times: Sequence[float], ops: Sequence,
                      i_plus, i_minus) -> complex:
    """The same correlation as an eigenvalue-weighted sum of system bi-probabilities."""
    n = len(times)
    i_plus, i_minus = check_split(n, i_plus, i_minus)
    basis = generator_basis(sys.dim)
    frames = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGaugeWarning)
        for t, f in zip(times, ops):
            frames.append(observable_to_coords(basis, observable_from_matrix(sys, f), t))
    tau0, rho_w = _initial_frame(sys, init)
    q = system_biprob_matrix(sys, [tau0] + [c.coord for c in frames])
    d = sys.dim
    seqs = list(product(range(d), repeat=n + 1))
    w_plus = np.array([np.prod([frames[j - 1].outcome(s[j]) for j in i_plus]) for s in seqs])
    w_minus = np.array([np.prod([frames[k - 1].outcome(s[k]) for k in i_minus]) for s in seqs])
    eta0 = np.array([s[0] for s in seqs])
    same0 = eta0[:, None] == eta0[None, :]
    weights = np.outer(w_plus, w_minus) * same0 * rho_w[eta0][:, None]
    return complex(np.sum(weights * q))


def classical_limit_witness(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule) -> tuple:
    """``(offdiag_mass, consistency_dev)``: total modulus of the
    interference entries, and the largest interior-marginalization
    deviation."""
    table = full_table(sys, init, schedule)
    mass = sum(abs(v) for (a, b), v in table.values.items() if a != b)
    full = probabilities(sys, init, schedule)
    dev = 0.0
    for j in range(1, schedule.n):
        without = probabilities(sys, init, schedule.without(j))
        dev = max(dev, float(np.max(np.abs(full.sum(axis=j - 1) - without))))
    return float(mass), dev
