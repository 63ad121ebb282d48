"""Two coupled subsystems A and B.

``H_AB = H_A (x) 1 + 1 (x) H_B + lam V_A (x) V_B``.

Bi-probabilities of A-only devices can be computed exactly on the joint
space, or as a sum over bi-trajectories ``(b+, b-)`` of the eigenvalues of
``V_B``: each bi-trajectory drives A through ``H_A + lam v_B(b(s)) V_A``
and is weighted by the bi-probability of the B-side path.

Discretization: ``m`` equal steps over ``[0, t]``.  One step is
``exp(-i dt H_A) exp(-i dt lam v V_A)`` (first order) with the B-side
projectors taken at the step midpoints.  Every measurement time must be a
grid point.  All composite operations start at time zero.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from .biprob import biprob, biprob_matrix, full_table
from .errors import (
    BadDimension,
    BadSplit,
    CouplingNonzero,
    DimensionMismatch,
    GridMisaligned,
    InvalidState,
    PathCapExceeded,
    ScheduleError,
)
from .linalg import check_hermitian, dagger, expm_hermitian_phase, kron, ordered_product, partial_trace_b
from .system import InitializationEvent, MeasurementSchedule, Observable, QuantumSystem, observable_from_matrix

PATH_CAP = 10**7
GRID_TOL = 1e-9
ENUMERATE = "enumerate"
TRANSFER = "transfer"


@dataclass(frozen=True, eq=False)
class CompositeSystem:
    sys_a: QuantumSystem
    sys_b: QuantumSystem
    coupling: float
    v_a: np.ndarray
    v_b: np.ndarray

    def __post_init__(self):
        v_a, v_b = check_hermitian(self.v_a), check_hermitian(self.v_b)
        if v_a.shape[0] != self.sys_a.dim:
            raise DimensionMismatch(f"V_A has dimension {v_a.shape[0]}, A has {self.sys_a.dim}")
        if v_b.shape[0] != self.sys_b.dim:
            raise DimensionMismatch(f"V_B has dimension {v_b.shape[0]}, B has {self.sys_b.dim}")
        object.__setattr__(self, "v_a", v_a)
        object.__setattr__(self, "v_b", v_b)
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def dims(self) -> tuple:
        return self.sys_a.dim, self.sys_b.dim

    @cached_property
    def total(self) -> QuantumSystem:
        da, db = self.dims
        h = kron(self.sys_a.hamiltonian, np.eye(db)) + kron(np.eye(da), self.sys_b.hamiltonian)
        if self.coupling != 0.0:
            h = h + self.coupling * kron(self.v_a, self.v_b)
        return QuantumSystem(h)

    @cached_property
    def v_b_observable(self) -> Observable:
        """Spectral device of ``V_B``; outcomes are its distinct eigenvalues."""
        return observable_from_matrix(self.sys_b, self.v_b, name="V_B")

    def lift_a(self, obs: Observable) -> Observable:
        eye = np.eye(self.sys_b.dim)
        return Observable(obs.name, obs.outcomes, np.array([np.kron(p, eye) for p in obs.projectors]))

    def lift_b(self, obs: Observable) -> Observable:
        eye = np.eye(self.sys_a.dim)
        return Observable(obs.name, obs.outcomes, np.array([np.kron(eye, p) for p in obs.projectors]))


def compose(sys_a: QuantumSystem, sys_b: QuantumSystem, lam: float, v_a, v_b) -> CompositeSystem:
    return CompositeSystem(sys_a, sys_b, lam, v_a, v_b)


def _product_init(init_a: InitializationEvent, init_b: InitializationEvent) -> InitializationEvent:
    if init_a.time != 0.0 or init_b.time != 0.0:
        raise ScheduleError("composite initializations must happen at time 0")
    return InitializationEvent(0.0, np.kron(init_a.metric, init_b.metric))


def joint_observable(obs_a: Observable, obs_b: Observable) -> Observable:
    """Simultaneous deployment of an A-device and a B-device; outcomes are pairs."""
    outcomes = tuple(product(obs_a.outcomes, obs_b.outcomes))
    projs = np.array([np.kron(pa, pb) for pa in obs_a.projectors for pb in obs_b.projectors])
    return Observable(f"{obs_a.name}*{obs_b.name}", outcomes, projs)


def _interleave(q_a: np.ndarray, q_b: np.ndarray, shape_a: tuple, shape_b: tuple) -> np.ndarray:
    n = len(shape_a)
    ta = q_a.reshape(shape_a + shape_a)
    tb = q_b.reshape(shape_b + shape_b)
    outer = np.multiply.outer(ta, tb)
    perm = [ax for j in range(n) for ax in (j, 2 * n + j)] + [ax for j in range(n) for ax in (n + j, 3 * n + j)]
    size = math.prod(shape_a) * math.prod(shape_b)
    return outer.transpose(perm).reshape(size, size)


def factorization_check(comp: CompositeSystem, init_a: InitializationEvent, init_b: InitializationEvent,
                        schedule_a: MeasurementSchedule, schedule_b: MeasurementSchedule,
                        joint_metric=None) -> float:
    """Max deviation of the joint bi-probability from the product of the
    subsystem bi-probabilities, for paired A and B deployments.

    ``joint_metric`` replaces the product initialization (to exhibit a
    correlated preparation, for which the check does not apply).
    """
    if comp.coupling != 0.0:
        raise CouplingNonzero(f"factorization needs zero coupling, got {comp.coupling}")
    if schedule_a.times != schedule_b.times or schedule_a.t0 != schedule_b.t0:
        raise ScheduleError("A and B schedules must share their deployment times")
    init = _product_init(init_a, init_b)
    if joint_metric is not None:
        init = InitializationEvent(0.0, joint_metric)
    joint = MeasurementSchedule(
        schedule_a.t0, tuple((t, joint_observable(a, b)) for t, a, b in zip(schedule_a.times, schedule_a.observables,
                                                                              schedule_b.observables))
    )
    q_ab = biprob_matrix(comp.total, init, joint)
    q_a = biprob_matrix(comp.sys_a, init_a, schedule_a)
    q_b = biprob_matrix(comp.sys_b, init_b, schedule_b)
    return float(np.max(np.abs(q_ab - _interleave(q_a, q_b, schedule_a.shape, schedule_b.shape))))


def check_split(n: int, i_plus, i_minus) -> tuple:
    i_plus, i_minus = sorted(set(i_plus)), sorted(set(i_minus))
    if not set(i_plus) | set(i_minus) <= set(range(1, n + 1)):
        raise BadSplit(f"split positions {i_plus} / {i_minus} outside 1..{n}")
    return i_plus, i_minus


def ordered_moment(sys: QuantumSystem, init: InitializationEvent, times: Sequence[float], ops: Sequence,
                   i_plus, i_minus) -> complex:
    """``tr[T{prod_{I+} F_j(t_j)} rho (T{prod_{I-} F_k(t_k)})^dagger]``.

    ``ops[j-1]`` is the operator probed at ``times[j-1]``; positions are
    1-based and the time-ordering puts later operators to the left.
    """
    i_plus, i_minus = check_split(len(times), i_plus, i_minus)
    heis = [sys.heisenberg(np.asarray(f, dtype=np.complex128), t) for t, f in zip(times, ops)]
    left = ordered_product([heis[j - 1] for j in i_plus], "reverse", dim=sys.dim)
    right = ordered_product([heis[k - 1] for k in i_minus], "reverse", dim=sys.dim)
    return complex(np.trace(left @ init.metric @ dagger(right)))


def moments_sum(sys: QuantumSystem, init: InitializationEvent, schedule: MeasurementSchedule, i_plus, i_minus) -> complex:
    """``sum_{f+, f-} prod_{I+} f_j+ prod_{I-} f_k- Q(f+, f-)`` over numeric outcomes."""
    i_plus, i_minus = check_split(schedule.n, i_plus, i_minus)
    q = biprob_matrix(sys, init, schedule)
    w_plus = np.ones(1)
    w_minus = np.ones(1)
    for j, obs in enumerate(schedule.observables, start=1):
        vals = np.array(obs.outcomes, dtype=float)
        ones = np.ones_like(vals)
        w_plus = np.kron(w_plus, vals if j in i_plus else ones)
        w_minus = np.kron(w_minus, vals if j in i_minus else ones)
    return complex(w_plus @ q @ w_minus)


def moments_identity_check(comp: CompositeSystem, init_b: InitializationEvent, times: Sequence[float],
                           i_plus, i_minus) -> float:
    """``|LHS - RHS|`` for the B-side moments identity of ``V_B``."""
    obs = comp.v_b_observable
    schedule = MeasurementSchedule(init_b.time, tuple((t, obs) for t in times))
    lhs = ordered_moment(comp.sys_b, init_b, times, [comp.v_b] * len(times), i_plus, i_minus)
    return abs(lhs - moments_sum(comp.sys_b, init_b, schedule, i_plus, i_minus))


def reduced_table_exact(comp: CompositeSystem, init_a: InitializationEvent, init_b: InitializationEvent,
                        schedule: MeasurementSchedule):
    lifted = MeasurementSchedule(schedule.t0, tuple((t, comp.lift_a(obs)) for t, obs in schedule.entries))
    return full_table(comp.total, _product_init(init_a, init_b), lifted)


def reduced_biprob_exact(comp: CompositeSystem, init_a: InitializationEvent, init_b: InitializationEvent,
                         schedule: MeasurementSchedule, f_plus: Sequence, f_minus: Sequence) -> complex:
    """A-device bi-probability evaluated on the joint space."""
    lifted = MeasurementSchedule(schedule.t0, tuple((t, comp.lift_a(obs)) for t, obs in schedule.entries))
    return biprob(comp.total, _product_init(init_a, init_b), lifted, f_plus, f_minus)


def grid_positions(times: Sequence[float], t_end: float, m: int) -> list:
    """Step counts at which each time lands on the ``m``-step grid over ``[0, t_end]``."""
    if m < 1:
        raise ValueError("grid needs at least one step")
    dt = t_end / m
    out = []
    for t in times:
        r = int(round(t / dt))
        if abs(r * dt - t) > GRID_TOL * max(1.0, abs(t_end)):
            raise GridMisaligned(f"time {t} is not on the {m}-step grid over [0, {t_end}]")
        out.append(r)
    return out


def _check_schedule(schedule: MeasurementSchedule):
    if schedule.t0 != 0.0:
        raise ScheduleError("composite schedules must start at t0 = 0")
    if not schedule.n:
        raise ScheduleError("schedule has no deployments")


def _steps_a(comp: CompositeSystem, dt: float, values) -> np.ndarray:
    free = comp.sys_a.evolution(dt)
    return np.array([free @ expm_hermitian_phase(comp.coupling * v * comp.v_a, dt) for v in values])


def _midpoints(t_end: float, m: int) -> list:
    dt = t_end / m
    return [(i + 0.5) * dt for i in range(m)]


def _b_path_biprob(comp: CompositeSystem, init_b: InitializationEvent, t_end: float, m: int) -> np.ndarray:
    obs = comp.v_b_observable
    sched = MeasurementSchedule(0.0, tuple((s, obs) for s in _midpoints(t_end, m)))
    return biprob_matrix(comp.sys_b, init_b, sched)


def _path_chains(steps: np.ndarray, m: int, inserts: dict) -> np.ndarray:
    """Products over every path of step operators, latest on the left, with
    ``inserts[r]`` applied after step ``r``.  Paths are C-ordered over the
    chronological step labels."""
    d = steps.shape[1]
    ops = np.eye(d, dtype=np.complex128)[None]
    for r in range(1, m + 1):
        ops = np.einsum("kij,ajl->akil", steps, ops).reshape(-1, d, d)
        if r in inserts:
            ops = inserts[r] @ ops
    return ops


def _fsum_complex(terms: np.ndarray) -> complex:
    flat = np.ravel(terms)
    return complex(math.fsum(flat.real), math.fsum(flat.imag))


def _path_pairs(comp: CompositeSystem, m: int, cap: int) -> int:
    pairs = len(comp.v_b_observable.outcomes) ** (2 * m)
    if pairs > cap:
        raise PathCapExceeded(f"{pairs} bi-trajectories on {m} steps exceed the cap of {cap}")
    return pairs


def _transfer_steps(comp: CompositeSystem, t_end: float, m: int) -> list:
    dt = t_end / m
    free = np.kron(comp.sys_a.evolution(dt), np.eye(comp.sys_b.dim))
    out = []
    for s in _midpoints(t_end, m):
        vb = comp.sys_b.heisenberg(comp.v_b, s)
        out.append(free @ expm_hermitian_phase(comp.coupling * np.kron(comp.v_a, vb), dt))
    return out


def surrogate_biprob(comp: CompositeSystem, init_a: InitializationEvent, init_b: InitializationEvent,
                     schedule: MeasurementSchedule, f_plus: Sequence, f_minus: Sequence, m: int,
                     method: str = ENUMERATE, cap: int = PATH_CAP) -> complex:
    """Bi-trajectory sum for an A-device bi-probability on an ``m``-step grid.

    ``enumerate`` sums every pair of B paths explicitly with compensated
    accumulation; ``transfer`` contracts the same sum step by step on the
    joint space and scales to fine grids.
    """
    _check_schedule(schedule)
    _product_init(init_a, init_b)
    t_end = schedule.times[-1]
    pos = grid_positions(schedule.times, t_end, m)
    idx_plus, idx_minus = schedule.outcome_indices(f_plus), schedule.outcome_indices(f_minus)
    if idx_plus[-1] != idx_minus[-1]:
        return 0j
    obs = schedule.observables
    if method == TRANSFER:
        eye_b = np.eye(comp.sys_b.dim)
        steps = _transfer_steps(comp, t_end, m)

        def chain(idx):
            ins = {r: np.kron(o.projectors[i], eye_b) for r, o, i in zip(pos, obs, idx)}
            k = np.eye(len(eye_b) * comp.sys_a.dim, dtype=np.complex128)
            for r, w in enumerate(steps, start=1):
                k = w @ k
                if r in ins:
                    k = ins[r] @ k
            return k

        rho = np.kron(init_a.metric, init_b.metric)
        return complex(np.trace(chain(idx_plus) @ rho @ dagger(chain(idx_minus))))
    if method != ENUMERATE:
        raise ValueError(f"unknown method {method!r}")
    _path_pairs(comp, m, cap)
    steps = _steps_a(comp, t_end / m, comp.v_b_observable.outcomes)
    l_plus = _path_chains(steps, m, {r: o.projectors[i] for r, o, i in zip(pos, obs, idx_plus)})
    l_minus = _path_chains(steps, m, {r: o.projectors[i] for r, o, i in zip(pos, obs, idx_minus)})
    q_b = _b_path_biprob(comp, init_b, t_end, m)
    traces = np.einsum("aij,jk,bik->ab", l_plus, init_a.metric, l_minus.conj())
    return _fsum_complex(q_b * traces)


def classical_drive_biprob(comp: CompositeSystem, init_a: InitializationEvent, schedule: MeasurementSchedule,
                           drive: Sequence[float], f_plus: Sequence, f_minus: Sequence) -> complex:
    """A-device bi-probability for the closed system driven by
    ``H_A + lam v(s) V_A`` with one drive value per grid step."""
    _check_schedule(schedule)
    m = len(drive)
    pos = grid_positions(schedule.times, schedule.times[-1], m)
    steps = _steps_a(comp, schedule.times[-1] / m, drive)

    def chain(seq):
        idx = schedule.outcome_indices(seq)
        ins = {r: o.projectors[i] for r, o, i in zip(pos, schedule.observables, idx)}
        k = np.eye(comp.sys_a.dim, dtype=np.complex128)
        for r, s in enumerate(steps, start=1):
            k = s @ k
            if r in ins:
                k = ins[r] @ k
        return k

    return complex(np.trace(chain(f_plus) @ init_a.metric @ dagger(chain(f_minus))))


@dataclass(frozen=True)
class BiTrajectoryGrid:
    """One pair of B-side eigenvalue paths on the grid and its weight."""

    times: tuple
    b_plus: tuple
    b_minus: tuple
    weight: complex
    v_plus: tuple
    v_minus: tuple


def bitrajectories(comp: CompositeSystem, init_b: InitializationEvent, t_end: float, m: int,
                   cap: int = PATH_CAP) -> list:
    """Every bi-trajectory on the ``m``-step grid whose final values agree."""
    _path_pairs(comp, m, cap)
    q_b = _b_path_biprob(comp, init_b, t_end, m)
    outcomes = comp.v_b_observable.outcomes
    paths = list(product(range(len(outcomes)), repeat=m))
    times = tuple(_midpoints(t_end, m))
    out = []
    for a, bp in enumerate(paths):
        for b, bm in enumerate(paths):
            if bp[-1] == bm[-1]:
                out.append(BiTrajectoryGrid(times, bp, bm, complex(q_b[a, b]),
                                            tuple(outcomes[i] for i in bp), tuple(outcomes[i] for i in bm)))
    return out


def _check_init_b(init_b: InitializationEvent, comp: CompositeSystem):
    if init_b.dim != comp.sys_b.dim:
        raise InvalidState(f"B metric has dimension {init_b.dim}, B has {comp.sys_b.dim}")
    if init_b.time != 0.0:
        raise ScheduleError("B initialization must happen at time 0")


def _unit(d: int, k: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=np.complex128)
    e.flat[k] = 1.0
    return e


def superoperator(channel, d: int) -> np.ndarray:
    """Matrix of a linear map on ``d x d`` operators acting on row-major
    vectorizations: ``S[:, k] = vec(channel(E_k))``."""
    return np.array([np.asarray(channel(_unit(d, k))).reshape(-1) for k in range(d * d)]).T


def dynamical_map_exact(comp: CompositeSystem, init_b: InitializationEvent, t: float) -> np.ndarray:
    """``rho -> tr_B[exp(-iHt) rho (x) rho_B exp(iHt)]`` as a superoperator."""
    _check_init_b(init_b, comp)
    u = comp.total.evolution(t)
    da, db = comp.dims
    return superoperator(lambda x: partial_trace_b(u @ np.kron(x, init_b.metric) @ dagger(u), da, db), da)


def dynamical_map_path_sum(comp: CompositeSystem, init_b: InitializationEvent, t: float, m: int,
                           method: str = ENUMERATE, cap: int = PATH_CAP) -> np.ndarray:
    """Bi-trajectory average of ``U[b+] rho U[b-]^dagger`` on an ``m``-step grid."""
    _check_init_b(init_b, comp)
    da, db = comp.dims
    if t == 0:
        return np.eye(da * da, dtype=np.complex128)
    if method == TRANSFER:
        w = ordered_product(_transfer_steps(comp, t, m), "reverse")
        return superoperator(lambda x: partial_trace_b(w @ np.kron(x, init_b.metric) @ dagger(w), da, db), da)
    if method != ENUMERATE:
        raise ValueError(f"unknown method {method!r}")
    _path_pairs(comp, m, cap)
    steps = _steps_a(comp, t / m, comp.v_b_observable.outcomes)
    u = _path_chains(steps, m, {})
    q_b = _b_path_biprob(comp, init_b, t, m)
    # row-major vec(A X B^dagger) = (A (x) conj(B)) vec(X)
    terms = np.einsum("ab,aij,bkl->ikjlab", q_b, u, u.conj()).reshape(da * da, da * da, -1)
    out = np.empty((da * da, da * da), dtype=np.complex128)
    for r in range(da * da):
        for c in range(da * da):
            out[r, c] = _fsum_complex(terms[r, c])
    return out


def choi_matrix(superop) -> np.ndarray:
    """``sum_ij E_ij (x) channel(E_ij)`` from a row-major superoperator."""
    s = np.asarray(superop, dtype=np.complex128)
    d = math.isqrt(s.shape[0])
    if s.ndim != 2 or s.shape[0] != s.shape[1] or d * d != s.shape[0] or d < 1:
        raise BadDimension(f"superoperator of shape {s.shape} does not act on square matrices")
    return s.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_cptp_check(superop) -> tuple:
    """Return ``(min Choi eigenvalue, max trace-preservation deviation)``."""
    c = choi_matrix(superop)
    d = math.isqrt(c.shape[0])
    min_eig = float(np.linalg.eigvalsh(0.5 * (c + dagger(c)))[0])
    s4 = np.asarray(superop).reshape(d, d, d, d)
    traces = np.einsum("kkij->ij", s4)
    return min_eig, float(np.max(np.abs(traces - np.eye(d))))


def unitary_superop(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    return np.kron(u, u.conj())


def transpose_superop(d: int) -> np.ndarray:
    return superoperator(lambda x: x.T, d)


def convergence_rows(ms: Sequence[int], errors: Sequence[float]) -> list:
    """``(m, abs_error, ratio_vs_previous)`` rows; the first ratio is ``None``."""
    rows = []
    for i, (m, e) in enumerate(zip(ms, errors)):
        ratio = None if i == 0 or errors[i - 1] == 0 else e / errors[i - 1]
        rows.append((int(m), float(e), ratio))
    return rows


def write_convergence_csv(rows, fh):
    fh.write("m,abs_error,ratio_vs_previous\n")
    for m, e, r in rows:
        fh.write(f"{m},{e!r},{'' if r is None else repr(r)}\n")
