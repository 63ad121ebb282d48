"""Small closed-form instances used by the suite, the demos and the tests."""
import numpy as np

from .composite import CompositeSystem, compose
from .system import (
    InitializationEvent,
    MeasurementSchedule,
    Observable,
    QuantumSystem,
    initialize,
    pure_initialization,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PLUS_STATE = np.full((2, 2), 0.5, dtype=np.complex128)


def qubit_devices() -> tuple:
    """Fine-grained ``X``, ``Y``, ``Z`` devices with outcomes ``+1, -1``."""
    s = 1 / np.sqrt(2)
    x = Observable.from_basis("X", (1, -1), np.array([[s, s], [s, -s]]))
    y = Observable.from_basis("Y", (1, -1), np.array([[s, s], [1j * s, -1j * s]]))
    z = Observable.from_basis("Z", (1, -1), np.eye(2))
    return x, y, z


def x_then_z():
    """Frozen qubit prepared in ``Z = +1``, read by ``X`` at 1 and ``Z`` at 2."""
    x, _, z = qubit_devices()
    sys = QuantumSystem.free(2)
    return sys, pure_initialization(sys, z, 1), MeasurementSchedule(0.0, ((1.0, x), (2.0, z)))


def zeno_qubit():
    """``H = (pi/2) sigma_x``: a ``Z = +1`` state flips completely in unit time."""
    return QuantumSystem(np.pi / 2 * SIGMA_X), qubit_devices()[2]


def zeno_closed_form(n: int) -> float:
    return float(np.cos(np.pi / (2 * n)) ** (2 * n))


def dephasing_pair(omega: float = 1.0, lam: float = 1.0) -> CompositeSystem:
    """A qubit with ``H_A = (omega/2) sigma_x`` coupled ``sigma_z (x) sigma_z`` to a frozen qubit."""
    return compose(QuantumSystem(omega / 2 * SIGMA_X), QuantumSystem.free(2), lam, SIGMA_Z, SIGMA_Z)


def dephasing_witness(omega: float = 1.0):
    """``(comp, init_a, init_b, schedule, f_plus, f_minus)`` for an
    interference entry whose discretization error is first order."""
    x, y, z = qubit_devices()
    comp = dephasing_pair(omega)
    init_a = pure_initialization(comp.sys_a, z, 1)
    init_b = InitializationEvent(0.0, PLUS_STATE)
    schedule = MeasurementSchedule(0.0, ((0.5, x), (1.0, y)))
    return comp, init_a, init_b, schedule, (1, 1), (-1, 1)


def commuting_drive(omega: float = 1.3, lam: float = 0.7):
    """``[H_A, V_A] = 0`` and a frozen B side: the step product is exact."""
    x, _, z = qubit_devices()
    comp = compose(QuantumSystem(omega / 2 * SIGMA_Z), QuantumSystem.free(2), lam, SIGMA_Z, SIGMA_X)
    init_a = pure_initialization(comp.sys_a, x, 1)
    init_b = pure_initialization(comp.sys_b, z, 1)
    return comp, init_a, init_b, MeasurementSchedule(0.0, ((0.5, x), (1.0, x)))


def commuting_instance(d: int = 3, seed: int = 0):
    """Diagonal Hamiltonian, diagonal metric and devices diagonal in the same basis."""
    rng = np.random.default_rng(seed)
    sys = QuantumSystem(np.diag(rng.standard_normal(d)))
    p = rng.dirichlet(np.ones(d))
    basis = Observable.from_basis("E", tuple(range(d)), np.eye(d))
    init = initialize(sys, [(basis, k, w) for k, w in zip(basis.outcomes, p)])
    coarse = Observable("C", ("a", "b"), np.array([np.diag([1.0] + [0.0] * (d - 1)), np.diag([0.0] + [1.0] * (d - 1))]))
    schedule = MeasurementSchedule(0.0, ((0.4, basis), (0.9, coarse), (1.7, basis)))
    return sys, init, schedule
