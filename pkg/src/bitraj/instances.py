"""Seeded random instances.

All randomness comes from ``numpy.random.default_rng(seed)`` (PCG64).
Hermitian matrices are ``(G + G^dagger) / 2`` with ``G`` complex standard
normal.
"""
import numpy as np

from .system import InitializationEvent, MeasurementSchedule, Observable, QuantumSystem, Resolution, initialize

GENERATOR = "numpy.PCG64"


def rng_for(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(rng, d: int, scale: float = 1.0) -> np.ndarray:
    rng = rng_for(rng)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(rng, d: int) -> np.ndarray:
    """Eigenbasis of a random Hermitian matrix."""
    return np.linalg.eigh(random_hermitian(rng, d))[1]


def random_system(rng, d: int, scale: float = 1.0) -> QuantumSystem:
    return QuantumSystem(random_hermitian(rng, d, scale))


def random_fine_observable(rng, d: int, name: str = "F") -> Observable:
    return Observable.from_basis(name, tuple(range(d)), random_unitary(rng, d))


def random_observable(rng, d: int, name: str = "F") -> Observable:
    """Random eigenbasis grouped into a random number of cells (possibly degenerate)."""
    rng = rng_for(rng)
    u = random_unitary(rng, d)
    k = int(rng.integers(2, d + 1)) if d > 2 else 2
    labels = np.concatenate([np.arange(k), rng.integers(0, k, d - k)])
    rng.shuffle(labels)
    projs = [sum(np.outer(u[:, i], u[:, i].conj()) for i in np.flatnonzero(labels == c)) for c in range(k)]
    return Observable(name, tuple(range(k)), np.array(projs))


def random_resolution(rng, obs: Observable) -> Resolution:
    rng = rng_for(rng)
    k = len(obs.outcomes)
    cells = int(rng.integers(1, k + 1))
    labels = np.concatenate([np.arange(cells), rng.integers(0, cells, k - cells)])
    rng.shuffle(labels)
    return Resolution(obs, {c: {obs.outcomes[i] for i in np.flatnonzero(labels == c)} for c in range(cells)})


def random_init(rng, sys: QuantumSystem, t0: float = 0.0) -> InitializationEvent:
    """Mixture over a random fine-grained preparing device."""
    rng = rng_for(rng)
    dev = random_fine_observable(rng, sys.dim, "K")
    p = rng.dirichlet(np.ones(sys.dim))
    return initialize(sys, [(dev, k, w) for k, w in zip(dev.outcomes, p)], t0)


def random_schedule(rng, d: int, n: int, t0: float = 0.0, fine: bool = False) -> MeasurementSchedule:
    rng = rng_for(rng)
    times = t0 + np.cumsum(rng.uniform(0.1, 1.0, n))
    make = random_fine_observable if fine else random_observable
    return MeasurementSchedule(t0, tuple((float(t), make(rng, d, f"F{j + 1}")) for j, t in enumerate(times)))


def random_instance(seed, d: int, n: int, fine: bool = False):
    """``(system, init, schedule)`` drawn from one generator."""
    rng = rng_for(seed)
    sys = random_system(rng, d)
    return sys, random_init(rng, sys), random_schedule(rng, d, n, fine=fine)
