import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bitraj.biprob import biprob, probability
from bitraj.errors import BadDimension, DegenerateGaugeWarning, IndexOutOfRange, LengthMismatch
from bitraj.instances import random_hermitian, random_init, random_instance, random_observable, random_system
from bitraj.master import (
    SpaceTimeCoordinate,
    classical_limit_witness,
    coords_to_unitary,
    decomposition_check,
    frame_projectors,
    generator_basis,
    multitime_correlation,
    multitime_moments,
    observable_to_coords,
    round_trip_residual,
    system_biprob,
    system_biprob_matrix,
)
from bitraj.system import InitializationEvent, MeasurementSchedule, Observable, QuantumSystem, pure_initialization
from bitraj.witnesses import SIGMA_X, SIGMA_Y, SIGMA_Z, commuting_instance, qubit_devices, x_then_z

seeds = st.integers(0, 2**32 - 1)


def test_qubit_basis_is_pauli():
    assert np.array_equal(generator_basis(2).generators, np.array([SIGMA_X, SIGMA_Y, SIGMA_Z]))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_generators_traceless_orthogonal(d):
    g = generator_basis(d).generators
    assert len(g) == d * d - 1
    gram = np.einsum("aij,bji->ab", g, g)
    assert np.allclose(gram, 2 * np.eye(d * d - 1), atol=1e-12)
    assert np.max(np.abs(np.trace(g, axis1=1, axis2=2))) <= 1e-12
    assert all(np.allclose(t, t.conj().T) for t in g)


def test_basis_errors():
    with pytest.raises(BadDimension):
        generator_basis(1)
    with pytest.raises(LengthMismatch):
        generator_basis(2).combine([1.0, 2.0])


def test_coords_to_unitary():
    basis = generator_basis(2)
    assert np.allclose(coords_to_unitary(basis, [0, 0, 0]), np.eye(2))
    assert np.allclose(coords_to_unitary(basis, [np.pi / 2, 0, 0]), 1j * SIGMA_X, atol=1e-15)
    u = coords_to_unitary(generator_basis(3), np.random.default_rng(0).normal(size=8))
    assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-12)


def test_round_trip_qubit_x_and_diagonal():
    basis = generator_basis(2)
    x, _, z = qubit_devices()
    cx = observable_to_coords(basis, x)
    assert cx.index_map == (-1, 1)
    assert round_trip_residual(basis, x, cx) <= 1e-9
    cz = observable_to_coords(basis, z)
    assert round_trip_residual(basis, z, cz) <= 1e-12
    w = coords_to_unitary(basis, cz.coord.phi)
    assert np.allclose(np.abs(w), np.eye(2)[::-1], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 4))
def test_round_trip_random_including_degenerate(seed, d):
    basis = generator_basis(d)
    obs = random_observable(seed, d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGaugeWarning)
        cobs = observable_to_coords(basis, obs)
    assert round_trip_residual(basis, obs, cobs) <= 1e-9
    w = coords_to_unitary(basis, cobs.coord.phi)
    m = obs.matrix()
    for e in range(d):
        assert np.linalg.norm(m @ w[:, e] - cobs.outcome(e) * w[:, e]) <= 1e-9


def test_degenerate_warns_once():
    obs = Observable("D", (0, 1), np.array([np.diag([1, 0, 0]), np.diag([0, 1, 1])]).astype(complex))
    with pytest.warns(DegenerateGaugeWarning) as rec:
        cobs = observable_to_coords(generator_basis(3), obs)
    assert len(rec) == 1
    assert cobs.index_map == (0, 1, 1)
    with pytest.raises(BadDimension):
        observable_to_coords(generator_basis(2), obs)


def test_equal_coordinates_constant_index():
    sys = random_system(1, 3)
    c = SpaceTimeCoordinate(0.4, np.random.default_rng(1).normal(size=8))
    for e0 in range(3):
        for e in range(3):
            v = system_biprob(sys, [c, c, c], [e, e], [e, e], e0, e0)
            assert v == pytest.approx(1.0 if e == e0 else 0.0, abs=1e-12)


def test_system_biprob_errors():
    sys = QuantumSystem.free(2)
    c = SpaceTimeCoordinate(0.0, (0, 0, 0))
    with pytest.raises(IndexOutOfRange):
        system_biprob(sys, [c, c], [2], [0], 0, 0)
    with pytest.raises(LengthMismatch):
        system_biprob(sys, [c, c], [0, 0], [0], 0, 0)


def test_cross_module_worked_table():
    sys, init, schedule = x_then_z()
    basis = generator_basis(2)
    frames = [observable_to_coords(basis, obs, t) for t, obs in schedule.entries]
    tau0 = SpaceTimeCoordinate(0.0, (0, 0, 0))
    coords = [tau0] + [f.coord for f in frames]
    for ep in itertools.product(range(2), repeat=2):
        for em in itertools.product(range(2), repeat=2):
            fp = tuple(f.outcome(e) for f, e in zip(frames, ep))
            fm = tuple(f.outcome(e) for f, e in zip(frames, em))
            expected = biprob(sys, init, schedule, fp, fm)
            assert system_biprob(sys, coords, ep, em, 0, 0) == pytest.approx(expected, abs=1e-12)
            if fp[-1] == fm[-1]:
                assert abs(abs(expected) - 0.25) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_system_biprob_properties(seed, d, n):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, d)
    coords = [SpaceTimeCoordinate(t, rng.normal(size=d * d - 1)) for t in np.cumsum(rng.uniform(0, 1, n + 1))]
    q = system_biprob_matrix(sys, coords)
    seqs = list(itertools.product(range(d), repeat=n + 1))
    eta0 = np.array([s[0] for s in seqs])
    last = np.array([s[-1] for s in seqs])
    for e0 in range(d):
        block = q[np.ix_(eta0 == e0, eta0 == e0)]
        assert abs(block.sum() - 1.0) <= 1e-10
    assert np.max(np.abs(q[last[:, None] != last[None, :]])) <= 1e-10
    assert np.linalg.eigvalsh(0.5 * (q + q.conj().T))[0] >= -1e-10
    if n >= 1:
        t = q.reshape((d,) * (2 * n + 2))
        marg = t.sum(axis=(1, n + 2))
        shorter = system_biprob_matrix(sys, coords[:1] + coords[2:]).reshape(marg.shape)
        assert np.max(np.abs(marg - shorter)) <= 1e-10
    i = int(rng.integers(len(seqs)))
    j = int(rng.integers(len(seqs)))
    direct = system_biprob(sys, coords, seqs[i][1:], seqs[j][1:], seqs[i][0], seqs[j][0])
    assert direct == pytest.approx(q[i, j], abs=1e-12)


def test_decomposition_worked_entry():
    sys, init, schedule = x_then_z()
    for xp, xm in itertools.product((1, -1), repeat=2):
        assert decomposition_check(sys, init, schedule, (xp, -1), (xm, -1)) <= 1e-12


def test_decomposition_single_time_diagonal():
    sys, init, schedule = random_instance(4, 3, 1)
    for f in schedule.observables[0].outcomes:
        assert decomposition_check(sys, init, schedule, (f,), (f,)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_decomposition_random(seed):
    sys, init, schedule = random_instance(seed, 3, 2)
    for fp in itertools.product(*(o.outcomes for o in schedule.observables)):
        for fm in itertools.product(*(o.outcomes for o in schedule.observables)):
            if fp[-1] == fm[-1]:
                assert decomposition_check(sys, init, schedule, fp, fm) <= 1e-10


def test_multitime_by_hand():
    sys = QuantumSystem.free(2)
    init = pure_initialization(sys, qubit_devices()[2], 1)
    assert multitime_correlation(sys, init, [1.0], [SIGMA_X], [1], [1]) == pytest.approx(1.0)
    assert multitime_moments(sys, init, [1.0], [SIGMA_X], [1], [1]) == pytest.approx(1.0)
    h = random_hermitian(2, 2)
    assert multitime_correlation(sys, init, [0.5], [h], [1], []) == pytest.approx(np.trace(h @ init.metric))
    with pytest.raises(ValueError):
        multitime_correlation(sys, init, [1.0, 1.0], [h, h], [1, 2], [])


def test_multitime_projectors_reproduce_diagonal():
    sys, init, schedule = random_instance(8, 3, 2)
    for f in itertools.product(*(o.outcomes for o in schedule.observables)):
        ops = [o.projector(g) for o, g in zip(schedule.observables, f)]
        v = multitime_correlation(sys, init, schedule.times, ops, [1, 2], [1, 2])
        assert v == pytest.approx(probability(sys, init, schedule, f), abs=1e-12)
    single = schedule.truncated(1)
    for f in single.observables[0].outcomes:
        v = multitime_correlation(sys, init, single.times, [single.observables[0].projector(f)], [1], [])
        assert v == pytest.approx(probability(sys, init, single, (f,)), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_multitime_moments_random(seed, d, n):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, d)
    init = random_init(rng, sys)
    times = list(np.cumsum(rng.uniform(0.1, 1.0, n)))
    ops = [random_hermitian(rng, d) for _ in range(n)]
    for labels in itertools.product(range(4), repeat=n):
        ip = [j + 1 for j, r in enumerate(labels) if r & 1]
        im = [j + 1 for j, r in enumerate(labels) if r & 2]
        a = multitime_correlation(sys, init, times, ops, ip, im)
        assert abs(a - multitime_moments(sys, init, times, ops, ip, im)) <= 1e-10


def test_classical_limit():
    sys, init, schedule = x_then_z()
    mass, dev = classical_limit_witness(sys, init, schedule)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert dev == pytest.approx(0.5, abs=1e-12)
    z = qubit_devices()[2]
    q = QuantumSystem(SIGMA_Z)
    diag = InitializationEvent(0.0, np.diag([0.3, 0.7]))
    assert classical_limit_witness(q, diag, MeasurementSchedule.repeated(z, (0.5, 1.0, 2.0))) == pytest.approx(
        (0.0, 0.0), abs=1e-12)
    csys, cinit, cschedule = commuting_instance()
    mass, dev = classical_limit_witness(csys, cinit, cschedule)
    assert mass <= 1e-12 and dev <= 1e-12


def test_frame_projectors_are_heisenberg():
    sys = random_system(6, 3)
    c = SpaceTimeCoordinate(0.8, np.random.default_rng(6).normal(size=8))
    at0 = frame_projectors(sys, SpaceTimeCoordinate(0.0, c.phi))
    assert np.allclose(frame_projectors(sys, c), sys.heisenberg(at0, 0.8))
    assert np.allclose(at0.sum(axis=0), np.eye(3))
