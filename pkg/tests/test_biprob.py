import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bitraj.biprob import (
    biprob,
    biprob_matrix,
    causality_residual,
    check_additivity,
    check_bi_consistency,
    check_hermitian_pairing,
    check_measurement_link,
    check_normalization,
    check_positivity,
    check_stationarity,
    conditional,
    effect_operator,
    full_table,
    probabilities,
    probability,
    pseudo_metric,
    read_table_csv,
)
from bitraj.errors import (
    EnumerationCapExceeded,
    NotPSD,
    PositionOutOfRange,
    ScheduleError,
    UnknownOutcome,
    ZeroConditioningEvent,
)
from bitraj.instances import random_instance, random_resolution
from bitraj.system import MeasurementSchedule, Observable, QuantumSystem, Resolution, pure_initialization
from bitraj.witnesses import PLUS_STATE, commuting_instance, qubit_devices, x_then_z, zeno_qubit
from oracles import full_biprob, seq_biprob

seeds = st.integers(0, 2**32 - 1)

# oracle output on random_instance(11, 3, 2), chronological index pairs
FROZEN_SEED11 = {
    ((0, 0), (0, 0)): 0.04996034346236087 + 2.6797754701140495e-19j,
    ((0, 1), (1, 1)): 0.009697514268857128 - 0.005913600850892678j,
    ((1, 0), (0, 0)): -0.009697514268857106 - 0.0059136008508926755j,
}


def worked_table():
    sys, init, schedule = x_then_z()
    return full_table(sys, init, schedule)


@pytest.mark.parametrize("x_plus, x_minus", list(itertools.product((1, -1), repeat=2)))
@pytest.mark.parametrize("z", (1, -1))
def test_worked_table_entries(x_plus, x_minus, z):
    expected = 0.25 if (z == 1 or x_plus == x_minus) else -0.25
    assert worked_table()[((x_plus, z), (x_minus, z))] == pytest.approx(expected, abs=1e-15)


def test_worked_table_agrees_with_oracle():
    sys, init, schedule = x_then_z()
    steps = [(t, list(o.projectors)) for t, o in schedule.entries]
    ref = full_biprob(sys.hamiltonian, init.metric, 0.0, steps)
    table = worked_table()
    for (a, b), v in ref.items():
        assert table.values.get((a, b), 0j) == pytest.approx(v, abs=1e-14)


def test_worked_table_shape_and_causality():
    table = worked_table()
    assert len(table) == 8
    assert table[((1, 1), (1, -1))] == 0j
    assert biprob(*x_then_z(), (1, 1), (1, -1)) == 0j


@pytest.mark.parametrize("key", sorted(FROZEN_SEED11))
def test_random_entries_match_frozen_oracle(key):
    sys, init, schedule = random_instance(11, 3, 2)
    plus, minus = key
    got = biprob(sys, init, schedule, table_outcomes(schedule, plus), table_outcomes(schedule, minus))
    assert got == pytest.approx(FROZEN_SEED11[key], abs=1e-13)


def table_outcomes(schedule, indices):
    return tuple(obs.outcomes[i] for obs, i in zip(schedule.observables, indices))


def test_single_time_table_is_diagonal_of_probabilities():
    sys, z = zeno_qubit()
    init = pure_initialization(sys, z, 1)
    schedule = MeasurementSchedule(0.0, ((0.5, z),))
    table = full_table(sys, init, schedule)
    assert np.allclose(table.dense(), np.diag(probabilities(sys, init, schedule)))
    assert probability(sys, init, schedule, (1,)) == pytest.approx(0.5, abs=1e-15)


def test_pure_single_time_gram_rank():
    sys = QuantumSystem.free(2)
    z = qubit_devices()[2]
    init = pure_initialization(sys, z, 1)
    metric = check_positivity(full_table(sys, init, MeasurementSchedule(0.0, ((1.0, z),))))
    assert metric.rank == 1
    assert metric.null_basis.shape == (2, 1)
    assert metric.trace == pytest.approx(1.0)


def test_worked_gram_is_psd_rank_two():
    metric = check_positivity(worked_table())
    assert metric.min_eigenvalue >= -1e-12
    assert metric.rank == 2
    v = metric.null_basis[:, 0]
    assert abs(metric.inner(v, v)) < 1e-12


def test_not_psd_raises():
    table = worked_table()
    bad = dict(table.values)
    bad[((0, 0), (1, 0))] = 5.0
    bad[((1, 0), (0, 0))] = 5.0
    forged = type(table)(table.system, table.init, table.schedule, table.sequences, bad)
    with pytest.raises(NotPSD):
        check_positivity(forged)


def test_conditional():
    sys = QuantumSystem.free(2)
    x, _, z = qubit_devices()
    init = pure_initialization(sys, z, 1)
    schedule = MeasurementSchedule(0.0, ((1.0, x),))
    assert conditional(sys, init, schedule, (1,), 2.0, z, -1) == pytest.approx(0.5)
    assert conditional(sys, init, MeasurementSchedule(0.0, ()), (), 1.0, z, 1) == pytest.approx(1.0)
    with pytest.raises(ZeroConditioningEvent):
        conditional(sys, init, MeasurementSchedule(0.0, ((1.0, z),)), (-1,), 2.0, x, 1)


def test_pseudo_metric_by_hand():
    sys = QuantumSystem.free(2)
    x, _, z = qubit_devices()
    init = pure_initialization(sys, z, 1)
    schedule = MeasurementSchedule(0.0, ((1.0, x),))
    assert np.allclose(pseudo_metric(sys, init, schedule, (1,)), PLUS_STATE / 2)
    assert np.allclose(pseudo_metric(sys, init, MeasurementSchedule(0.0, ()), ()), init.metric)


def test_effect_operator_is_not_a_projector_for_noncommuting_sequence():
    sys, _, schedule = x_then_z()
    e = effect_operator(sys, schedule, (1, 1))
    assert np.max(np.abs(e @ e - e)) > 0.1
    csys, _, cschedule = commuting_instance()
    ce = effect_operator(csys, cschedule, (0, "a", 0))
    assert np.max(np.abs(ce @ ce - ce)) <= 1e-12


def test_errors():
    sys, init, schedule = x_then_z()
    with pytest.raises(UnknownOutcome):
        biprob(sys, init, schedule, (1, 2), (1, 1))
    with pytest.raises(ScheduleError):
        biprob(sys, init, schedule.shifted(0.5), (1, 1), (1, 1))
    with pytest.raises(EnumerationCapExceeded):
        full_table(sys, init, schedule, cap=4)
    with pytest.raises(PositionOutOfRange):
        check_bi_consistency(worked_table(), 2)


def test_bi_consistency_on_worked_table():
    table = worked_table()
    block = sum(table[((xp, -1), (xm, -1))] for xp in (1, -1) for xm in (1, -1))
    assert block == pytest.approx(0.0, abs=1e-15)
    assert check_bi_consistency(table, 1) <= 1e-12


def test_additivity_trivial_resolution_is_exact():
    sys, init, schedule = x_then_z()
    res = [Resolution.trivial(o) for o in schedule.observables]
    assert check_additivity(sys, init, schedule, res) == 0.0


def test_additivity_three_level_cells():
    sys, init, _ = random_instance(3, 3, 1)
    obs = Observable.from_basis("T", ("a", "b", "c"), np.linalg.qr(np.arange(9).reshape(3, 3) + 1j * np.eye(3))[0])
    schedule = MeasurementSchedule(0.0, ((0.5, obs), (1.1, obs)))
    res = Resolution(obs, {"a": {"a"}, "bc": {"b", "c"}})
    assert check_additivity(sys, init, schedule, [res, res]) <= 1e-10
    assert check_additivity(sys, init, schedule, [None, res]) <= 1e-10


def test_csv_round_trip():
    table = worked_table()
    text = table.to_csv()
    assert text.splitlines()[0] == "f_plus_2,f_plus_1,f_minus_2,f_minus_1,re,im"
    assert len(text.splitlines()) == 9
    parsed = read_table_csv(io.StringIO(text))
    for (a, b), v in table.values.items():
        key = (tuple(map(str, table.outcomes(a))), tuple(map(str, table.outcomes(b))))
        assert parsed[key] == v


def test_commuting_table_has_no_off_diagonal():
    sys, init, schedule = commuting_instance()
    m = full_table(sys, init, schedule).dense()
    assert np.max(np.abs(m - np.diag(np.diag(m)))) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_table_properties(seed, d, n):
    sys, init, schedule = random_instance(seed, d, n)
    table = full_table(sys, init, schedule)
    assert check_normalization(table) <= 1e-10
    assert check_hermitian_pairing(table) <= 1e-12
    assert check_measurement_link(table) <= 1e-10
    assert causality_residual(sys, init, schedule) <= 1e-10
    assert check_positivity(table).min_eigenvalue >= -1e-10
    for j in range(1, n):
        assert check_bi_consistency(table, j) <= 1e-10
    rng = np.random.default_rng(seed)
    res = [random_resolution(rng, o) for o in schedule.observables]
    assert check_additivity(sys, init, schedule, res) <= 1e-10
    assert check_stationarity(sys, init, schedule, 0.7) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_matrix_agrees_with_schroedinger_oracle(seed, d, n):
    sys, init, schedule = random_instance(seed, d, n)
    steps = [(t, list(o.projectors)) for t, o in schedule.entries]
    m = biprob_matrix(sys, init, schedule, enforce_causality=False)
    seqs = list(itertools.product(*(range(k) for k in schedule.shape)))
    for i, a in enumerate(seqs):
        for j, b in enumerate(seqs):
            assert abs(m[i, j] - seq_biprob(sys.hamiltonian, init.metric, 0.0, steps, a, b)) <= 1e-10
