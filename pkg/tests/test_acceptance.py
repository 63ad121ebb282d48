import contextlib
import io
import itertools
import json
import warnings

import numpy as np

from bitraj.biprob import (
    causality_residual,
    check_additivity,
    check_bi_consistency,
    check_hermitian_pairing,
    check_measurement_link,
    check_normalization,
    check_positivity,
    check_stationarity,
    full_table,
)
from bitraj.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, bundled_config, main
from bitraj.composite import (
    TRANSFER,
    choi_cptp_check,
    compose,
    dynamical_map_exact,
    dynamical_map_path_sum,
    factorization_check,
    moments_identity_check,
    reduced_biprob_exact,
    surrogate_biprob,
    transpose_superop,
)
from bitraj.errors import DegenerateGaugeWarning
from bitraj.instances import (
    random_hermitian,
    random_init,
    random_instance,
    random_observable,
    random_resolution,
    random_schedule,
    random_system,
)
from bitraj.master import (
    classical_limit_witness,
    decomposition_check,
    generator_basis,
    multitime_correlation,
    multitime_moments,
    observable_to_coords,
    round_trip_residual,
)
from bitraj.phenomenology import (
    causality_experiment,
    coarse_grain_placement_experiment,
    inconsistency_witness,
    markov_experiment,
    short_time_decay,
    zeno_experiment,
)
from bitraj.system import MeasurementSchedule, Observable, Resolution, survival_variance
from bitraj.witnesses import commuting_drive, commuting_instance, dephasing_witness, x_then_z, zeno_qubit

GRID = (8, 16, 32, 64)
BAND = (0.3, 0.7)


def splits(n):
    for picks in itertools.product(range(4), repeat=n):
        yield [j + 1 for j, r in enumerate(picks) if r & 1], [j + 1 for j, r in enumerate(picks) if r & 2]


def ratios(errors):
    return [b / a for a, b in zip(errors, errors[1:])]


def test_criterion_01_q_properties(verdict):
    worst = dict.fromkeys(("Q1", "Q2", "Q4", "Q5", "Q7", "Q8", "Q3"), 0.0)
    for d in (2, 3, 4):
        for n in (1, 2, 3, 4):
            rng = np.random.default_rng(1000 * d + n)
            for _ in range(25):
                sys, init, schedule = random_instance(rng, d, n)
                table = full_table(sys, init, schedule)
                worst["Q1"] = max(worst["Q1"], check_normalization(table), check_hermitian_pairing(table))
                worst["Q2"] = max(worst["Q2"], causality_residual(sys, init, schedule))
                worst["Q4"] = max(worst["Q4"], -check_positivity(table, psd_tol=1.0).min_eigenvalue)
                for j in range(1, n):
                    worst["Q5"] = max(worst["Q5"], check_bi_consistency(table, j))
                worst["Q7"] = max(worst["Q7"], check_measurement_link(table))
                res = [random_resolution(rng, o) for o in schedule.observables]
                worst["Q8"] = max(worst["Q8"], check_additivity(sys, init, schedule, res))
    rng = np.random.default_rng(3)
    for _ in range(10):
        da, db = (int(x) for x in rng.integers(2, 4, 2))
        comp = compose(random_system(rng, da), random_system(rng, db), 0.0, random_hermitian(rng, da),
                       random_hermitian(rng, db))
        sa = random_schedule(rng, da, 2)
        sb = MeasurementSchedule(0.0, tuple(zip(sa.times, random_schedule(rng, db, 2).observables)))
        worst["Q3"] = max(worst["Q3"], factorization_check(comp, random_init(rng, comp.sys_a),
                                                           random_init(rng, comp.sys_b), sa, sb))
    ok = all(v <= 1e-10 for v in worst.values())
    verdict(ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (threshold 1e-10)")


def test_criterion_02_inconsistency_witness(verdict):
    sys, init, schedule = x_then_z()
    dev = inconsistency_witness(sys, init, schedule, 1).deviation
    causal = causality_experiment(sys, init, schedule).deviation
    ok = abs(dev - 0.5) <= 1e-12 and causal <= 1e-12
    verdict(ok, f"interior deviation={dev!r} (0.5 +- 1e-12), causality={causal:.1e} (<= 1e-12)")


def test_criterion_03_markov(verdict):
    worst = 0.0
    for d in (2, 3, 4):
        for n in (1, 2, 3, 4):
            for seed in range(5):
                sys, init, schedule = random_instance(100 * d + 10 * n + seed, d, n, fine=True)
                worst = max(worst, markov_experiment(sys, init, schedule).deviation)
    verdict(worst <= 1e-10, f"max joint vs chain deviation={worst:.1e} over d<=4, n<=4 (threshold 1e-10)")


def test_criterion_04_zeno(verdict):
    sys, z = zeno_qubit()
    p1, p2, p100 = (zeno_experiment(sys, z, 1, 1.0, n) for n in (1, 2, 100))
    ladder = [zeno_experiment(sys, z, 1, 1.0, 2**k) for k in range(9)]
    monotone = all(b >= a for a, b in zip(ladder, ladder[1:]))
    ok = abs(p1) <= 1e-12 and abs(p2 - 0.25) <= 1e-12 and abs(p100 - 0.97563) <= 1e-4 and monotone
    verdict(ok, f"n=1: {p1:.2e}, n=2: {p2:.12f}, n=100: {p100:.5f}, monotone to n=256: {monotone}")


def test_criterion_05_short_time(verdict):
    sys, z = zeno_qubit()
    var = survival_variance(sys, z, 1, 0.0)
    fd = short_time_decay(sys, z, 1, 0.0, 1e-3)
    rel = abs(fd - var) / var
    ok = rel <= 0.01 and abs(var - np.pi**2 / 4) <= 1e-10
    verdict(ok, f"variance={var!r} (pi^2/4 +- 1e-10), finite difference={fd:.6f}, relative gap={rel:.1e} (<= 1%)")


def test_criterion_06_coarse_grain_placement(verdict):
    sys, init, schedule = x_then_z()
    terminal, interior = coarse_grain_placement_experiment(sys, init, schedule, 1,
                                                           Resolution.full(schedule.observables[0]))
    ok = terminal <= 1e-12 and abs(interior - 0.5) <= 1e-12
    verdict(ok, f"terminal={terminal:.1e} (<= 1e-12), interior={interior!r} (0.5 +- 1e-12)")


def test_criterion_07_moments_identity(verdict):
    worst, count = 0.0, 0
    rng = np.random.default_rng(7)
    for db in (2, 3):
        for n in (1, 2, 3):
            for _ in range(5):
                comp = compose(random_system(rng, 2), random_system(rng, db), 1.0, random_hermitian(rng, 2),
                               random_hermitian(rng, db))
                init_b = random_init(rng, comp.sys_b)
                times = list(np.cumsum(rng.uniform(0.1, 1.0, n)))
                for i_plus, i_minus in splits(n):
                    worst = max(worst, moments_identity_check(comp, init_b, times, i_plus, i_minus))
                    count += 1
    verdict(worst <= 1e-10, f"max |LHS - RHS|={worst:.1e} over {count} (system, split) pairs (threshold 1e-10)")


def test_criterion_08_surrogate_path_sum(verdict):
    comp, init_a, init_b, schedule, fp, fm = dephasing_witness()
    exact = reduced_biprob_exact(comp, init_a, init_b, schedule, fp, fm)
    errs = [abs(surrogate_biprob(comp, init_a, init_b, schedule, fp, fm, m, method=TRANSFER) - exact) for m in GRID]
    r = ratios(errs)
    cd, ca, cb, cs = commuting_drive()
    seqs = list(itertools.product((1, -1), repeat=2))
    drive = max(abs(surrogate_biprob(cd, ca, cb, cs, a, b, 2) - reduced_biprob_exact(cd, ca, cb, cs, a, b))
                for a in seqs for b in seqs)
    ok = all(BAND[0] <= x <= BAND[1] for x in r) and drive <= 1e-10
    verdict(ok, f"ratios={[round(x, 4) for x in r]} (in [0.3, 0.7]), commuting drive at m=2: {drive:.1e} (<= 1e-10)")


def test_criterion_09_dynamical_map(verdict):
    comp, _, init_b, _, _, _ = dephasing_witness()
    exact = dynamical_map_exact(comp, init_b, 1.0)
    errs = [float(np.max(np.abs(dynamical_map_path_sum(comp, init_b, 1.0, m, method=TRANSFER) - exact)))
            for m in GRID]
    r = ratios(errs)
    rng = np.random.default_rng(9)
    trace_dev, min_eig = 0.0, np.inf
    for _ in range(20):
        coupled = compose(random_system(rng, 2), random_system(rng, 2), float(rng.uniform(-2, 2)),
                          random_hermitian(rng, 2), random_hermitian(rng, 2))
        m_eig, tp = choi_cptp_check(dynamical_map_exact(coupled, random_init(rng, coupled.sys_b),
                                                        float(rng.uniform(0, 2))))
        trace_dev, min_eig = max(trace_dev, tp), min(min_eig, m_eig)
    transpose_min = choi_cptp_check(transpose_superop(2))[0]
    ok = all(BAND[0] <= x <= BAND[1] for x in r) and trace_dev <= 1e-10 and min_eig >= -1e-9 and transpose_min < -0.5
    verdict(ok, f"ratios={[round(x, 4) for x in r]}, trace dev={trace_dev:.1e}, min Choi eig={min_eig:.1e}, "
                f"transpose min eig={transpose_min:.3f} (flagged non-CP)")


def test_criterion_10_master_layer(verdict):
    decomp, multi, trip = 0.0, 0.0, 0.0
    rng = np.random.default_rng(10)
    for d in (2, 3):
        for n in (1, 2):
            for _ in range(3):
                sys, init, schedule = random_instance(rng, d, n)
                outs = [o.outcomes for o in schedule.observables]
                for fp in itertools.product(*outs):
                    for fm in itertools.product(*outs):
                        if fp[-1] == fm[-1]:
                            decomp = max(decomp, decomposition_check(sys, init, schedule, fp, fm))
                ops = [random_hermitian(rng, d) for _ in range(n)]
                for ip, im in splits(n):
                    multi = max(multi, abs(multitime_correlation(sys, init, schedule.times, ops, ip, im)
                                           - multitime_moments(sys, init, schedule.times, ops, ip, im)))
    degenerate = Observable("D", (0, 1), np.array([np.diag([1, 0, 0]), np.diag([0, 1, 1])]).astype(complex))
    observables = [random_observable(rng, d) for d in (2, 3, 4) for _ in range(5)] + [degenerate]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGaugeWarning)
        for obs in observables:
            basis = generator_basis(obs.dim)
            trip = max(trip, round_trip_residual(basis, obs, observable_to_coords(basis, obs)))
    ok = decomp <= 1e-10 and multi <= 1e-10 and trip <= 1e-9
    verdict(ok, f"decomposition={decomp:.1e}, multi-time={multi:.1e} (<= 1e-10), round trip={trip:.1e} "
                f"(<= 1e-9, degenerate case included)")


def test_criterion_11_classical_limit(verdict):
    mass, cons = 0.0, 0.0
    for d in (2, 3, 4):
        for seed in range(5):
            m, c = classical_limit_witness(*commuting_instance(d, seed))
            mass, cons = max(mass, m), max(cons, c)
    stat = 0.0
    rng = np.random.default_rng(11)
    for d in (2, 3, 4):
        for n in (1, 2, 3):
            sys, init, schedule = random_instance(rng, d, n)
            stat = max(stat, check_stationarity(sys, init, schedule, float(rng.uniform(0.1, 3.0))))
    ok = mass <= 1e-12 and cons <= 1e-12 and stat <= 1e-10
    verdict(ok, f"off-diagonal mass={mass:.1e}, consistency={cons:.1e} (<= 1e-12), stationarity={stat:.1e} (<= 1e-10)")


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue()


def test_criterion_12_cli_golden(verdict, tmp_path):
    same = {}
    for name in ("two_slit", "qubit_witness"):
        code, out = _run(["check", "--config", f"{name}.json"])
        same[name] = code == EXIT_OK and out == bundled_config(f"golden/{name}_report.json")
    entries = {e["name"]: e for name in same for e in json.loads(bundled_config(f"golden/{name}_report.json"))[
        "experiments"]}
    covered = {"interior_marginal", "blurred_slits_terminal", "blurred_slits_interior", "zeno_n100"} <= set(entries)
    failing = json.loads(bundled_config("two_slit.json"))
    for e in failing["experiments"]:
        e["threshold"] = 0.9 if e["kind"] == "inconsistency" else e.get("threshold", 1e-10)
    (tmp_path / "failing.json").write_text(json.dumps(failing))
    (tmp_path / "broken.json").write_text("{}")
    codes = (_run(["check", "--config", str(tmp_path / "failing.json")])[0],
             _run(["check", "--config", str(tmp_path / "broken.json")])[0],
             _run(["experiment", "no_such_experiment"])[0])
    ok = all(same.values()) and covered and codes == (EXIT_FAIL, EXIT_CONFIG, EXIT_CONFIG)
    verdict(ok, f"golden identical={same}, witnesses stored={covered}, exit codes fail/config/unknown={codes}")
