"""Experiment registry and the invariant suite.

Every experiment yields :class:`ExperimentReport` entries; a suite report is
``{"generator", "seed", "experiments": [...]}`` with entries sorted by name.
"""
import warnings

import numpy as np

from .biprob import (
    causality_residual,
    check_additivity,
    check_bi_consistency,
    check_hermitian_pairing,
    check_measurement_link,
    check_normalization,
    check_stationarity,
    full_table,
)
from .composite import (
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
from .config import RunConfig, resolve_outcome
from .errors import DegenerateGaugeWarning, SchemaError, UnknownExperiment
from .instances import (
    GENERATOR,
    random_fine_observable,
    random_hermitian,
    random_init,
    random_instance,
    random_resolution,
    random_schedule,
    random_system,
)
from .master import (
    classical_limit_witness,
    decomposition_check,
    generator_basis,
    multitime_correlation,
    multitime_moments,
    observable_to_coords,
    round_trip_residual,
)
from .phenomenology import (
    VIOLATION,
    ExperimentReport,
    causality_experiment,
    coarse_grain_placement_experiment,
    inconsistency_witness,
    markov_experiment,
    short_time_decay,
    statics_equivalence,
    uncertainty_correlation,
    zeno_experiment,
)
from .system import MeasurementSchedule, Resolution, survival_variance
from .witnesses import dephasing_witness, x_then_z

SHORT_TIME_RTOL = 0.01
CONVERGENCE_BAND = (0.3, 0.7)
CHOI_TOL = 1e-9


def report_document(reports, seed=None) -> dict:
    entries = []
    for r in sorted(reports, key=lambda r: r.name):
        d = r.to_dict()
        if r.witness and "value" in r.witness:
            d["value"] = float(r.witness["value"])
        entries.append(d)
    return {"generator": GENERATOR, "seed": seed, "experiments": entries}


def _require(spec: dict, key: str, where: str):
    if key not in spec:
        raise SchemaError(f"{where}.{key}", "required parameter missing")
    return spec[key]


def _schedule(cfg: RunConfig, spec: dict, where: str) -> MeasurementSchedule:
    name = _require(spec, "schedule", where)
    if name not in cfg.schedules:
        raise SchemaError(f"{where}.schedule", f"unknown schedule {name!r}")
    return cfg.schedules[name]


def _observable(cfg: RunConfig, spec: dict, key: str, where: str):
    name = _require(spec, key, where)
    if name not in cfg.observables:
        raise SchemaError(f"{where}.{key}", f"unknown observable {name!r}")
    return cfg.observables[name]


def q_property_reports(sys, init, schedule, tol: float, tol_psd: float, prefix: str = "q") -> list:
    """Q1, Q2, Q4, Q5, Q7 and Hermitian pairing on one schedule."""
    table = full_table(sys, init, schedule)
    out = [
        ExperimentReport(f"{prefix}1_normalization", check_normalization(table), tol),
        ExperimentReport(f"{prefix}2_causality", causality_residual(sys, init, schedule), tol),
        ExperimentReport(f"{prefix}7_measurement_link", check_measurement_link(table), tol),
        ExperimentReport(f"{prefix}_hermitian_pairing", check_hermitian_pairing(table), tol),
    ]
    gram = table.dense()
    min_eig = float(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[0])
    out.append(ExperimentReport(f"{prefix}4_positivity", max(0.0, -min_eig), tol_psd))
    dev5 = max([0.0] + [check_bi_consistency(table, j) for j in range(1, schedule.n)])
    out.append(ExperimentReport(f"{prefix}5_bi_consistency", dev5, tol))
    return out


def run_configured(cfg: RunConfig, spec: dict, index: int = 0, grid: int = None, n_override: int = None) -> list:
    """Run one experiment entry of a configuration."""
    where = f"$.experiments[{index}]"
    kind = spec["kind"]
    label = spec.get("label", kind)
    tol = spec.get("threshold", cfg.tol_equality)
    sys, init = cfg.system, cfg.init
    if kind in ("causality", "inconsistency", "coarse_grain", "markov", "q_properties") and init is None:
        raise SchemaError("$.initialization", f"experiment {kind!r} needs an initialization")
    if kind == "causality":
        r = causality_experiment(sys, init, _schedule(cfg, spec, where), tol)
        return [ExperimentReport(label, r.deviation, r.threshold)]
    if kind == "inconsistency":
        r = inconsistency_witness(sys, init, _schedule(cfg, spec, where), _require(spec, "position", where),
                                  spec.get("threshold", 0.01))
        return [ExperimentReport(label, r.deviation, r.threshold, VIOLATION)]
    if kind == "coarse_grain":
        schedule = _schedule(cfg, spec, where)
        j = _require(spec, "position", where)
        obs = schedule.observables[j - 1]
        cells = {c: {resolve_outcome(obs, f) for f in members}
                 for c, members in _require(spec, "cells", where).items()}
        terminal, interior = coarse_grain_placement_experiment(sys, init, schedule, j, Resolution(obs, cells))
        return [
            ExperimentReport(f"{label}_terminal", terminal, spec.get("terminal_threshold", tol)),
            ExperimentReport(f"{label}_interior", interior, spec.get("interior_threshold", 0.01), VIOLATION),
        ]
    if kind == "markov":
        r = markov_experiment(sys, init, _schedule(cfg, spec, where), tol)
        return [ExperimentReport(label, r.deviation, r.threshold)]
    if kind == "q_properties":
        return q_property_reports(sys, init, _schedule(cfg, spec, where), tol, cfg.tol_psd, prefix=label)
    if kind == "zeno":
        obs = _observable(cfg, spec, "observable", where)
        k0 = resolve_outcome(obs, _require(spec, "outcome", where))
        t = _require(spec, "total_time", where)
        expected = {int(k): v for k, v in spec.get("expected", {}).items()}
        ns = [n_override] if n_override else list(spec.get("n", sorted(expected)))
        out = []
        for n in ns:
            value = zeno_experiment(sys, obs, k0, t, n)
            dev = abs(value - expected[n]) if n in expected else 0.0
            out.append(ExperimentReport(f"{label}_n{n}", dev, spec.get("value_tolerance", 1e-4),
                                        witness={"value": value}))
        ladder = spec.get("ladder")
        if ladder and not n_override:
            values = [zeno_experiment(sys, obs, k0, t, n) for n in ladder]
            drop = max([0.0] + [a - b for a, b in zip(values, values[1:])])
            out.append(ExperimentReport(f"{label}_monotone", drop, tol, witness={"survival": values}))
        return out
    if kind == "short_time":
        obs = _observable(cfg, spec, "observable", where)
        k0 = resolve_outcome(obs, _require(spec, "outcome", where))
        t = spec.get("time", 0.0)
        var = survival_variance(sys, obs, k0, t)
        fd = short_time_decay(sys, obs, k0, t, spec.get("dt", 1e-3))
        out = [ExperimentReport(f"{label}_finite_difference", abs(fd - var) / var, SHORT_TIME_RTOL,
                                witness={"value": fd})]
        if "expected_variance" in spec:
            out.append(ExperimentReport(f"{label}_variance", abs(var - spec["expected_variance"]), tol,
                                        witness={"value": var}))
        return out
    if kind == "statics":
        if init is None:
            raise SchemaError("$.initialization", "statics needs an initialization")
        r = statics_equivalence(sys, init, _observable(cfg, spec, "observable", where), _require(spec, "time", where),
                                spec.get("threshold", 1e-12))
        return [ExperimentReport(label, r.deviation, r.threshold)]
    if kind == "uncertainty":
        c = uncertainty_correlation(sys, _observable(cfg, spec, "k", where), _observable(cfg, spec, "l", where),
                                    spec.get("time", 0.0))
        dev = max(float(np.max(np.abs(c.sum(axis=0) - 1))), float(np.max(np.abs(c.sum(axis=1) - 1))))
        return [ExperimentReport(label, dev, tol)]
    raise UnknownExperiment(f"unknown experiment kind {kind!r}")


def configured_reports(cfg: RunConfig, name: str = None, grid: int = None, n_override: int = None) -> list:
    """All configured experiments, or the ones whose label or kind is ``name``."""
    out = []
    for i, spec in enumerate(cfg.experiments):
        if name is None or name in (spec.get("label"), spec["kind"]):
            out += run_configured(cfg, spec, i, grid, n_override)
    if name is not None and not out:
        raise UnknownExperiment(f"no experiment named {name!r} in the configuration")
    return out


def _max(values) -> float:
    return max([0.0] + [float(v) for v in values])


def random_suite(seed: int, dim: int, tol: float = 1e-10, tol_psd: float = 1e-10, grid: int = 8,
                 instances: int = 3, max_n: int = 3) -> list:
    """Invariant checks on instances drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    acc = {}

    def record(name, value):
        acc[name] = max(acc.get(name, 0.0), float(value))

    for n in range(1, max_n + 1):
        for _ in range(instances):
            sys, init, schedule = random_instance(rng, dim, n)
            for r in q_property_reports(sys, init, schedule, tol, tol_psd):
                record(r.name, r.deviation)
            res = [random_resolution(rng, obs) if rng.random() < 0.7 else None for obs in schedule.observables]
            record("q8_additivity", check_additivity(sys, init, schedule, res))
            record("stationarity", check_stationarity(sys, init, schedule, float(rng.uniform(0.1, 2.0))))
            if n >= 2:
                record("causality", causality_experiment(sys, init, schedule).deviation)
            fine = random_schedule(rng, dim, n, fine=True)
            record("markov", markov_experiment(sys, init, fine).deviation)
            record("statics", statics_equivalence(sys, init, schedule.observables[0], schedule.times[0]).deviation)
            record("decomposition", max(
                decomposition_check(sys, init, schedule, *pair) for pair in _sample_pairs(rng, schedule, 4)))
            ops = [random_hermitian(rng, dim) for _ in range(n)]
            split = _random_split(rng, n)
            record("multitime_moments", abs(multitime_correlation(sys, init, schedule.times, ops, *split)
                                            - multitime_moments(sys, init, schedule.times, ops, *split)))
            k_obs, l_obs = random_fine_observable(rng, dim), random_fine_observable(rng, dim)
            c = uncertainty_correlation(sys, k_obs, l_obs, float(rng.uniform(0, 3)))
            record("uncertainty_doubly_stochastic", _max(np.abs(np.concatenate([c.sum(0), c.sum(1)]) - 1)))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateGaugeWarning)
                for obs in schedule.observables:
                    basis = generator_basis(dim)
                    record("coords_round_trip", round_trip_residual(basis, obs, observable_to_coords(basis, obs)))
            comp = compose(random_system(rng, dim), random_system(rng, min(dim, 3)), 0.0,
                           random_hermitian(rng, dim), random_hermitian(rng, min(dim, 3)))
            init_b = random_init(rng, comp.sys_b)
            times = schedule.times
            record("moments_identity", moments_identity_check(comp, init_b, times, *_random_split(rng, n)))
    reports = [ExperimentReport(k, v, tol_psd if k == "q4_positivity" else
                                (1e-9 if k == "coords_round_trip" else (1e-12 if k == "statics" else tol)))
               for k, v in acc.items()]
    reports += _composite_reports(rng, tol, grid)
    reports += _witness_reports(tol)
    return sorted(reports, key=lambda r: r.name)


def _sample_pairs(rng, schedule, k):
    out = []
    for _ in range(k):
        plus = [obs.outcomes[int(rng.integers(len(obs.outcomes)))] for obs in schedule.observables]
        minus = [obs.outcomes[int(rng.integers(len(obs.outcomes)))] for obs in schedule.observables]
        minus[-1] = plus[-1]
        out.append((tuple(plus), tuple(minus)))
    return out


def _random_split(rng, n):
    picks = rng.integers(4, size=n)
    return [j + 1 for j, r in enumerate(picks) if r & 1], [j + 1 for j, r in enumerate(picks) if r & 2]


def _composite_reports(rng, tol: float, grid: int) -> list:
    fact, trace_dev, min_choi = 0.0, 0.0, 0.0
    for _ in range(3):
        sys_a, sys_b = random_system(rng, 2), random_system(rng, 2)
        comp = compose(sys_a, sys_b, 0.0, random_hermitian(rng, 2), random_hermitian(rng, 2))
        init_a, init_b = random_init(rng, sys_a), random_init(rng, sys_b)
        sa, sb = random_schedule(rng, 2, 2), random_schedule(rng, 2, 2)
        sb = MeasurementSchedule(0.0, tuple(zip(sa.times, sb.observables)))
        fact = max(fact, factorization_check(comp, init_a, init_b, sa, sb))
        coupled = compose(sys_a, sys_b, float(rng.uniform(-2, 2)), random_hermitian(rng, 2), random_hermitian(rng, 2))
        m, tp = choi_cptp_check(dynamical_map_exact(coupled, init_b, float(rng.uniform(0, 2))))
        trace_dev, min_choi = max(trace_dev, tp), min(min_choi, m)
    comp, init_a, init_b, schedule, fp, fm = dephasing_witness()
    exact = reduced_biprob_exact(comp, init_a, init_b, schedule, fp, fm)
    ms = [grid * 2**k for k in range(4)]
    errs = [abs(surrogate_biprob(comp, init_a, init_b, schedule, fp, fm, m, method=TRANSFER) - exact) for m in ms]
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    band = max(max(CONVERGENCE_BAND[0] - r, r - CONVERGENCE_BAND[1], 0.0) for r in ratios)
    map_exact = dynamical_map_exact(comp, init_b, 1.0)
    map_errs = [float(np.max(np.abs(dynamical_map_path_sum(comp, init_b, 1.0, m, method=TRANSFER) - map_exact)))
                for m in ms]
    map_band = max(max(CONVERGENCE_BAND[0] - r, r - CONVERGENCE_BAND[1], 0.0)
                   for r in (b / a for a, b in zip(map_errs, map_errs[1:])))
    transpose_min = choi_cptp_check(transpose_superop(2))[0]
    return [
        ExperimentReport("q3_factorization", fact, tol),
        ExperimentReport("dynamical_map_trace", trace_dev, tol),
        ExperimentReport("dynamical_map_choi", max(0.0, -min_choi), CHOI_TOL),
        ExperimentReport("surrogate_convergence", band, 0.0, witness={"ratios": ratios}),
        ExperimentReport("dynamical_map_convergence", map_band, 0.0),
        ExperimentReport("transpose_not_cp", -transpose_min, 0.5, VIOLATION),
    ]


def _witness_reports(tol: float) -> list:
    sys, init, schedule = x_then_z()
    offdiag, cons = classical_limit_witness(sys, init, schedule)
    return [
        inconsistency_witness(sys, init, schedule, 1),
        ExperimentReport("interference_mass", offdiag, 0.5, VIOLATION, witness={"value": offdiag}),
    ]
