"""Bi-probabilities of sequential quantum measurements.

Finite-dimensional systems, measurement schedules, complex bi-probability
tables and their properties, composite systems driven by bi-trajectories,
and a command-line runner for the invariant suite.
"""
from .biprob import (
    BiProbabilityTable,
    GudderMetric,
    biprob,
    check_additivity,
    check_bi_consistency,
    check_positivity,
    conditional,
    effect_operator,
    full_table,
    probabilities,
    probability,
    pseudo_metric,
)
from .composite import (
    CompositeSystem,
    choi_cptp_check,
    compose,
    dynamical_map_exact,
    dynamical_map_path_sum,
    factorization_check,
    moments_identity_check,
    reduced_biprob_exact,
    surrogate_biprob,
)
from .config import RunConfig, parse_config
from .errors import *  # noqa: F401,F403
from .master import (
    CoordinateObservable,
    GeneratorBasis,
    SpaceTimeCoordinate,
    classical_limit_witness,
    coords_to_unitary,
    decomposition_check,
    generator_basis,
    multitime_correlation,
    observable_to_coords,
    system_biprob,
)
from .phenomenology import (
    ExperimentReport,
    causality_experiment,
    coarse_grain_placement_experiment,
    inconsistency_witness,
    markov_experiment,
    statics_equivalence,
    uncertainty_correlation,
    zeno_experiment,
)
from .system import (
    InitializationEvent,
    MeasurementSchedule,
    Observable,
    QuantumSystem,
    Resolution,
    coarse_grain,
    evolution,
    heisenberg_projector,
    initialize,
    observable_from_matrix,
    pure_initialization,
)

__version__ = "0.1.0"
