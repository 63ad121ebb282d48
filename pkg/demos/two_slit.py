"""Interference in a two-time qubit sequence.

A frozen qubit prepared in Z=+1 is read by X at t=1 (the slits) and by Z at
t=2 (the screen).  The off-diagonal bi-probabilities carry the interference
that makes the interior X marginal disagree with an experiment in which X
was never deployed.
"""
from bitraj.biprob import check_positivity, full_table
from bitraj.master import classical_limit_witness
from bitraj.phenomenology import coarse_grain_placement_experiment, inconsistency_witness
from bitraj.system import Resolution
from bitraj.witnesses import x_then_z

sys, init, schedule = x_then_z()
table = full_table(sys, init, schedule)
print("bi-probabilities, chronological (x, z) pairs:")
for (a, b), v in table.values.items():
    print(f"  Q({table.outcomes(a)}, {table.outcomes(b)}) = {v.real:+.3f}")

metric = check_positivity(table)
print(f"Gram rank {metric.rank}, smallest eigenvalue {metric.min_eigenvalue:.1e}")

print(f"summing out X vs never measuring it: {inconsistency_witness(sys, init, schedule, 1).deviation:.3f}")
terminal, interior = coarse_grain_placement_experiment(
    sys, init, schedule, 1, Resolution.full(schedule.observables[0]))
print(f"fully blurred slits: terminal {terminal:.1e}, interior {interior:.3f}")
mass, dev = classical_limit_witness(sys, init, schedule)
print(f"interference mass {mass:.3f}, consistency deviation {dev:.3f}")
