"""A qubit dephased by a frozen partner, seen through bi-trajectories.

The partner's sigma_z eigenvalue paths act as a complex-weighted drive on
the qubit.  The path sum converges to the exact reduced bi-probability at
first order in the step, and its dynamical map is completely positive.
"""
import numpy as np

from bitraj.composite import (
    TRANSFER,
    bitrajectories,
    choi_cptp_check,
    dynamical_map_exact,
    dynamical_map_path_sum,
    reduced_biprob_exact,
    surrogate_biprob,
)
from bitraj.witnesses import dephasing_witness

comp, init_a, init_b, schedule, fp, fm = dephasing_witness()
exact = reduced_biprob_exact(comp, init_a, init_b, schedule, fp, fm)
print(f"exact Q({fp}, {fm}) = {exact:.6f}")

paths = bitrajectories(comp, init_b, 1.0, 3)
print(f"{len(paths)} bi-trajectories on 3 steps, total weight {sum(p.weight for p in paths):.6f}")

previous = None
for m in (4, 8, 16, 32, 64):
    method = TRANSFER if m > 8 else "enumerate"
    err = abs(surrogate_biprob(comp, init_a, init_b, schedule, fp, fm, m, method=method) - exact)
    ratio = "" if previous is None else f"  ratio {err / previous:.3f}"
    print(f"  m={m:3d} ({method:9s}) error {err:.3e}{ratio}")
    previous = err

lam = dynamical_map_exact(comp, init_b, 1.0)
min_eig, trace_dev = choi_cptp_check(lam)
print(f"exact map: min Choi eigenvalue {min_eig:.2e}, trace deviation {trace_dev:.1e}")
gap = np.max(np.abs(dynamical_map_path_sum(comp, init_b, 1.0, 64, method=TRANSFER) - lam))
print(f"path-sum map at m=64 differs by {gap:.2e}")
