"""Survival of Z=+1 under H = (pi/2) sigma_x, checked n times in unit time."""
import numpy as np

from bitraj.phenomenology import short_time_decay, zeno_experiment
from bitraj.system import survival_variance
from bitraj.witnesses import zeno_closed_form, zeno_qubit

sys, z = zeno_qubit()
print(" n     survival    cos^2n(pi/2n)")
for n in [1, 2, 4, 8, 16, 32, 64, 100, 128, 256]:
    print(f"{n:4d}  {zeno_experiment(sys, z, 1, 1.0, n):.8f}  {zeno_closed_form(n):.8f}")

var = survival_variance(sys, z, 1, 0.0)
print(f"energy variance {var:.10f} (pi^2/4 = {np.pi**2 / 4:.10f})")
for dt in (1e-1, 1e-2, 1e-3):
    print(f"  (1 - P)/dt^2 at dt={dt:g}: {short_time_decay(sys, z, 1, 0.0, dt):.8f}")
