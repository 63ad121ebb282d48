"""Frame coordinates: every observable as a point in the generator basis."""
import numpy as np

from bitraj.instances import random_instance
from bitraj.master import (
    coords_to_unitary,
    decomposition_check,
    generator_basis,
    multitime_correlation,
    multitime_moments,
    observable_to_coords,
    round_trip_residual,
)
from bitraj.witnesses import qubit_devices

basis = generator_basis(2)
x = qubit_devices()[0]
cx = observable_to_coords(basis, x)
print("X frame coordinates:", np.round(cx.coord.phi, 6), "index map", cx.index_map)
print("frame unitary:\n", np.round(coords_to_unitary(basis, cx.coord.phi), 6))
print(f"round trip residual {round_trip_residual(basis, x, cx):.1e}")

sys, init, schedule = random_instance(2024, 3, 2)
fp = tuple(o.outcomes[0] for o in schedule.observables)
fm = (schedule.observables[0].outcomes[-1], fp[-1])
print(f"bi-probability from system bi-probabilities: deviation {decomposition_check(sys, init, schedule, fp, fm):.1e}")

ops = [np.diag([1.0, 0.0, -1.0]), np.diag([0.5, 2.0, 0.0])]
direct = multitime_correlation(sys, init, schedule.times, ops, [1, 2], [2])
moments = multitime_moments(sys, init, schedule.times, ops, [1, 2], [2])
print(f"correlation {direct:.6f} vs moments form {moments:.6f}")
