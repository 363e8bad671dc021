"""HFB evolution of a condensate with pair fluctuations.

Prints the conserved total particle number, the conserved tr(P^2 - P) and the
distance from the Bogoliubov manifold along the trajectory.
"""

import numpy as np

from artifact import dynamics_bose as db
from artifact import lattice as lat

grid = lat.build_grid(4, 1, 2 * np.pi)
h = lat.build_kinetic(grid)
V = lat.make_potential(grid, "gaussian", 1.0, 1.0)
s = db.random_bogoliubov(4, 3, 0.5, 1.0)

tr = db.integrate_hfb(s, h, V, 1.0, 1e-3, store_every=100)
print("    t   total N        tr(P^2-P)      |Gt S Gt + Gt|")
for t, r in list(zip(tr.times, tr.reports))[::100]:
    print(f"{t:5.2f}   {r.total_N:.12f} {r.purity_quantity:.12f} {r.bogoliubov_residual:.1e}")
