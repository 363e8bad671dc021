"""Picard iteration of the Duhamel form on growing time intervals.

The contraction factor estimated from successive differences grows with the
interval; past a threshold the iteration diverges and NoContraction is raised.
"""

import numpy as np

from artifact import dynamics_fermi as df
from artifact import lattice as lat
from artifact import quasifree as qf
from artifact.errors import NoContraction

grid = lat.build_grid(4, 1, 2 * np.pi)
h = lat.build_kinetic(grid)
V = lat.make_potential(grid, "gaussian", 10.0, 1.0)
s = qf.random_quasifree(4, 11, "paired")

for T in (0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 2.5):
    try:
        tr, rep = df.picard_solve(s, h, V, T, 64)
        print(f"T={T:4.2f}: {rep.iterations:3d} iterations, contraction {rep.contraction:.3f}")
    except NoContraction as e:
        print(f"T={T:4.2f}: no contraction, last differences "
              + " ".join(f"{d:.1e}" for d in e.differences[-4:]))
