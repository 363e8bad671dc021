"""Kinetic-energy cutoff: error against the uncut flow as modes are added."""

import numpy as np

from artifact import dynamics_fermi as df
from artifact import lattice as lat
from artifact import quasifree as qf

grid = lat.build_grid(8, 1, 2 * np.pi)
h = lat.build_kinetic(grid)
V = lat.make_potential(grid, "gaussian", 1.0, 1.0)
s = qf.random_quasifree(8, 2, "paired")
ref = df.integrate(s, h, V, 0.5, 1e-3).final

th = df.cutoff_thresholds(h)
print(" cutoff  modes  error")
for L in list(0.5 * (th[:-1] + th[1:])) + [th[-1] + 1.0]:
    tr = df.cutoff_evolve(s, h, V, L, 0.5, 1e-3, store_every=500)
    P = getattr(tr, "projector", np.eye(grid.n))
    err = lat.pair_norm(tr.final.gamma - ref.gamma, tr.final.alpha - ref.alpha)
    print(f"{L:7.2f}  {int(round(np.trace(P).real)):5d}  {err:.2e}")
