"""Group cohomology by Fox calculus, and flatness of the Maurer-Cartan form.

    python demos/cohomology_and_suspension.py
"""
from __future__ import annotations

import numpy as np

from rigidfol import dynamics, groupcoh, suspension

for name, pres in [("Z", groupcoh.free_group(1)), ("Z^2", groupcoh.free_abelian_rank2()),
                   ("Z/2", groupcoh.cyclic_group(2)), ("F2", groupcoh.free_group(2)),
                   ("genus 2", groupcoh.surface_group(2))]:
    r = groupcoh.h1_dimension(pres, groupcoh.MatrixRep.trivial(pres))
    print(f"H^1({name}; R) = {r.dim_h1}")

# Z acting on S^1 by an irrational rotation: no invariant harmonics, no cohomology
rot = dynamics.rotation2(2 * np.pi * (np.sqrt(2) - 1))
for r in groupcoh.truncated_rigidity_check(groupcoh.free_group(1), [rot], degrees=[1, 2, 3]):
    print(f"degree {r.degree}: dim H^1 = {r.dim_h1}")

# a finite model of a suspension: leaves correspond to orbits
act = suspension.FiniteAction(("a", "b"), [[1, 2, 0, 3, 4, 5], [0, 1, 2, 4, 5, 3]])
print("orbit sizes:", suspension.orbits(act).sizes)

rep = suspension.mc_residual(suspension.MCChart(3))
print("SO(3) residuals:", ", ".join(f"{x:.2e}" for x in rep.residuals), f"order {rep.order:.2f}")
rep = suspension.mc_residual(suspension.MCChart(2, base_dim=1))
print("SO(2) x R residuals:", rep.residuals)
