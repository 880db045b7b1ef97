"""Which structure algebras can carry an infinitesimally rigid Lie foliation?

Walk through the algebra-level obstructions: perfectness (H^1 = 0), the
Killing form, and whether a simple factor isomorphic to so(3) appears.

    python demos/algebra_obstructions.py
"""
from __future__ import annotations

from rigidfol import liealg
from rigidfol.suspension import rigidity_pipeline

for name, g in liealg.rigidity_inputs().items():
    print(f"--- {name}")
    print("betti numbers:", g.betti_numbers())
    print(rigidity_pipeline(g).summary())

# so(3) + so(5): the so(3) summand can be split off as an ideal
g = liealg.direct_sum(liealg.so3(), liealg.so(5))
ideal = g.simple_decomposition().ideals[0]
rep = rigidity_pipeline(g, ideal=ideal)
print("--- so3 + so5, reducing by an ideal of dimension", rep.ideal["dim"])
print("H^1 of the ideal:", rep.ideal["h1_dim"], "| quotient dim:", rep.ideal["quotient_dim"])
