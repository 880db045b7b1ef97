"""The form x1^2 + x2^2 + x3^2 - sqrt2 x4^2 - sqrt2 x5^2 over Z[sqrt2].

Its Galois conjugate is positive definite, so SO_Phi(Z[sqrt2]) embeds in the
compact group SO(5).  We find integral elements, push them to SO(5), and watch
the word balls fill the group: the covering radius shrinks and the averaging
operator has norm below one on low-degree harmonics.

    python demos/worked_example.py          # about half a minute
"""
from __future__ import annotations

import numpy as np

from rigidfol import dynamics, qform

phi = qform.example_form()
cls = qform.classify_embeddings(phi)
print("signatures:", cls.signatures, "| definite under:", cls.definite_set)
print("anisotropic:", qform.anisotropy_by_conjugate_definiteness(phi))

gens = qform.search_generators(phi, height=10, per_plane=8)
print(f"{len(gens.elements)} integral elements found, all certified: {gens.verify()}")
chosen = qform.select_dense_generators(gens, 4)
for e in chosen.elements:
    print("  selected", e.word[0][0], "order:", qform.element_order(e) or "infinite")

images = [qform.galois_embed_element(e).orthogonal for e in chosen.elements]
ball = dynamics.enumerate_ball(images, 5)
density = dynamics.covering_radius(ball, 300, seed=0)
for r, c, s in zip(density.radii, density.covering_radii, density.ball_sizes):
    print(f"radius {r}: {s:6d} elements, covering radius {c:.3f}")

for d in (1, 2, 3):
    est = dynamics.averaging_operator_norm(images, dynamics.harmonic_space(5, d))
    w = dynamics.weyl_sums(ball, dynamics.harmonic_space(5, d))
    print(f"degree {d}: averaging norm {est.estimate:.4f}, Weyl sum over the ball {w:.4f}")

# for comparison: Haar-random points in SO(5) at the largest ball size
rand = dynamics.haar_orthogonal(5, len(ball), seed=1)
print("mean squared trace of Haar samples (exactly 1 in the limit):", (np.trace(rand, axis1=1, axis2=2) ** 2).mean())
