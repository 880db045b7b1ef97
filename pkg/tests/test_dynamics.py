from __future__ import annotations

from math import comb

import numpy as np
import pytest
import sympy as sp

from oracles import naive_ball
from rigidfol import dynamics as dy


def test_haar_samples_are_rotations():
    g = dy.haar_orthogonal(5, 50, seed=1)
    assert np.abs(np.einsum("bji,bjk->bik", g, g) - np.eye(5)).max() < 1e-12
    assert np.allclose(np.linalg.det(g), 1)
    # first moment of Haar measure vanishes
    big = dy.haar_orthogonal(3, 4000, seed=2)
    assert np.abs(big.mean(axis=0)).max() < 0.05


def test_haar_is_deterministic():
    assert np.array_equal(dy.haar_orthogonal(4, 5, 9), dy.haar_orthogonal(4, 5, 9))


def test_ball_matches_naive_closure():
    rng_gens = dy.haar_orthogonal(3, 2, seed=4)
    ball = dy.enumerate_ball(list(rng_gens), 4)
    assert [ball.count(r) for r in range(1, 5)] == naive_ball(list(rng_gens), 4)
    # free group on 2 letters: 1 + 4 + 12 + 36 + 108
    assert ball.level_starts == [0, 1, 5, 17, 53, 161]


def test_ball_of_finite_group_flags_finiteness():
    r = dy.plane_rotation(3, 0, 1, 2 * np.pi / 5)
    ball = dy.enumerate_ball([r], 6)
    assert len(ball) == 5
    assert ball.finite
    assert naive_ball([r], 6)[-1] == 5


def test_ball_words_spell_elements():
    gens = list(dy.haar_orthogonal(3, 2, seed=8))
    ball = dy.enumerate_ball(gens, 3)
    for w, m in zip(ball.words, ball.elements):
        p = np.eye(3)
        for k in w:
            p = p @ ball.generators[k]
        assert np.abs(p - m).max() < 1e-12
    assert ball.spell(()) == "1"


def test_ball_worker_independence():
    gens = list(dy.haar_orthogonal(4, 3, seed=3))
    a = dy.enumerate_ball(gens, 4, workers=1)
    b = dy.enumerate_ball(gens, 4, workers=3)
    assert a.words == b.words and np.array_equal(a.elements, b.elements)


def test_ball_budget():
    with pytest.raises(dy.BudgetExceeded):
        dy.enumerate_ball(list(dy.haar_orthogonal(3, 2, seed=0)), 6, cap=100)


def test_ball_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        dy.enumerate_ball([2 * np.eye(3)], 2)


def test_ball_cache_round_trip_and_tamper(tmp_path):
    ball = dy.enumerate_ball(list(dy.haar_orthogonal(3, 2, seed=5)), 3)
    path = tmp_path / "ball.json"
    ball.save(path)
    again = dy.WordBall.load(path)
    assert again.words == ball.words and np.array_equal(again.elements, ball.elements)
    assert again.input_hash() == ball.input_hash()
    text = path.read_text().replace('"radius": 3', '"radius": 4')
    path.write_text(text)
    with pytest.raises(ValueError, match="integrity"):
        dy.WordBall.load(path)


def test_covering_radius_circle_closed_form():
    # k equally spaced rotations: Frobenius distance 2 sqrt2 |sin(theta/2)|, worst gap at angle pi/k
    k = 12
    ball = dy.enumerate_ball([dy.rotation2(2 * np.pi / k)], k)
    assert ball.finite and len(ball) == k
    probes = np.stack([dy.rotation2(t) for t in np.linspace(0, 2 * np.pi, 2001)])
    rep = dy.covering_radius(ball, probes, radii=[ball.radius])
    exact = 2 * np.sqrt(2) * np.sin(np.pi / (2 * k))
    assert rep.covering_radii[-1] <= exact + 1e-12
    assert rep.covering_radii[-1] > exact - 1e-3


def test_covering_radius_report():
    ball = dy.enumerate_ball(list(dy.haar_orthogonal(3, 2, seed=6)), 4)
    rep = dy.covering_radius(ball, 200, seed=1)
    assert rep.weakly_decreasing()
    assert rep.ball_sizes == [ball.count(r) for r in range(1, 5)]
    assert rep.csv().splitlines()[0] == "radius,covering_radius"
    assert dy.covering_radius(ball, 200, seed=1).covering_radii == rep.covering_radii


@pytest.mark.parametrize("n, d", [(2, 3), (3, 2), (3, 4), (5, 1), (5, 3), (5, 4)])
def test_harmonic_dimension_formula(n, d):
    expected = comb(n + d - 1, d) - (comb(n + d - 3, d - 2) if d >= 2 else 0)
    assert dy.harmonic_dimension(n, d) == expected
    assert dy.harmonic_space(n, d).dimension == expected


def test_harmonic_basis_killed_by_sympy_laplacian():
    n, d = 3, 3
    hs = dy.harmonic_space(n, d)
    xs = sp.symbols(f"x0:{n}")
    for vec in hs.basis:
        p = sum(sp.Rational(c.numerator, c.denominator) * sp.prod([x**e for x, e in zip(xs, m)])
                for c, m in zip(vec, hs.monomials))
        assert sp.expand(sum(sp.diff(p, x, 2) for x in xs)) == 0


def test_representation_is_orthogonal_homomorphism():
    hs = dy.harmonic_space(5, 3)
    g = dy.haar_orthogonal(5, 3, seed=7)
    r = dy.represent(g, hs)
    assert np.abs(r[0] @ r[1] - dy.represent(g[0] @ g[1], hs)).max() < 1e-12
    assert np.abs(r[2] @ r[2].T - np.eye(hs.dimension)).max() < 1e-12
    assert np.abs(dy.represent(np.eye(5), hs) - np.eye(hs.dimension)).max() < 1e-14


def test_substitution_matches_sympy():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(3, 3))
    xs = sp.symbols("x0:3")
    mons = dy.monomials(3, 3)
    s = dy.substitution_matrices(h, 3)
    hx = [sum(sp.Float(h[i, j], 30) * xs[j] for j in range(3)) for i in range(3)]
    for c, m in enumerate(mons):
        p = sp.Poly(sp.expand(sp.prod([hx[i] ** m[i] for i in range(3)])), *xs)
        for r, mm in enumerate(mons):
            assert abs(float(p.coeff_monomial(sp.prod([xs[i] ** mm[i] for i in range(3)]))) - s[r, c]) < 1e-12


def test_degree_one_is_standard_representation():
    hs = dy.harmonic_space(3, 1)
    g = dy.haar_orthogonal(3, 1, seed=2)[0]
    r = dy.represent(g, hs)
    # pi(g) p(x) = p(g^T x) on linear forms is conjugate to g itself
    assert np.allclose(sorted(np.linalg.eigvals(r), key=lambda z: (z.real, z.imag)),
                       sorted(np.linalg.eigvals(g), key=lambda z: (z.real, z.imag)))


@pytest.mark.parametrize("alpha", [0.1, 0.3141, np.sqrt(2) - 1])
def test_averaging_norm_circle_closed_form(alpha):
    hs = dy.harmonic_space(2, 1)
    est = dy.averaging_operator_norm([dy.rotation2(2 * np.pi * alpha)], hs)
    assert est.converged
    assert abs(est.estimate - abs(np.cos(2 * np.pi * alpha))) < 1e-8


def test_averaging_norm_bounds_and_invariants():
    gens = list(dy.haar_orthogonal(3, 2, seed=11))
    for d in (1, 2, 3):
        est = dy.averaging_operator_norm(gens, dy.harmonic_space(3, d))
        assert est.converged and est.estimate <= 1 + 1e-8
        assert est.invariant_dim == 0
    # identity generator: everything is invariant, no complement
    assert dy.averaging_operator_norm([np.eye(3)], dy.harmonic_space(3, 2)).estimate is None


def test_exact_invariant_path_for_integer_generators():
    perm = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    hs = dy.harmonic_space(3, 2)
    rhos = dy.represent(perm[None], hs)
    inv, path = dy.invariant_subspace(rhos, [perm], hs)
    inv_svd, path_svd = dy.invariant_subspace(rhos)
    assert path == "exact" and path_svd == "svd"
    assert inv.shape[1] == inv_svd.shape[1] == 1  # x0 x1 + x1 x2 + x2 x0


def test_power_iteration_nonconvergence():
    gens = list(dy.haar_orthogonal(4, 2, seed=1))
    with pytest.raises(dy.NotConverged):
        dy.averaging_operator_norm(gens, dy.harmonic_space(4, 3), tol=1e-15, max_iters=2)


def test_weyl_sum_of_full_cyclic_group_vanishes():
    ball = dy.enumerate_ball([dy.rotation2(2 * np.pi / 7)], 8)
    assert dy.weyl_sums(ball, dy.harmonic_space(2, 1)) < 1e-12


def test_weyl_sum_matches_direct_average():
    ball = dy.enumerate_ball(list(dy.haar_orthogonal(5, 2, seed=3)), 3)
    hs = dy.harmonic_space(5, 2)
    direct = np.linalg.norm(dy.represent(ball.elements, hs).mean(axis=0), 2)
    assert abs(dy.weyl_sums(ball, hs, batch=7) - direct) < 1e-12


def test_harmonic_cap():
    with pytest.raises(dy.BudgetExceeded):
        dy.harmonic_space(5, 8, cap=100)
