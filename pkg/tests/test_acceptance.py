"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines as they
are produced; they are also collected in the terminal summary.
"""
from __future__ import annotations

import itertools
import json
import random
import time
from importlib import resources

import numpy as np
import pytest
import sympy as sp

from oracles import (ce_betti, crossed_hom_h1, mutation_corpus, zs2_from_element, zs2_in_special_orthogonal)
from rigidfol import cli, dynamics, groupcoh, liealg, qform, suspension
from rigidfol.exactnum import ExactMatrix, QSQRT2, QuadElement

DATA = resources.files("rigidfol") / "data"


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


# ---------------------------------------------------------------------------


def test_criterion_1_exact_algebra_suite(report_line):
    def work():
        bases = [g.to_dict() for g in liealg.rigidity_inputs().values()]
        corpus = mutation_corpus(bases, 220, seed=2024)
        rejected = 0
        for doc, _ in corpus:
            try:
                liealg.LieAlgebra.from_dict(json.loads(json.dumps(doc)))
            except liealg.InvalidStructureConstants:
                rejected += 1
        algebras = [liealg.so3(), liealg.so(4), liealg.so(5), liealg.heisenberg(), liealg.abelian(4)]
        square_zero = True
        for g in algebras:
            for k in range(g.dim - 1):
                d0 = g.ce_differential(k).to_matrix()
                d1 = g.ce_differential(k + 1).to_matrix()
                square_zero &= (d1 @ d0).is_zero()
        return len(corpus), rejected, square_zero

    (total, rejected, square_zero), dt = _timed(work)
    ok = total >= 200 and rejected == total and square_zero and dt < 10
    report_line(1, ok, f"{rejected}/{total} mutants rejected, d^2 = 0: {square_zero}, {dt:.1f}s")
    assert ok


def test_criterion_2_cohomology_values(report_line):
    cases = [
        ("so3", liealg.so3(), 1, 0), ("so4", liealg.so(4), 1, 0), ("so5", liealg.so(5), 1, 0),
        ("abelian3", liealg.abelian(3), 1, 3), ("abelian4", liealg.abelian(4), 1, 4),
        ("heisenberg", liealg.heisenberg(), 1, 2), ("so3", liealg.so3(), 3, 1),
    ]

    def work():
        rows = []
        for name, g, k, expected in cases:
            lib = g.ce_cohomology(k).dimension
            oracle = ce_betti(g.to_dict(), degrees=[k])[k]
            rows.append((name, k, lib, oracle, expected))
        return rows

    rows, dt = _timed(work)
    ok = all(lib == oracle == exp for _, _, lib, oracle, exp in rows) and dt < 30
    detail = ", ".join(f"H{k}({n})={lib}" for n, k, lib, _, _ in rows)
    report_line(2, ok, f"{detail}; oracle agrees; {dt:.1f}s")
    assert ok


def test_criterion_3_decomposition(report_line):
    def work():
        d4 = liealg.so(4).simple_decomposition()
        d5 = liealg.so(5).simple_decomposition()
        return d4.dims, liealg.so(4).detect_so3_factor(), d5.dims, liealg.so(5).detect_so3_factor()

    (dims4, so3_4, dims5, so3_5), dt = _timed(work)
    ok = dims4 == [3, 3] and so3_4 and dims5 == [10] and not so3_5 and dt < 5
    report_line(3, ok, f"so(4) -> {dims4} so3={so3_4}; so(5) -> {dims5} so3={so3_5}; {dt:.1f}s")
    assert ok


def test_criterion_4_worked_example(report_line):
    def work():
        phi = qform.example_form()
        s = QuadElement(0, 1)
        conj_ok = qform.conjugate_form(phi, 2).matrix == ExactMatrix.diag([1, 1, 1, s, s], QSQRT2)
        sigs = (qform.real_signature(phi, 1), qform.real_signature(phi, 2))
        cls = qform.classify_embeddings(phi)
        return conj_ok, sigs, cls.definite_set, qform.anisotropy_by_conjugate_definiteness(phi)

    (conj_ok, sigs, t_set, aniso), dt = _timed(work)
    ok = conj_ok and sigs == ((3, 2), (5, 0)) and t_set == [2] and aniso and dt < 5
    report_line(4, ok, f"conjugate form exact: {conj_ok}, signatures {sigs}, T = {t_set}, anisotropic {aniso}; "
                       f"{dt:.1f}s")
    assert ok


def _pairs(m: ExactMatrix):
    return [[zs2_from_element(x) for x in r] for r in m.rows]


def test_criterion_5_lattice_exactness(report_line):
    phi = qform.example_form()
    gram = _pairs(phi.matrix)

    def work():
        produced = []
        for i, j in itertools.combinations(range(phi.n), 2):
            try:
                produced.extend(qform.plane_rotation_search(phi, i, j, height=10))
            except ValueError:
                continue
        vecs = qform.integral_reflection_vectors(phi)
        for v, w in zip(vecs, vecs[1:]):
            try:
                produced.append(qform.reflection_pair(phi, v, w))
            except (qform.NonIntegral, qform.NotAMember):
                continue
        rng = random.Random(5)
        products = []
        for _ in range(1000):
            k = rng.randint(2, 4)
            p = rng.choice(produced)
            for _ in range(k - 1):
                q = rng.choice(produced)
                p = p @ (q if rng.random() < 0.5 else q.inverse())
            products.append(p)
        bad = 0
        worst = 0.0
        for e in produced + products:
            pairs = _pairs(e.matrix)
            integral = all(x is not None for r in pairs for x in r)
            if not (integral and zs2_in_special_orthogonal(pairs, gram)):
                bad += 1
            img = qform.galois_embed_element(e)
            o = img.orthogonal
            worst = max(worst, img.residual, float(np.abs(o.T @ o - np.eye(5)).max()))
        return len(produced), len(products), bad, worst

    (n_prod, n_products, bad, worst), dt = _timed(work)
    ok = n_prod > 0 and n_products == 1000 and bad == 0 and worst <= 1e-12 and dt < 60
    report_line(5, ok, f"{n_prod} generators + {n_products} products, {bad} failures, "
                       f"max embedding residual {worst:.1e}; {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# criteria 6 and 7 share the worked-example generator images


@pytest.fixture(scope="module")
def worked_images():
    start = time.perf_counter()
    phi = qform.example_form()
    gens = qform.search_generators(phi, height=10, per_plane=8)
    chosen = qform.select_dense_generators(gens, 4)
    images = [qform.galois_embed_element(e).orthogonal for e in chosen.elements]
    return images, time.perf_counter() - start


def test_criterion_6_density(report_line, worked_images):
    images, setup = worked_images

    def work():
        ball = dynamics.enumerate_ball(images, 6)
        return dynamics.covering_radius(ball, 500, seed=0)

    rep, dt = _timed(work)
    c = rep.covering_radii
    weak = rep.weakly_decreasing()
    strict_after_2 = any(c[k + 1] < c[k] for k in range(1, len(c) - 1))
    ok = (weak and (strict_after_2 or rep.finite)) and setup + dt < 300
    report_line(6, ok, "covering radii " + ", ".join(f"{x:.3f}" for x in c)
                + f" (finite={rep.finite}); {setup + dt:.1f}s")
    assert ok


def test_criterion_7_spectral_gap(report_line, worked_images):
    images, setup = worked_images

    def work():
        out = []
        for d in (1, 2, 3, 4):
            out.append(dynamics.averaging_operator_norm(images, dynamics.harmonic_space(5, d),
                                                        tol=1e-8, max_iters=500))
        circle = []
        for alpha in (0.1, 0.25 + 1e-3, np.sqrt(2) - 1, 0.4):
            est = dynamics.averaging_operator_norm([dynamics.rotation2(2 * np.pi * alpha)],
                                                   dynamics.harmonic_space(2, 1))
            circle.append(abs(est.estimate - abs(np.cos(2 * np.pi * alpha))))
        return out, circle

    (gaps, circle), dt = _timed(work)
    ok = all(g.converged and g.iterations <= 500 and g.estimate <= 1 + 1e-8 for g in gaps)
    ok = ok and max(circle) <= 1e-8 and dt < 120
    report_line(7, ok, "norms " + ", ".join(f"d{g.degree}={g.estimate:.4f}" for g in gaps)
                + f"; S^1 max error {max(circle):.1e}; {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------


def _corpus_cases():
    for path in sorted((DATA / "reps").iterdir()):
        pres_name, _ = path.name[:-5].split("__")
        pres = groupcoh.Presentation.load(DATA / "presentations" / f"{pres_name}.json")
        yield pres, json.loads(path.read_text())


def test_criterion_8_fox_oracle(report_line):
    def work():
        checked = mismatches = 0
        for pres, doc in _corpus_cases():
            if pres.ngens > 3 or len(pres.relators) > 2 or any(len(r) > 6 for r in pres.relators):
                continue
            rep = groupcoh.MatrixRep.from_dict(pres, doc)
            if rep.dim > 3:
                continue
            lib = groupcoh.h1_dimension(pres, rep)
            mats = {g: sp.Matrix([[sp.Rational(x) for x in r] for r in doc[g]]) for g in pres.generators}
            rels = [[(pres.generators[g], e) for g, e in r] for r in pres.relators]
            oracle = crossed_hom_h1(list(pres.generators), rels, mats)
            checked += 1
            mismatches += (lib.dim_z1, lib.dim_b1, lib.dim_h1) != oracle
        known = {
            "Z": groupcoh.free_group(1), "Z^2": groupcoh.free_abelian_rank2(),
            "Z/2": groupcoh.cyclic_group(2), "F2": groupcoh.free_group(2),
        }
        values = {k: groupcoh.h1_dimension(p, groupcoh.MatrixRep.trivial(p)).dim_h1 for k, p in known.items()}
        return checked, mismatches, values

    (checked, mismatches, values), dt = _timed(work)
    ok = checked >= 40 and mismatches == 0 and values == {"Z": 1, "Z^2": 2, "Z/2": 0, "F2": 2} and dt < 30
    report_line(8, ok, f"{checked} corpus cases, {mismatches} mismatches; known values {values}; {dt:.1f}s")
    assert ok


def test_criterion_9_maurer_cartan(report_line):
    def work():
        so3 = suspension.mc_residual(suspension.MCChart(3))
        so2 = suspension.mc_residual(suspension.MCChart(2, base_dim=1))
        chart = suspension.MCChart(3, samples=4)
        gammas = dynamics.haar_orthogonal(3, 20, seed=11)
        inv = max(suspension.invariance_residual(chart, g, seed=k) for k, g in enumerate(gammas))
        return so3, so2, inv

    (so3, so2, inv), dt = _timed(work)
    ok = so3.order is not None and 1.7 <= so3.order <= 2.3 and max(so2.residuals) <= 1e-13
    ok = ok and inv <= 1e-10 and dt < 30
    report_line(9, ok, f"SO(3) order {so3.order:.3f}, SO(2) residual {max(so2.residuals):.1e}, "
                       f"invariance {inv:.1e}; {dt:.1f}s")
    assert ok


def test_criterion_10_determinism(report_line, tmp_path):
    def forge(out, workers):
        code = cli.run(["forge", "--seed", "0", "--workers", str(workers), "--out", str(out)], env={})
        assert code == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if "manifest" not in p.name}

    def work():
        return forge(tmp_path / "a", 1), forge(tmp_path / "b", 1), forge(tmp_path / "c", 4)

    (a, b, c), dt = _timed(work)
    ok = bool(a) and a == b == c and dt < 600
    report_line(10, ok, f"{len(a)} report files byte-identical across repeat and 4 workers: {a == b == c}; "
                        f"{dt:.1f}s")
    assert ok
