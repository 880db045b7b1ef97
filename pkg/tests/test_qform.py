from __future__ import annotations

import json
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from rigidfol import qform
from rigidfol.exactnum import QCBRT2, QQ, QSQRT2, CubicElement, ExactMatrix, QuadElement
from rigidfol.qform import QuadraticForm

S = QuadElement(0, 1)


@pytest.fixture(scope="module")
def phi():
    return qform.example_form()


@pytest.fixture(scope="module")
def gens(phi):
    return qform.search_generators(phi, height=10, per_plane=8)


def test_conjugate_form(phi):
    conj = qform.conjugate_form(phi, 2)
    assert conj.matrix == ExactMatrix.diag([1, 1, 1, S, S], QSQRT2)
    assert qform.conjugate_form(phi, 1).matrix == phi.matrix


def test_signatures_and_embedding_sets(phi):
    assert qform.real_signature(phi, 1) == (3, 2)
    assert qform.real_signature(phi, 2) == (5, 0)
    cls = qform.classify_embeddings(phi)
    assert cls.definite_set == [2]
    assert cls.all_embeddings == [1, 2]
    assert cls.lattice_hypothesis
    assert qform.anisotropy_by_conjugate_definiteness(phi)
    assert qform.almost_simple(phi)


def test_signature_matches_numeric_eigenvalues():
    rng = random.Random(5)
    for _ in range(20):
        n = 4
        rows = [[QSQRT2.zero()] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                x = QuadElement(rng.randint(-3, 3), rng.randint(-2, 2))
                rows[i][j] = rows[j][i] = x
        m = ExactMatrix(rows, QSQRT2)
        try:
            form = QuadraticForm(m)
        except qform.DegenerateForm:
            continue
        for sigma in (1, 2):
            ev = np.linalg.eigvalsh(m.to_float(sigma))
            if np.min(np.abs(ev)) < 1e-9:
                continue
            assert qform.real_signature(form, sigma) == (int((ev > 0).sum()), int((ev < 0).sum()))


def test_congruence_with_zero_diagonal():
    hyperbolic = QuadraticForm(ExactMatrix([[0, 1], [1, 0]], QQ))
    assert qform.real_signature(hyperbolic) == (1, 1)
    assert qform.find_isotropic_vector(hyperbolic, 1) is not None


def test_rational_definite_form_compact_case():
    form = QuadraticForm.diagonal([1] * 5, QQ)
    cls = qform.classify_embeddings(form)
    assert cls.definite_set == cls.all_embeddings == [1]
    assert not cls.lattice_hypothesis


def test_isotropic_witness():
    iso = QuadraticForm.diagonal([1, -1, 1, -S, -S], QSQRT2)
    assert not qform.anisotropy_by_conjugate_definiteness(iso)
    v = qform.find_isotropic_vector(iso, 1)
    assert v is not None and any(v) and iso(v) == QSQRT2.zero()


def test_no_small_isotropic_vector_for_example(phi):
    assert qform.find_isotropic_vector(phi, 1) is None


def test_cubic_conjugation_rejected():
    form = QuadraticForm.diagonal([1, 1, CubicElement(0, 1, 0)], QCBRT2)
    with pytest.raises(ValueError):
        qform.conjugate_form(form, 2)
    m = qform.embedded_matrix(form, 2)
    assert abs(complex(m[2, 2]) - 2 ** (1 / 3) * complex(-0.5, 3 ** 0.5 / 2)) < 1e-14
    assert qform.real_signature(form, 1) == (3, 0)


def test_form_file_round_trip(tmp_path, phi):
    path = tmp_path / "phi.json"
    phi.save(path)
    assert QuadraticForm.load(path).matrix == phi.matrix
    doc = json.loads(path.read_text())
    assert doc["field"] == "Q(sqrt2)"
    with pytest.raises(qform.FormError, match=r"entries\[0\]"):
        QuadraticForm.from_dict({"field": "Q(sqrt2)", "n": 2, "entries": [[0, 5, "1"]]})
    with pytest.raises(qform.DegenerateForm):
        QuadraticForm.from_dict({"field": "Q", "n": 2, "entries": [[0, 0, "1"]]})


def test_mixed_plane_rotations(phi):
    found = qform.plane_rotation_search(phi, 0, 3, height=10)
    # solutions of alpha^2 - sqrt2 gamma^2 = 1 within the box, by brute force over gamma
    assert len(found) == 5
    blocks = {(e.matrix[0, 0], e.matrix[3, 0]) for e in found}
    assert (QuadElement(3, 2), QuadElement(2, 2)) in blocks
    assert (QuadElement(-1, 0), QuadElement(0, 0)) in blocks
    for e in found:
        assert e.recheck().ok


def test_mixed_plane_matches_brute_force(phi):
    h = 4
    vals = [QuadElement(a, b) for a in range(-h, h + 1) for b in range(-h, h + 1)]
    one = QuadElement(1, 0)
    brute = set()
    for al in vals:
        for ga in vals:
            if al * al - S * ga * ga == one and not (al == one and not ga):
                be, de = S * ga, al
                if be.height() <= h:
                    brute.add((al, ga))
    found = {(e.matrix[0, 0], e.matrix[3, 0]) for e in qform.plane_rotation_search(phi, 0, 3, height=h)}
    assert found == brute


def test_definite_plane_finite_symmetries(phi):
    found = qform.plane_rotation_search(phi, 0, 1, height=1)
    assert len(found) == 3
    assert all(qform.element_order(e) in (2, 4) for e in found)


def test_reflections(phi):
    v = [1, 0, 0, 0, 0]
    r = qform.reflection(phi, v)
    assert r == ExactMatrix.diag([-1, 1, 1, 1, 1], QSQRT2)
    vecs = qform.integral_reflection_vectors(phi)
    assert len(vecs) == 62
    e = qform.reflection_pair(phi, vecs[0], vecs[1])
    assert e.recheck().ok
    with pytest.raises(qform.IsotropicVector):
        qform.reflection(QuadraticForm(ExactMatrix([[0, 1], [1, 0]], QQ)), [1, 0])


def test_membership_rejects_with_reasons(phi):
    with pytest.raises(qform.NotAMember) as info:
        qform.is_member(ExactMatrix.diag([-1, 1, 1, 1, 1], QSQRT2), phi)
    assert "determinant" in str(info.value)
    half = ExactMatrix.diag([Fraction(1, 2), 2, 1, 1, 1], QSQRT2)
    cert = qform.membership_certificate(half, phi)
    assert not cert.integral and not cert.preserves_form


def test_generator_set_verifies_and_round_trips(gens):
    assert gens.elements and gens.verify()
    again = qform.GeneratorSet.from_dict(json.loads(json.dumps(gens.to_dict())))
    assert [e.matrix for e in again.elements] == [e.matrix for e in gens.elements]


def test_inverse_and_products_exact(gens):
    rng = random.Random(0)
    els = gens.elements
    for _ in range(30):
        a, b = rng.choice(els), rng.choice(els)
        p = a @ b.inverse()
        assert p.recheck().ok
        assert (p @ p.inverse()).is_identity()


def test_galois_embedding_lands_in_so5(gens):
    for e in gens.elements:
        img = qform.galois_embed_element(e)
        assert img.residual <= 1e-12
        o = img.orthogonal
        assert np.abs(o.T @ o - np.eye(5)).max() < 1e-12
        assert abs(np.linalg.det(o) - 1) < 1e-12


def test_embedding_is_a_homomorphism(gens):
    a, b = gens.elements[0], gens.elements[-1]
    ia, ib = qform.galois_embed_element(a).orthogonal, qform.galois_embed_element(b).orthogonal
    iab = qform.galois_embed_element(a @ b).orthogonal
    assert np.abs(ia @ ib - iab).max() < 1e-12


def test_embedding_matches_sympy_conjugation(gens):
    e = qform.select_dense_generators(gens, 1).elements[0]
    m = sp.Matrix([[sp.Rational(x.a) - sp.Rational(x.b) * sp.sqrt(2) for x in r] for r in e.matrix.rows])
    a = sp.diag(1, 1, 1, sp.sqrt(2), sp.sqrt(2))
    assert sp.simplify(m.T * a * m - a) == sp.zeros(5, 5)
    root = sp.diag(1, 1, 1, 2 ** sp.Rational(1, 4), 2 ** sp.Rational(1, 4))
    expected = np.array((root * m * root.inv()).evalf(30).tolist(), dtype=float)
    assert np.abs(qform.galois_embed_element(e).orthogonal - expected).max() < 1e-12


def test_dense_selection_has_infinite_order(gens):
    sel = qform.select_dense_generators(gens, 4)
    assert len(sel.elements) == 4
    assert all(qform.element_order(e) is None for e in sel.elements)
    assert qform.infinite_order_candidates(gens)


def test_parallel_search_identical(phi):
    one = qform.plane_rotation_search(phi, 1, 4, height=6, workers=1)
    four = qform.plane_rotation_search(phi, 1, 4, height=6, workers=4)
    assert [e.matrix for e in one] == [e.matrix for e in four]
