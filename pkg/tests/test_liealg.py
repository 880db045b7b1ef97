from __future__ import annotations

import json
from fractions import Fraction

import pytest
import sympy as sp

from oracles import ce_betti, ce_square_is_zero, doc_is_lie_algebra, mutation_corpus
from rigidfol import liealg
from rigidfol.exactnum import ExactMatrix, QQ
from rigidfol.liealg import InvalidStructureConstants, LieAlgebra, NotSemisimple


def test_so3_brackets_and_adjoint():
    g = liealg.so3()
    e1, e2, e3 = (g.basis_vector(i) for i in range(3))
    assert g.bracket(e1, e2) == e3
    assert g.bracket(e2, e3) == e1
    assert g.bracket(e3, e1) == e2
    assert g.ad(e1).tolist() == [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
    assert g.check_adjoint_homomorphism()


def test_killing_forms():
    assert liealg.so3().killing_form() == ExactMatrix.diag([-2, -2, -2], QQ)
    # so(n): Killing form is (n-2) tr(XY); on E_ab basis that is -2(n-2) times the identity
    for n in (4, 5):
        assert liealg.so(n).killing_form() == ExactMatrix.diag([-2 * (n - 2)] * (n * (n - 1) // 2), QQ)
    assert liealg.affine_line().killing_form().tolist() == [[1, 0], [0, 0]]
    assert liealg.heisenberg().killing_form().is_zero()


def test_type_predicates():
    for n in (3, 4, 5):
        g = liealg.so(n)
        assert g.is_semisimple() and g.is_compact_type() and g.is_perfect()
    assert not liealg.heisenberg().is_semisimple()
    assert not liealg.abelian(3).is_perfect()
    assert not liealg.affine_line().is_compact_type()


@pytest.mark.parametrize("name", ["so3", "so4", "so5", "heisenberg", "abelian2", "aff1"])
def test_betti_numbers_match_exterior_algebra_oracle(name):
    g = liealg.rigidity_inputs()[name]
    doc = g.to_dict()
    assert g.betti_numbers() == [ce_betti(doc)[k] for k in range(g.dim + 1)]


def test_betti_values():
    assert liealg.so3().betti_numbers() == [1, 0, 0, 1]
    assert liealg.so(4).betti_numbers() == [1, 0, 0, 2, 0, 0, 1]
    assert liealg.heisenberg().betti_numbers() == [1, 2, 2, 1]
    assert liealg.abelian(3).betti_numbers() == [1, 3, 3, 1]


@pytest.mark.parametrize("g", [liealg.so3(), liealg.so(4), liealg.so(5), liealg.heisenberg(), liealg.abelian(4)],
                         ids=["so3", "so4", "so5", "heis", "ab4"])
def test_ce_differential_squares_to_zero(g):
    for k in range(g.dim - 1):
        d0 = g.ce_differential(k).to_matrix()
        d1 = g.ce_differential(k + 1).to_matrix()
        assert (d1 @ d0).is_zero()


def test_oracle_differential_squares_to_zero():
    assert ce_square_is_zero(liealg.so(4).to_dict())


def test_ce_budget():
    with pytest.raises(liealg.BudgetExceeded):
        liealg.so(5).ce_differential(5, budget=100)


def test_cocycle_representatives_are_closed():
    g = liealg.heisenberg()
    rep = g.ce_cohomology(2)
    d2 = g.ce_differential(2).to_matrix()
    for v in rep.representatives:
        assert all(x == 0 for x in d2.apply(v))


def test_simple_decomposition():
    dec = liealg.so(4).simple_decomposition()
    assert dec.dims == [3, 3]
    assert all(lab.is_so3 for lab in dec.labels)
    assert liealg.so(4).detect_so3_factor()
    dec5 = liealg.so(5).simple_decomposition()
    assert dec5.dims == [10]
    assert not liealg.so(5).detect_so3_factor()
    mixed = liealg.direct_sum(liealg.so3(), liealg.so(5))
    assert mixed.simple_decomposition().dims == [3, 10]
    with pytest.raises(NotSemisimple):
        liealg.heisenberg().simple_decomposition()


def test_decomposition_independent_of_seed():
    g = liealg.so(4)
    a = g.simple_decomposition(seed=0)
    b = g.simple_decomposition(seed=7)
    assert all(any(h == k for k in b.ideals) for h in a.ideals)


def test_quotient_and_subalgebra():
    g = liealg.heisenberg()
    q, proj = g.quotient_by_ideal(g.center())
    assert q.dim == 2 and not q.brackets()
    s = liealg.direct_sum(liealg.so3(), liealg.so3())
    first = s.simple_decomposition().ideals[0]
    q2, _ = s.quotient_by_ideal(first)
    assert q2.dim == 3 and q2.is_compact_type()
    assert s.subalgebra(first).betti_numbers() == [1, 0, 0, 1]
    with pytest.raises(liealg.NotAnIdeal):
        s.quotient_by_ideal(s.span([s.basis_vector(0)]))


def test_change_of_basis_preserves_invariants():
    g = liealg.so(4)
    p = ExactMatrix([[1 if i == j else (Fraction(1, 2) if j == i + 1 else 0) for j in range(6)] for i in range(6)],
                    QQ)
    h = g.change_basis(p)
    assert h.betti_numbers() == g.betti_numbers()
    assert h.simple_decomposition().dims == [3, 3]


def test_file_round_trip(tmp_path):
    g = liealg.so(4)
    path = tmp_path / "so4.json"
    g.save(path)
    assert LieAlgebra.load(path) == g


@pytest.mark.parametrize("doc, needle", [
    ({"dim": 3, "brackets": [[0, 1, 2, "1"], [1, 0, 2, "1"]]}, "brackets[1]"),
    ({"dim": 3, "brackets": [[0, 1, 5, "1"]]}, "brackets[0]"),
    ({"dim": 3, "brackets": [[0, 1, 2, 0.5]]}, "exact rational"),
    ({"dim": 3, "brackets": [[0, 1, 2, "1"], [0, 1, 2, "2"]]}, "duplicate"),
    ({"brackets": []}, "dim"),
    ({"dim": 3, "brackets": [[0, 1, 2, "1"], [1, 2, 1, "1"]]}, "Jacobi"),
])
def test_malformed_documents_name_the_entry(doc, needle):
    with pytest.raises(InvalidStructureConstants) as info:
        LieAlgebra.from_dict(doc)
    assert needle in str(info.value)


def test_json_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "dim": 3,\n "brackets": [\n')
    with pytest.raises(InvalidStructureConstants, match="line"):
        LieAlgebra.load(path)


def test_mutation_corpus_rejected():
    bases = [g.to_dict() for g in liealg.rigidity_inputs().values()]
    corpus = mutation_corpus(bases, 220, seed=11)
    assert len(corpus) >= 200
    for doc, kind in corpus:
        with pytest.raises(InvalidStructureConstants):
            LieAlgebra.from_dict(json.loads(json.dumps(doc)))


def test_valid_rescaling_accepted():
    # rescaling one so(3) bracket gives another valid Lie algebra (isomorphic to so(3) or sl(2))
    doc = liealg.so3().to_dict()
    doc["brackets"][0][3] = "-1"
    assert doc_is_lie_algebra(doc)
    g = LieAlgebra.from_dict(doc)
    assert g.is_semisimple() and not g.is_compact_type()


def test_builtins_and_sympy_killing():
    g = liealg.so(5)
    ad = [sp.Matrix(m.tolist()) for m in g.adjoint_rep()]
    kill = sp.Matrix(10, 10, lambda i, j: (ad[i] * ad[j]).trace())
    assert kill == sp.Matrix(g.killing_form().tolist())
    assert liealg.so(7).dim == 21
