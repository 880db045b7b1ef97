"""Quadratic forms over Q(sqrt2) / Q(cbrt2) and integral points of SO_Phi.

The main example is ``Phi = x1^2 + x2^2 + x3^2 - sqrt2 x4^2 - sqrt2 x5^2``
(see :func:`example_form`), whose integral special orthogonal group sits
in SO(3,2) and, after the Galois twist, densely in the compact SO(5).
"""
from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import mpmath
import numpy as np

from .exactnum import (
    EMBED_DPS,
    QCBRT2,
    QQ,
    QSQRT2,
    ExactMatrix,
    Field,
    QuadElement,
    determinant,
    get_field,
)


class FormError(ValueError):
    pass


class DegenerateForm(FormError):
    pass


class NotAMember(ValueError):
    """Matrix failed membership in SO_Phi(O); ``failed`` lists the checks."""

    def __init__(self, failed: Sequence[str]):
        self.failed = list(failed)
        super().__init__("not in SO_Phi(O): failed " + ", ".join(self.failed))


class NonIntegral(ValueError):
    pass


class IsotropicVector(ValueError):
    pass


class ResidualTooLarge(ArithmeticError):
    pass


EMBED_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticForm:
    """``Phi(x) = x^T A x`` with ``A`` symmetric and nondegenerate over ``field``."""

    matrix: ExactMatrix
    name: str = ""

    def __post_init__(self):
        a = self.matrix
        if a.nrows != a.ncols:
            raise FormError("form matrix must be square")
        if not a.is_symmetric():
            raise FormError("form matrix must be symmetric")
        if determinant(a) == 0:
            raise DegenerateForm("form matrix is singular")

    @property
    def n(self) -> int:
        return self.matrix.nrows

    @property
    def field(self) -> Field:
        return self.matrix.field

    @property
    def field_tag(self) -> str:
        return self.field.name

    @classmethod
    def diagonal(cls, coeffs: Sequence, fld: Field = QSQRT2, name: str = "") -> QuadraticForm:
        return cls(ExactMatrix.diag([fld.coerce(c) for c in coeffs], fld), name)

    def __call__(self, v: Sequence):
        return self.polar(v, v)

    def polar(self, u: Sequence, v: Sequence):
        """Symmetric bilinear form ``B(u, v) = u^T A v`` with ``B(v, v) = Phi(v)``."""
        f = self.field
        av = self.matrix.apply([f.coerce(x) for x in v])
        s = f.zero()
        for x, y in zip(u, av):
            if x and y:
                s = s + f.coerce(x) * y
        return s

    def discriminant(self):
        """Signed determinant ``(-1)^{n(n-1)/2} det A``."""
        d = determinant(self.matrix)
        return d if (self.n * (self.n - 1) // 2) % 2 == 0 else -d

    def embeddings(self) -> list[int]:
        """Representatives of embeddings up to complex conjugation."""
        return [1] if self.field is QQ else [1, 2]

    def is_real(self, sigma: int) -> bool:
        return self.field.is_real_embedding(sigma)

    def to_dict(self) -> dict:
        entries = []
        for i in range(self.n):
            for j in range(i, self.n):
                x = self.matrix[i, j]
                if x:
                    entries.append([i, j, self.field.serialize(x)])
        return {"field": self.field_tag, "n": self.n, "entries": entries}

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> QuadraticForm:
        try:
            fld = get_field(doc["field"])
            n = int(doc["n"])
            entries = doc["entries"]
        except KeyError as exc:
            raise FormError(f"missing field {exc.args[0]!r}") from None
        if fld is QQ and "field" in doc and doc["field"] not in ("Q",):
            raise FormError(f"unsupported field {doc['field']!r}")
        rows = [[fld.zero()] * n for _ in range(n)]
        for pos, item in enumerate(entries):
            if not isinstance(item, (list, tuple)) or len(item) != 3:
                raise FormError(f"entries[{pos}]: expected [i, j, coeff], got {item!r}")
            i, j, coeff = item
            if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < n and 0 <= j < n):
                raise FormError(f"entries[{pos}]: bad indices {item!r}")
            try:
                val = fld.parse(coeff)
            except (ValueError, TypeError) as exc:
                raise FormError(f"entries[{pos}]: {exc}") from None
            rows[i][j] = val
            rows[j][i] = val
        return cls(ExactMatrix(rows, fld, n), name)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> QuadraticForm:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise FormError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(doc, name=path.stem)


def example_form() -> QuadraticForm:
    """``x1^2 + x2^2 + x3^2 - sqrt2 x4^2 - sqrt2 x5^2`` over Q(sqrt2)."""
    s = QuadElement(0, 1)
    return QuadraticForm.diagonal([1, 1, 1, -s, -s], QSQRT2, name="phi_sqrt2")


def conjugate_form(phi: QuadraticForm, sigma: int) -> QuadraticForm:
    """Entrywise Galois conjugate ``Phi_sigma``.

    Only fields with automorphisms are supported exactly; for Q(cbrt2) use
    :func:`embedded_matrix`.
    """
    if sigma not in phi.field.embeddings():
        raise ValueError(f"embedding {sigma} does not exist for {phi.field_tag}")
    if phi.field is QCBRT2 and sigma != 1:
        raise ValueError("Q(cbrt2) has no nontrivial automorphism; use embedded_matrix")
    return QuadraticForm(phi.matrix.map(lambda x: phi.field.conjugate(x, sigma)), phi.name)


def embedded_matrix(phi: QuadraticForm, sigma: int):
    """High-precision mpmath image of the form matrix under ``sigma``."""
    with mpmath.workdps(EMBED_DPS):
        return mpmath.matrix([[phi.field.embed(x, sigma) for x in r] for r in phi.matrix.rows])


def _congruence_pivots(a: ExactMatrix) -> list:
    """Diagonal of an exact congruence diagonalization ``P^T A P = D``."""
    m = [list(r) for r in a.rows]
    pivots = []
    active = list(range(len(m)))
    while active:
        p = next((i for i in active if m[i][i]), None)
        if p is None:
            # zero diagonal: the substitution e_i -> e_i + e_j puts 2 a_ij on the diagonal
            pair = next(((i, j) for i in active for j in active if i != j and m[i][j]), None)
            if pair is None:
                break
            i, j = pair
            for k in active:
                m[i][k] = m[i][k] + m[j][k]
            for k in active:
                m[k][i] = m[k][i] + m[k][j]
            p = i
        piv = m[p][p]
        active.remove(p)
        # Schur complement on the remaining coordinates
        col = {i: m[i][p] for i in active if m[i][p]}
        for i, ci in col.items():
            fac = ci / piv
            for k in active:
                if m[p][k]:
                    m[i][k] = m[i][k] - fac * m[p][k]
        pivots.append(piv)
    if len(pivots) < len(m):
        raise DegenerateForm("zero pivot after full reduction")
    return pivots


def real_signature(phi: QuadraticForm, sigma: int = 1) -> tuple[int, int]:
    """Signature ``(p, q)`` of the real form ``Phi_sigma``.

    The form is diagonalized by an exact congruence over its field and the
    pivots' signs are evaluated exactly under the embedding.
    """
    if not phi.is_real(sigma):
        raise ValueError(f"embedding {sigma} is not real")
    signs = [phi.field.sign(d, sigma) for d in _congruence_pivots(phi.matrix)]
    if 0 in signs:
        raise DegenerateForm("zero pivot")
    return (signs.count(1), signs.count(-1))


@dataclass
class EmbeddingClassification:
    all_embeddings: list
    definite_set: list
    chosen_set: list
    signatures: dict
    field_tag: str

    @property
    def lattice_hypothesis(self) -> bool:
        """Whether the definite set is a proper subset of all embeddings."""
        return self.definite_set != self.all_embeddings

    def to_dict(self) -> dict:
        return {
            "field": self.field_tag,
            "R": [f"sigma{s}" for s in self.all_embeddings],
            "T": [f"sigma{s}" for s in self.definite_set],
            "S": [f"sigma{s}" for s in self.chosen_set],
            "signatures": {f"sigma{s}": (list(sig) if sig else None) for s, sig in self.signatures.items()},
            "T_is_proper_subset_of_R": self.lattice_hypothesis,
        }


def classify_embeddings(phi: QuadraticForm, chosen: Sequence[int] | None = None) -> EmbeddingClassification:
    """Embeddings R, the definite ones T, and a choice S containing R minus T."""
    reps = phi.embeddings()
    sigs: dict[int, tuple | None] = {}
    definite = []
    for s in reps:
        if phi.is_real(s):
            p, q = real_signature(phi, s)
            sigs[s] = (p, q)
            if p == 0 or q == 0:
                definite.append(s)
        else:
            sigs[s] = None
    chosen = list(reps) if chosen is None else sorted(set(chosen))
    if not set(reps) - set(definite) <= set(chosen) or not set(chosen) <= set(reps):
        raise ValueError("chosen set must contain every non-definite embedding and lie in R")
    return EmbeddingClassification(list(reps), definite, chosen, sigs, phi.field_tag)


def anisotropy_by_conjugate_definiteness(phi: QuadraticForm) -> bool:
    """True when some real embedding makes the form definite.

    Definiteness of one conjugate forces every zero of Phi over the field to
    be trivial, so the form is anisotropic and the integral group cocompact.
    """
    cls = classify_embeddings(phi)
    return bool(cls.definite_set)


def find_isotropic_vector(phi: QuadraticForm, bound: int = 2):
    """Brute-force search for a nonzero vector with ``Phi(v) = 0``.

    Coordinates range over ``a + b*sqrt2`` (or integers for Q) with
    ``|a|, |b| <= bound``.
    """
    f = phi.field
    if f is QQ:
        values = [Fraction(a) for a in range(-bound, bound + 1)]
    elif f is QSQRT2:
        values = [QuadElement(a, b) for a in range(-bound, bound + 1) for b in range(-bound, bound + 1)]
    else:
        values = [f.coerce([a, b, c]) for a in range(-bound, bound + 1)
                  for b in range(-bound, bound + 1) for c in range(-bound, bound + 1)]
    values.sort(key=lambda x: (f.coerce(x) != 0, _height(f.coerce(x))))
    for v in itertools.product(values, repeat=phi.n):
        if any(v) and not phi(v):
            return list(v)
    return None


def is_square(x, fld: Field) -> bool:
    """Whether ``x`` is a square in the field (Q or Q(sqrt2))."""
    x = fld.coerce(x)
    if fld is QQ:
        return x >= 0 and _is_rat_square(x)
    if fld is QSQRT2:
        if not x:
            return True
        nrm = x.norm()
        if not _is_rat_square(nrm):
            return False
        r = _rat_sqrt(nrm)
        for n in (r, -r):
            s2, t2 = (x.a + n) / 2, (x.a - n) / 4
            if s2 >= 0 and t2 >= 0 and _is_rat_square(s2) and _is_rat_square(t2):
                s, t = _rat_sqrt(s2), _rat_sqrt(t2)
                for ts in (t, -t):
                    if QuadElement(s, ts) * QuadElement(s, ts) == x:
                        return True
        return False
    raise NotImplementedError("square test implemented for Q and Q(sqrt2)")


def _is_rat_square(x: Fraction) -> bool:
    if x < 0:
        return False
    return _isqrt_exact(x.numerator) is not None and _isqrt_exact(x.denominator) is not None


def _isqrt_exact(n: int):
    from math import isqrt
    r = isqrt(n)
    return r if r * r == n else None


def _rat_sqrt(x: Fraction) -> Fraction:
    return Fraction(_isqrt_exact(x.numerator), _isqrt_exact(x.denominator))


def almost_simple(phi: QuadraticForm) -> bool:
    """``n != 4``, or ``n == 4`` with non-square discriminant."""
    if phi.n != 4:
        return True
    return not is_square(phi.discriminant(), phi.field)


# ---------------------------------------------------------------------------
# integral orthogonal elements


@dataclass(frozen=True)
class Certificate:
    integral: bool
    preserves_form: bool
    det_one: bool

    @property
    def ok(self) -> bool:
        return self.integral and self.preserves_form and self.det_one

    def failed(self) -> list[str]:
        out = []
        if not self.integral:
            out.append("integrality")
        if not self.preserves_form:
            out.append("congruence")
        if not self.det_one:
            out.append("determinant")
        return out


@dataclass(frozen=True)
class OrthogonalElement:
    matrix: ExactMatrix
    phi: QuadraticForm = field(repr=False)
    word: tuple = ()
    certificate: Certificate = Certificate(True, True, True)

    def __matmul__(self, other: OrthogonalElement) -> OrthogonalElement:
        return OrthogonalElement(self.matrix @ other.matrix, self.phi, self.word + other.word, self.certificate)

    def inverse(self) -> OrthogonalElement:
        """``M^{-1} = A^{-1} M^T A``."""
        a = self.phi.matrix
        inv = a.inverse() @ self.matrix.T @ a
        word = tuple((g, -e) for g, e in reversed(self.word))
        return OrthogonalElement(inv, self.phi, word, self.certificate)

    def height(self) -> int:
        return max(_height(x) for r in self.matrix.rows for x in r)

    def is_identity(self) -> bool:
        return self.matrix == ExactMatrix.identity(self.matrix.nrows, self.matrix.field)

    def recheck(self) -> Certificate:
        return membership_certificate(self.matrix, self.phi)


def _height(x) -> int:
    if isinstance(x, Fraction):
        return abs(x).__ceil__()
    return x.height()


def membership_certificate(m: ExactMatrix, phi: QuadraticForm) -> Certificate:
    f = phi.field
    if m.shape != (phi.n, phi.n):
        raise ValueError(f"matrix shape {m.shape} does not match form size {phi.n}")
    m = m if m.field == f else ExactMatrix(m.rows, f)
    integral = all(f.is_integral(x) for r in m.rows for x in r)
    preserves = (m.T @ phi.matrix @ m) == phi.matrix
    det_one = determinant(m) == f.one()
    return Certificate(integral, preserves, det_one)


def is_member(m, phi: QuadraticForm, word: tuple = ()) -> OrthogonalElement:
    """Certify ``m`` in SO_Phi(O): integral entries, ``M^T A M = A`` and ``det M = 1``."""
    if not isinstance(m, ExactMatrix):
        m = ExactMatrix(m, phi.field)
    elif m.field != phi.field:
        m = ExactMatrix(m.rows, phi.field)
    cert = membership_certificate(m, phi)
    if not cert.ok:
        raise NotAMember(cert.failed())
    return OrthogonalElement(m, phi, tuple(word), cert)


def _plane_values(fld: Field, height: int) -> list:
    r = range(-height, height + 1)
    if fld is QQ:
        return [Fraction(a) for a in r]
    if fld is QSQRT2:
        return [QuadElement(a, b) for a in r for b in r]
    return [fld.coerce([a, b, c]) for a in r for b in r for c in r]


def _check_plane(phi: QuadraticForm, i: int, j: int):
    a = phi.matrix
    if i == j:
        raise ValueError("plane indices must differ")
    for k in range(phi.n):
        for idx in (i, j):
            if k not in (i, j) and a[idx, k]:
                raise ValueError(f"coordinates {i}, {j} are not orthogonal to coordinate {k}")
    if a[i, j]:
        raise ValueError(f"plane ({i}, {j}) is not diagonal")


def _pad(phi: QuadraticForm, i: int, j: int, block) -> ExactMatrix:
    f = phi.field
    rows = [list(r) for r in ExactMatrix.identity(phi.n, f).rows]
    (al, be), (ga, de) = block
    rows[i][i], rows[i][j], rows[j][i], rows[j][j] = al, be, ga, de
    return ExactMatrix(rows, f)


def _first_equation_hits_sqrt2(p: QuadElement, q: QuadElement, height: int, chunk: range):
    """Pairs (alpha, gamma) in the box with ``p alpha^2 + q gamma^2 = p`` (exact integer arithmetic)."""
    den = 1
    for x in (p.a, p.b, q.a, q.b):
        den = den * x.denominator // np.gcd(den, x.denominator)
    p0, p1, q0, q1 = (int(x * den) for x in (p.a, p.b, q.a, q.b))
    r = np.arange(-height, height + 1, dtype=np.int64)
    a, b = np.meshgrid(r, r, indexing="ij")
    a, b = a.ravel(), b.ravel()
    sq0, sq1 = a * a + 2 * b * b, 2 * a * b  # alpha^2 = sq0 + sq1 sqrt2
    # q gamma^2 for every gamma
    qg0, qg1 = q0 * sq0 + 2 * q1 * sq1, q0 * sq1 + q1 * sq0
    hits = []
    for ia in chunk:
        lhs0 = p0 * sq0[ia] + 2 * p1 * sq1[ia] + qg0
        lhs1 = p0 * sq1[ia] + p1 * sq0[ia] + qg1
        for ig in np.nonzero((lhs0 == p0) & (lhs1 == p1))[0]:
            hits.append(((int(a[ia]), int(b[ia])), (int(a[ig]), int(b[ig]))))
    return hits


def plane_rotation_search(phi: QuadraticForm, i: int, j: int, height: int = 10,
                          workers: int = 1) -> list[OrthogonalElement]:
    """Nontrivial elements of SO_Phi(O) acting only on coordinates ``i, j``.

    Blocks ``[[alpha, beta], [gamma, delta]]`` with coefficients of height at
    most ``height`` satisfying ``a_ii alpha^2 + a_jj gamma^2 = a_ii``,
    ``a_ii beta^2 + a_jj delta^2 = a_jj``, ``a_ii alpha beta + a_jj gamma delta = 0``
    and ``alpha delta - beta gamma = 1``.  For each admissible (alpha, gamma)
    the last two equations are linear in (beta, delta) with determinant
    ``a_ii``, so the box search is exhaustive over the first equation.
    """
    _check_plane(phi, i, j)
    f = phi.field
    p, q = phi.matrix[i, i], phi.matrix[j, j]
    if f is QSQRT2:
        side = 2 * height + 1
        chunks = _partition(range(side * side), workers)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
            parts = list(ex.map(lambda c: _first_equation_hits_sqrt2(p, q, height, c), chunks))
        pairs = [(QuadElement(*al), QuadElement(*ga)) for part in parts for al, ga in part]
    else:
        vals = _plane_values(f, height)
        pairs = [(al, ga) for al in vals for ga in vals if p * al * al + q * ga * ga == p]
    out = []
    for al, ga in pairs:
        be = -(q * ga) / p
        de = al
        block = ((al, be), (ga, de))
        if not all(f.is_integral(x) and _height(x) <= height for row in block for x in row):
            continue
        # exact re-verification of all four conditions
        if not (p * al * al + q * ga * ga == p and p * be * be + q * de * de == q
                and p * al * be + q * ga * de == 0 and al * de - be * ga == 1):
            continue
        if al == 1 and ga == 0:
            continue
        elem = is_member(_pad(phi, i, j, block), phi, word=((f"rot{i}{j}", 1),))
        out.append(elem)
    out.sort(key=_element_order_key)
    return out


def _partition(seq: range, workers: int) -> list[range]:
    workers = max(1, workers)
    step = -(-len(seq) // workers)
    return [seq[k:k + step] for k in range(0, len(seq), step)]


def _element_order_key(e: OrthogonalElement):
    return (e.height(), [_sortable(x) for r in e.matrix.rows for x in r])


def _sortable(x):
    if isinstance(x, Fraction):
        return (x,)
    if isinstance(x, QuadElement):
        return (x.a, x.b)
    return (x.a, x.b, x.c)


def reflection(phi: QuadraticForm, v: Sequence) -> ExactMatrix:
    """Matrix of ``x -> x - (2 B(x, v) / Phi(v)) v``."""
    f = phi.field
    v = [f.coerce(x) for x in v]
    pv = phi(v)
    if not pv:
        raise IsotropicVector("Phi(v) = 0")
    av = phi.matrix.apply(v)  # B(e_k, v) = (A v)_k
    c = 2 / pv if f is QQ else f.coerce(2) / pv
    rows = [[(f.one() if r == k else f.zero()) - c * v[r] * av[k] for k in range(phi.n)] for r in range(phi.n)]
    return ExactMatrix(rows, f)


def reflection_pair(phi: QuadraticForm, v: Sequence, w: Sequence) -> OrthogonalElement:
    """The product of the reflections in ``v`` and ``w``, certified in SO_Phi(O)."""
    sv, sw = reflection(phi, v), reflection(phi, w)
    for name, s in (("v", sv), ("w", sw)):
        if not all(phi.field.is_integral(x) for r in s.rows for x in r):
            raise NonIntegral(f"reflection in {name} does not preserve O^n")
    return is_member(sv @ sw, phi, word=(("refl", 1),))


def integral_reflection_vectors(phi: QuadraticForm, coeff_bound: int = 1, max_support: int = 2) -> list[list]:
    """Small vectors whose reflections preserve O^n (coordinates in {-b..b}, few nonzeros)."""
    f = phi.field
    vals = [f.coerce(a) for a in range(-coeff_bound, coeff_bound + 1) if a]
    if f is QSQRT2:
        vals += [QuadElement(0, s) for s in (1, -1)]
    out = []
    for support in range(1, max_support + 1):
        for idx in itertools.combinations(range(phi.n), support):
            for coeffs in itertools.product(vals, repeat=support):
                # normalize sign: first nonzero coefficient positive in the real embedding
                if f.sign(coeffs[0]) < 0:
                    continue
                v = [f.zero()] * phi.n
                for k, cf in zip(idx, coeffs):
                    v[k] = cf
                if not phi(v):
                    continue
                s = reflection(phi, v)
                if all(f.is_integral(x) for r in s.rows for x in r):
                    out.append(v)
    return out


@dataclass
class GeneratorSet:
    elements: list
    closure_note: str = ""

    def verify(self) -> bool:
        return all(e.recheck().ok for e in self.elements)

    def to_dict(self) -> dict:
        if not self.elements:
            return {"closure_note": self.closure_note, "form": None, "elements": []}
        phi = self.elements[0].phi
        return {
            "closure_note": self.closure_note,
            "form": phi.to_dict(),
            "elements": [
                {"word": [[g, e] for g, e in el.word], "matrix": el.matrix.serialize()} for el in self.elements
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> GeneratorSet:
        if not doc.get("elements"):
            return cls([], doc.get("closure_note", ""))
        phi = QuadraticForm.from_dict(doc["form"])
        f = phi.field
        elems = []
        for item in doc["elements"]:
            m = ExactMatrix([[f.parse(x) for x in r] for r in item["matrix"]], f)
            elems.append(is_member(m, phi, word=tuple((g, e) for g, e in item["word"])))
        return cls(elems, doc.get("closure_note", ""))


def search_generators(phi: QuadraticForm, height: int = 10, workers: int = 1,
                      per_plane: int = 1, reflections: bool = True) -> GeneratorSet:
    """Plane rotations from every admissible coordinate plane plus reflection pairs.

    From each plane the ``per_plane`` lowest-height nontrivial elements are
    kept.  Reflection pairs use consecutive integral reflection vectors.
    Nothing here claims the result generates all of SO_Phi(O).
    """
    elems: list[OrthogonalElement] = []
    for i, j in itertools.combinations(range(phi.n), 2):
        try:
            _check_plane(phi, i, j)
        except ValueError:
            continue
        found = plane_rotation_search(phi, i, j, height, workers)
        elems.extend(found[:per_plane])
    notes = ["plane rotations"]
    if reflections:
        vecs = integral_reflection_vectors(phi)
        seen = {e.matrix for e in elems}
        for v, w in zip(vecs, vecs[1:]):
            try:
                e = reflection_pair(phi, v, w)
            except (NonIntegral, NotAMember):
                continue
            if e.matrix not in seen and not e.is_identity():
                seen.add(e.matrix)
                elems.append(e)
        notes.append("reflection pairs")
    # words name generators by position
    elems = [OrthogonalElement(e.matrix, e.phi, ((f"g{k}", 1),), e.certificate) for k, e in enumerate(elems)]
    return GeneratorSet(elems, ", ".join(notes))


def infinite_order_candidates(gens: GeneratorSet) -> list[OrthogonalElement]:
    """Generators whose Galois image has an eigenvalue angle that is not a small root of unity."""
    out = []
    for e in gens.elements:
        m = e.matrix
        k = None
        for order in range(1, 25):
            if _power(m, order) == ExactMatrix.identity(m.nrows, m.field):
                k = order
                break
        if k is None:
            out.append(e)
    return out


def _power(m: ExactMatrix, k: int) -> ExactMatrix:
    out = ExactMatrix.identity(m.nrows, m.field)
    for _ in range(k):
        out = out @ m
    return out


def element_order(e: OrthogonalElement, limit: int = 24) -> int | None:
    """Finite order up to ``limit`` or None."""
    m = e.matrix
    ident = ExactMatrix.identity(m.nrows, m.field)
    p = m
    for k in range(1, limit + 1):
        if p == ident:
            return k
        p = p @ m
    return None


# ---------------------------------------------------------------------------
# Galois embedding into the compact factor


@dataclass
class EmbeddedElement:
    matrix: np.ndarray      # sigma(M) as floats
    residual: float         # ||M^T A_sigma M - A_sigma||_inf
    orthogonal: np.ndarray  # conjugated into the standard SO(n)


def _definite_embedding(phi: QuadraticForm) -> int:
    cls = classify_embeddings(phi)
    if not cls.definite_set:
        raise ValueError("no real embedding makes the form definite")
    # prefer the nontrivial conjugate when both qualify
    return cls.definite_set[-1]


def galois_embed_element(elem: OrthogonalElement, sigma: int | None = None,
                         tol: float = EMBED_RESIDUAL_TOL) -> EmbeddedElement:
    """Image of an integral element in the compact group of the definite conjugate form."""
    phi = elem.phi
    if sigma is None:
        sigma = _definite_embedding(phi)
    m = elem.matrix.to_float(sigma)
    a = phi.matrix.to_float(sigma)
    residual = float(np.max(np.abs(m.T @ a @ m - a)))
    if residual > tol:
        raise ResidualTooLarge(f"embedding residual {residual:.3e} exceeds {tol:.1e}")
    sign = 1 if real_signature(phi, sigma)[0] == phi.n else -1
    with mpmath.workdps(EMBED_DPS):
        am = embedded_matrix(phi, sigma) * sign
        mm = mpmath.matrix([[phi.field.embed(x, sigma) for x in r] for r in elem.matrix.rows])
        low = mpmath.cholesky(am)          # A = L L^T
        orth = low.T * mm * mpmath.inverse(low.T)
        orth = np.array(orth.tolist(), dtype=float)
    return EmbeddedElement(m, residual, orth)


def compact_images(gens: GeneratorSet, sigma: int | None = None) -> list[np.ndarray]:
    return [galois_embed_element(e, sigma).orthogonal for e in gens.elements]


def _support(m: ExactMatrix) -> set[int]:
    n = m.nrows
    return {i for i in range(n) for j in range(n) if (m[i, j] != (1 if i == j else 0))}


def select_dense_generators(gens: GeneratorSet, count: int = 4) -> GeneratorSet:
    """Pick up to ``count`` infinite-order elements whose coordinate supports connect.

    Rotations by angles that are not rational multiples of pi in coordinate
    planes forming a connected graph on all coordinates topologically
    generate the full rotation group, so such a choice is the natural
    candidate for a dense subgroup.  Finite-order elements fill remaining
    slots only if no infinite-order element is left.
    """
    infinite = [e for e in gens.elements if element_order(e) is None]
    finite = [e for e in gens.elements if element_order(e) is not None]
    chosen: list[OrthogonalElement] = []
    parent = list(range(gens.elements[0].matrix.nrows)) if gens.elements else []

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in sorted(infinite, key=_element_order_key):
        if len(chosen) >= count:
            break
        sup = sorted(_support(e.matrix))
        roots = {find(i) for i in sup}
        if len(roots) > 1 or not chosen:
            for i in sup[1:]:
                parent[find(i)] = find(sup[0])
            chosen.append(e)
    for e in sorted(infinite, key=_element_order_key) + finite:
        if len(chosen) >= count:
            break
        if e not in chosen:
            chosen.append(e)
    note = f"{gens.closure_note}; selected {len(chosen)} (infinite-order first, connected supports)"
    return GeneratorSet(chosen, note)
