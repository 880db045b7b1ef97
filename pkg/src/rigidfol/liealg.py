"""Lie algebras given by rational structure constants.

Everything here is exact: structure constants are Fractions, and ranks,
kernels and definiteness tests run over Q.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

import sympy

from .exactnum import (
    QQ,
    ExactMatrix,
    SparseEchelon,
    determinant,
    exact_kernel,
    exact_rank,
    exact_solve,
)


class LieAlgebraError(ValueError):
    pass


class InvalidStructureConstants(LieAlgebraError):
    pass


class NotSemisimple(LieAlgebraError):
    pass


class NotAnIdeal(LieAlgebraError):
    pass


class BudgetExceeded(RuntimeError):
    pass


CE_BUDGET = 5000

Vector = list  # list of Fractions, length dim


def _zero(n: int) -> Vector:
    return [Fraction(0)] * n


def _axpy(a, x: Sequence, y: Sequence) -> Vector:
    return [a * xi + yi for xi, yi in zip(x, y)]


class LieAlgebra:
    """A finite-dimensional Lie algebra over Q.

    ``brackets`` maps ``(i, j)`` with ``i < j`` to ``{k: c_ij^k}``; unlisted
    triples are zero.  Antisymmetry and the Jacobi identity are checked on
    construction.
    """

    def __init__(self, dim: int, brackets: dict | Iterable = (), basis_names: Sequence[str] | None = None,
                 name: str = "", validate: bool = True):
        self.dim = int(dim)
        self.name = name
        if basis_names is None:
            basis_names = [f"e{i + 1}" for i in range(self.dim)]
        if len(basis_names) != self.dim:
            raise InvalidStructureConstants(f"{len(basis_names)} basis names for dimension {self.dim}")
        self.basis_names = list(basis_names)
        n = self.dim
        c = [[_zero(n) for _ in range(n)] for _ in range(n)]
        entries = brackets.items() if isinstance(brackets, dict) else _entries_from_list(brackets)
        seen: dict[tuple, Fraction] = {}
        for (i, j), coeffs in entries:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidStructureConstants(f"bracket index ({i}, {j}) out of range for dimension {n}")
            for k, v in coeffs.items():
                if not 0 <= k < n:
                    raise InvalidStructureConstants(f"bracket [{i}, {j}] has output index {k} out of range")
                v = Fraction(v)
                if i == j:
                    if v:
                        raise InvalidStructureConstants(f"antisymmetry: [e{i}, e{i}] has nonzero component {k}")
                    continue
                lo, hi, s = (i, j, 1) if i < j else (j, i, -1)
                key = (lo, hi, k)
                if key in seen and seen[key] != s * v:
                    raise InvalidStructureConstants(
                        f"antisymmetry violated at bracket [{i}, {j}] component {k}")
                seen[key] = s * v
        for (i, j, k), v in seen.items():
            c[i][j][k] = v
            c[j][i][k] = -v
        self.c = c
        if validate:
            self._check_jacobi()

    # -- construction helpers -------------------------------------------------

    def _check_jacobi(self):
        n, c = self.dim, self.c
        nz = [[[k for k in range(n) if c[i][j][k]] for j in range(n)] for i in range(n)]
        for i, j, k in itertools.combinations(range(n), 3):
            acc = _zero(n)
            for a, b, d in ((i, j, k), (j, k, i), (k, i, j)):
                # [[e_a, e_b], e_d]
                for l in nz[a][b]:
                    cab = c[a][b][l]
                    for m in nz[l][d]:
                        acc[m] += cab * c[l][d][m]
            bad = [m for m in range(n) if acc[m]]
            if bad:
                raise InvalidStructureConstants(
                    f"Jacobi identity fails for ({self.basis_names[i]}, {self.basis_names[j]}, "
                    f"{self.basis_names[k]}) in component {bad[0]}")

    def brackets(self) -> dict:
        """Nonzero structure constants for ``i < j``."""
        out = {}
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                d = {k: v for k, v in enumerate(self.c[i][j]) if v}
                if d:
                    out[(i, j)] = d
        return out

    def __repr__(self):
        label = self.name or "LieAlgebra"
        return f"<{label} dim={self.dim}>"

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and self.dim == other.dim and self.c == other.c

    # -- elementary operations ---------------------------------------------

    def bracket(self, x: Sequence, y: Sequence) -> Vector:
        n, c = self.dim, self.c
        out = _zero(n)
        for i in range(n):
            if not x[i]:
                continue
            for j in range(n):
                if not y[j] or i == j:
                    continue
                f = x[i] * y[j]
                cij = c[i][j]
                for k in range(n):
                    if cij[k]:
                        out[k] += f * cij[k]
        return out

    def basis_vector(self, i: int) -> Vector:
        v = _zero(self.dim)
        v[i] = Fraction(1)
        return v

    def adjoint_rep(self) -> list[ExactMatrix]:
        """Matrices of ``ad(e_i)``: entry ``(k, j)`` is ``c_ij^k``."""
        n = self.dim
        return [ExactMatrix([[self.c[i][j][k] for j in range(n)] for k in range(n)], QQ, n) for i in range(n)]

    def ad(self, x: Sequence) -> ExactMatrix:
        n = self.dim
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            if x[i]:
                for j in range(n):
                    for k in range(n):
                        if self.c[i][j][k]:
                            rows[k][j] += x[i] * self.c[i][j][k]
        return ExactMatrix(rows, QQ, n)

    def check_adjoint_homomorphism(self) -> bool:
        """``ad[e_i, e_j] == [ad e_i, ad e_j]`` for all pairs (equivalent to Jacobi)."""
        ads = self.adjoint_rep()
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                lhs = self.ad(self.c[i][j])
                rhs = ads[i] @ ads[j] - ads[j] @ ads[i]
                if lhs != rhs:
                    return False
        return True

    # -- Killing form --------------------------------------------------------

    def killing_form(self) -> ExactMatrix:
        """``kappa(e_i, e_j) = tr(ad e_i ad e_j)`` computed from the constants."""
        n, c = self.dim, self.c
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                s = Fraction(0)
                # tr(ad_i ad_j) = sum_{k,l} c_{jk}^l c_{il}^k
                for k in range(n):
                    cjk = c[j][k]
                    for l in range(n):
                        if cjk[l] and c[i][l][k]:
                            s += cjk[l] * c[i][l][k]
                row.append(s)
            rows.append(row)
        return ExactMatrix(rows, QQ, n)

    def is_semisimple(self) -> bool:
        if self.dim == 0:
            return True
        return determinant(self.killing_form()) != 0

    def is_compact_type(self) -> bool:
        """Killing form negative definite (leading minors alternate in sign, starting negative)."""
        if self.dim == 0:
            return True
        return is_negative_definite(self.killing_form())

    # -- subspaces and ideals ---------------------------------------------------

    def span(self, vectors: Iterable[Sequence]) -> Subspace:
        return Subspace.from_vectors(self, vectors)

    def whole(self) -> Subspace:
        return Subspace(self, [self.basis_vector(i) for i in range(self.dim)])

    def derived_subalgebra(self) -> Subspace:
        return self.span(self.c[i][j] for i in range(self.dim) for j in range(i + 1, self.dim))

    def is_perfect(self) -> bool:
        return self.derived_subalgebra().dim == self.dim

    def center(self) -> Subspace:
        rows = []
        n = self.dim
        for i in range(n):
            # [x, e_i] = sum_j x_j c_{j i}^k = 0 for all k
            for k in range(n):
                rows.append([self.c[j][i][k] for j in range(n)])
        basis = exact_kernel(ExactMatrix(rows, QQ, n)) if rows else []
        return self.span(basis)

    def ideal_closure(self, seeds: Iterable[Sequence]) -> Subspace:
        """Smallest ideal containing ``seeds`` (fixed point of bracketing with the basis)."""
        ech = SparseEchelon(self.dim)
        basis: list[Vector] = []
        queue = [list(map(Fraction, s)) for s in seeds]
        while queue:
            v = queue.pop()
            if ech.add(dict(enumerate(v))):
                basis.append(v)
                for i in range(self.dim):
                    w = self.bracket(self.basis_vector(i), v)
                    if any(w):
                        queue.append(w)
        return Subspace(self, basis)

    def is_ideal(self, h: Subspace) -> bool:
        for v in h.basis:
            for i in range(self.dim):
                if not h.contains(self.bracket(self.basis_vector(i), v)):
                    return False
        return True

    def is_subalgebra(self, h: Subspace) -> bool:
        return all(h.contains(self.bracket(u, v)) for u, v in itertools.combinations(h.basis, 2))

    def killing_orthogonal(self, h: Subspace) -> Subspace:
        kappa = self.killing_form()
        rows = [kappa.apply(v) for v in h.basis]
        if not rows:
            return self.whole()
        return self.span(exact_kernel(ExactMatrix(rows, QQ, self.dim)))

    # -- derived algebras -----------------------------------------------------

    def subalgebra(self, h: Subspace, name: str = "") -> LieAlgebra:
        """Structure constants of a subalgebra in the coordinates of ``h.basis``."""
        if not self.is_subalgebra(h):
            raise LieAlgebraError("subspace is not closed under the bracket")
        brackets = {}
        for a in range(h.dim):
            for b in range(a + 1, h.dim):
                coords = h.coordinates(self.bracket(h.basis[a], h.basis[b]))
                d = {k: v for k, v in enumerate(coords) if v}
                if d:
                    brackets[(a, b)] = d
        return LieAlgebra(h.dim, brackets, name=name)

    def change_basis(self, p: ExactMatrix, name: str = "") -> LieAlgebra:
        """The same algebra in the basis given by the columns of an invertible ``p``."""
        if exact_rank(p) != self.dim:
            raise LieAlgebraError("change of basis must be invertible")
        return self.subalgebra(Subspace(self, p.columns()), name=name or self.name)

    def quotient_by_ideal(self, h: Subspace) -> tuple[LieAlgebra, ExactMatrix]:
        """Quotient algebra ``g/h`` and the projection matrix ``g -> g/h``.

        The quotient basis is the images of the standard basis vectors that
        complete ``h`` (chosen greedily in index order).
        """
        if not self.is_ideal(h):
            raise NotAnIdeal("subspace is not an ideal: bracket closure fails")
        ech = SparseEchelon(self.dim)
        for v in h.basis:
            ech.add(dict(enumerate(v)))
        comp = []
        for i in range(self.dim):
            if ech.add({i: Fraction(1)}):
                comp.append(i)
        full = [list(v) for v in h.basis] + [self.basis_vector(i) for i in comp]
        fullm = ExactMatrix.from_columns(full, QQ)
        q = len(comp)
        hdim = h.dim

        def project(v):
            coords = exact_solve(fullm, v)
            return coords[hdim:]

        proj_cols = [project(self.basis_vector(i)) for i in range(self.dim)]
        proj = ExactMatrix.from_columns(proj_cols, QQ, nrows=q) if q else ExactMatrix.zeros(0, self.dim)
        brackets = {}
        for a in range(q):
            for b in range(a + 1, q):
                img = project(self.c[comp[a]][comp[b]])
                d = {k: v for k, v in enumerate(img) if v}
                if d:
                    brackets[(a, b)] = d
        names = [self.basis_names[i] for i in comp]
        quot = LieAlgebra(q, brackets, names, name=f"{self.name}/h" if self.name else "")
        # projection must be a homomorphism
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                lhs = proj.apply(self.c[i][j]) if q else []
                rhs = quot.bracket(proj.column(i), proj.column(j)) if q else []
                if lhs != rhs:
                    raise LieAlgebraError("projection is not a Lie homomorphism")
        return quot, proj

    # -- decomposition ------------------------------------------------------

    def centroid(self) -> list[ExactMatrix]:
        """Basis of the linear maps commuting with every ``ad(e_i)``."""
        n = self.dim
        ads = self.adjoint_rep()
        ech = SparseEchelon(n * n)
        # unknown X (row-major, index r*n + s); equations (X A - A X)_{ab} = 0
        for a_mat in ads:
            a = a_mat.rows
            for r in range(n):
                for s in range(n):
                    row: dict[int, Fraction] = {}
                    for t in range(n):
                        if a[t][s]:
                            row[r * n + t] = row.get(r * n + t, 0) + a[t][s]
                        if a[r][t]:
                            row[t * n + s] = row.get(t * n + s, 0) - a[r][t]
                    if any(row.values()):
                        ech.add(row)
        out = []
        for vec in ech.kernel():
            flat = [Fraction(0)] * (n * n)
            for k, v in vec.items():
                flat[k] = v
            out.append(ExactMatrix([flat[r * n:(r + 1) * n] for r in range(n)], QQ, n))
        return out

    def simple_decomposition(self, seed: int = 0, max_tries: int = 20) -> IdealDecomposition:
        """Split a semisimple algebra into its minimal (Q-simple) ideals.

        Ideals are the invariant subspaces of elements of the centroid; a
        random rational centroid element is factored over Q and the algebra is
        split along the kernels of the factors, recursively.  Each piece is
        also Killing-orthogonal to its complement.
        """
        if not self.is_semisimple():
            raise NotSemisimple("Killing form is degenerate")
        rng = random.Random(seed)
        ideals = _split(self, self.whole(), rng, max_tries)
        ideals.sort(key=lambda h: (h.dim, [[-x for x in v] for v in h.basis]))
        kappa = self.killing_form()
        labels = []
        for h in ideals:
            sub = self.subalgebra(h)
            compact = sub.is_compact_type()
            labels.append(IdealLabel(dim=h.dim, compact_type=compact, is_so3=(h.dim == 3 and compact)))
        decomp = IdealDecomposition(self, ideals, labels)
        decomp.verify(kappa)
        return decomp

    def detect_so3_factor(self) -> bool:
        """Whether some simple ideal is isomorphic to so(3).

        For compact-type algebras a 3-dimensional simple ideal is so(3).
        """
        return any(lab.is_so3 for lab in self.simple_decomposition().labels)

    # -- Chevalley-Eilenberg complex ------------------------------------------

    def ce_differential(self, k: int, budget: int = CE_BUDGET) -> CEComplexSlice:
        """Matrix of ``d: Lambda^k g* -> Lambda^{k+1} g*`` (trivial coefficients)."""
        n = self.dim
        if k < 0 or k > n:
            raise ValueError(f"degree {k} out of range for dimension {n}")
        src, tgt = comb(n, k), comb(n, k + 1) if k < n else 0
        if max(src, tgt) > budget:
            raise BudgetExceeded(f"Lambda^{k} has {max(src, tgt)} monomials (> budget {budget})")
        dom = list(itertools.combinations(range(n), k))
        cod = list(itertools.combinations(range(n), k + 1))
        col_index = {s: i for i, s in enumerate(dom)}
        rows: list[dict] = []
        c = self.c
        for J in cod:
            row: dict[int, Fraction] = {}
            # (d w)(x_0..x_k) = sum_{a<b} (-1)^{a+b} w([x_a, x_b], x_0..^a..^b..x_k)
            for a in range(k + 1):
                for b in range(a + 1, k + 1):
                    rest = J[:a] + J[a + 1:b] + J[b + 1:]
                    sgn_ab = -1 if (a + b) % 2 else 1
                    cab = c[J[a]][J[b]]
                    for l in range(n):
                        if not cab[l] or l in rest:
                            continue
                        tup = (l,) + rest
                        # sign of sorting (l, rest): number of rest-elements smaller than l
                        inv = sum(1 for r in rest if r < l)
                        key = tuple(sorted(tup))
                        col = col_index[key]
                        val = sgn_ab * (-1 if inv % 2 else 1) * cab[l]
                        row[col] = row.get(col, 0) + val
            rows.append({i: v for i, v in row.items() if v})
        return CEComplexSlice(k, dom, cod, rows)

    def ce_cohomology(self, k: int, budget: int = CE_BUDGET) -> CohomologyReport:
        """Dimension and cocycle representatives of ``H^k(g)`` with trivial coefficients."""
        n = self.dim
        if k < 0 or k > n:
            raise ValueError(f"degree {k} out of range for dimension {n}")
        d_k = self.ce_differential(k, budget)
        ech = SparseEchelon(len(d_k.domain))
        for r in d_k.rows:
            ech.add(r)
        cocycles = ech.kernel()
        boundaries = SparseEchelon(len(d_k.domain))
        rank_prev = 0
        if k > 0:
            d_prev = self.ce_differential(k - 1, budget)
            # columns of d_{k-1} live in Lambda^k: transpose the sparse rows
            cols: list[dict] = [dict() for _ in d_prev.domain]
            for ri, r in enumerate(d_prev.rows):
                for ci, v in r.items():
                    cols[ci][ri] = v
            for col in cols:
                boundaries.add(col)
            rank_prev = boundaries.rank
        reps = []
        for z in cocycles:
            if boundaries.add(z):
                reps.append([z.get(i, Fraction(0)) for i in range(len(d_k.domain))])
        dim = len(cocycles) - rank_prev
        assert dim == len(reps)
        if k == 1:
            expected = self.dim - self.derived_subalgebra().dim
            if dim != expected:
                raise AssertionError(f"H^1 dimension {dim} disagrees with dim g - dim [g,g] = {expected}")
        return CohomologyReport(k, dim, d_k.domain, reps)

    def betti_numbers(self, budget: int = CE_BUDGET) -> list[int]:
        return [self.ce_cohomology(k, budget).dimension for k in range(self.dim + 1)]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "basis_names": list(self.basis_names),
            "brackets": [
                [i, j, k, str(v)] for (i, j), d in sorted(self.brackets().items()) for k, v in sorted(d.items())
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> LieAlgebra:
        for key in ("dim", "brackets"):
            if key not in doc:
                raise InvalidStructureConstants(f"missing field {key!r}")
        dim = doc["dim"]
        if not isinstance(dim, int) or dim < 0:
            raise InvalidStructureConstants(f"field 'dim' must be a natural number, got {dim!r}")
        entries: dict[tuple, dict] = {}
        for pos, item in enumerate(doc["brackets"]):
            if not isinstance(item, (list, tuple)) or len(item) != 4:
                raise InvalidStructureConstants(f"brackets[{pos}]: expected [i, j, k, coefficient], got {item!r}")
            i, j, k, coeff = item
            if not all(isinstance(t, int) for t in (i, j, k)):
                raise InvalidStructureConstants(f"brackets[{pos}]: indices must be integers, got {item!r}")
            if not i < j:
                raise InvalidStructureConstants(f"brackets[{pos}]: requires i < j, got {item!r}")
            if not (0 <= i < dim and 0 <= j < dim and 0 <= k < dim):
                raise InvalidStructureConstants(f"brackets[{pos}]: index out of range for dim {dim}: {item!r}")
            try:
                val = Fraction(coeff) if not isinstance(coeff, float) else None
            except (ValueError, ZeroDivisionError):
                val = None
            if val is None:
                raise InvalidStructureConstants(f"brackets[{pos}]: coefficient {coeff!r} is not an exact rational")
            d = entries.setdefault((i, j), {})
            if k in d:
                raise InvalidStructureConstants(f"brackets[{pos}]: duplicate entry for [{i}, {j}] component {k}")
            d[k] = val
        try:
            return cls(dim, entries, doc.get("basis_names"), name=name)
        except InvalidStructureConstants as exc:
            raise InvalidStructureConstants(str(exc)) from None

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> LieAlgebra:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidStructureConstants(f"{path}: line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(doc, name=path.stem)


def _entries_from_list(items):
    out: dict[tuple, dict] = {}
    for i, j, k, v in items:
        out.setdefault((i, j), {})
        out[(i, j)][k] = out[(i, j)].get(k, 0) + Fraction(v)
    return out.items()


def is_negative_definite(m: ExactMatrix) -> bool:
    n = m.nrows
    for k in range(1, n + 1):
        d = determinant(m.submatrix(range(k), range(k)))
        want = -1 if k % 2 else 1
        if d * want <= 0:
            return False
    return True


def is_positive_definite(m: ExactMatrix) -> bool:
    return all(determinant(m.submatrix(range(k), range(k))) > 0 for k in range(1, m.nrows + 1))


def _split(g: LieAlgebra, h: Subspace, rng: random.Random, max_tries: int) -> list[Subspace]:
    """Recursively split the ideal ``h`` of ``g`` into minimal ideals."""
    if h.dim <= 1:
        return [h]
    sub = g.subalgebra(h)
    cent = sub.centroid()
    if len(cent) <= 1:
        return [h]
    for _ in range(max_tries):
        coeffs = [rng.randint(-5, 5) for _ in cent]
        if not any(coeffs):
            continue
        x = ExactMatrix.zeros(h.dim, h.dim)
        for a, m in zip(coeffs, cent):
            x = x + m.scale(a)
        pieces = _primary_components(x)
        if len(pieces) > 1:
            out = []
            for basis in pieces:
                # coordinates in sub -> vectors in g
                vecs = [_combine(h.basis, v) for v in basis]
                out.extend(_split(g, Subspace(g, vecs), rng, max_tries))
            return out
    # centroid is a field: Q-simple ideal
    return [h]


def _combine(basis: Sequence[Sequence], coords: Sequence) -> Vector:
    out = _zero(len(basis[0]))
    for c, v in zip(coords, basis):
        if c:
            out = _axpy(c, v, out)
    return out


def _primary_components(x: ExactMatrix) -> list[list[Vector]]:
    """Kernels of ``f(x)^m`` for the irreducible factors ``f^m`` of the char. polynomial over Q."""
    sx = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in x.rows])
    lam = sympy.Symbol("lam")
    poly = sx.charpoly(lam)
    _, factors = sympy.factor_list(poly.as_expr(), lam)
    if len(factors) <= 1:
        return [[list(r) for r in ExactMatrix.identity(x.nrows).rows]]
    out = []
    for f, mult in factors:
        fx = sympy.zeros(x.nrows, x.nrows)
        coeffs = sympy.Poly(f, lam).all_coeffs()
        for c in coeffs:  # Horner
            fx = fx * sx + c * sympy.eye(x.nrows)
        fx = fx ** mult
        m = ExactMatrix([[Fraction(int(e.p), int(e.q)) for e in fx.row(i)] for i in range(x.nrows)], QQ, x.nrows)
        out.append(exact_kernel(m))
    return out


@dataclass
class Subspace:
    """Subspace of a Lie algebra spanned by linearly independent exact vectors."""

    ambient: LieAlgebra
    basis: list

    def __post_init__(self):
        self.basis = [[Fraction(x) for x in v] for v in self.basis]
        if self.basis and exact_rank(ExactMatrix.from_columns(self.basis, QQ)) != len(self.basis):
            raise ValueError("subspace basis is linearly dependent")

    @classmethod
    def from_vectors(cls, g: LieAlgebra, vectors: Iterable[Sequence]) -> Subspace:
        ech = SparseEchelon(g.dim)
        basis = []
        for v in vectors:
            v = [Fraction(x) for x in v]
            if ech.add(dict(enumerate(v))):
                basis.append(v)
        return cls(g, basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> ExactMatrix:
        return ExactMatrix.from_columns(self.basis, QQ, nrows=self.ambient.dim)

    def contains(self, v: Sequence) -> bool:
        if not any(v):
            return True
        if not self.basis:
            return False
        return exact_solve(self.matrix(), v) is not None

    def coordinates(self, v: Sequence) -> Vector:
        sol = exact_solve(self.matrix(), v)
        if sol is None:
            raise ValueError("vector not in subspace")
        return sol

    def __eq__(self, other):
        if not isinstance(other, Subspace) or self.dim != other.dim:
            return False
        return all(self.contains(v) for v in other.basis)


@dataclass
class IdealLabel:
    dim: int
    compact_type: bool
    is_so3: bool


@dataclass
class IdealDecomposition:
    algebra: LieAlgebra
    ideals: list
    labels: list

    def verify(self, kappa: ExactMatrix | None = None):
        g = self.algebra
        kappa = kappa or g.killing_form()
        if sum(h.dim for h in self.ideals) != g.dim:
            raise AssertionError("ideal dimensions do not sum to dim g")
        for h in self.ideals:
            if not g.is_ideal(h):
                raise AssertionError("decomposition piece is not an ideal")
            for v in h.basis:
                # no proper sub-ideal generated by a basis vector
                if g.ideal_closure([v]).dim != h.dim:
                    raise AssertionError("decomposition piece is not minimal")
        for h1, h2 in itertools.combinations(self.ideals, 2):
            for u in h1.basis:
                ku = kappa.apply(u)
                if any(sum(a * b for a, b in zip(ku, v)) for v in h2.basis):
                    raise AssertionError("ideals are not Killing-orthogonal")
        return True

    @property
    def dims(self) -> list[int]:
        return [h.dim for h in self.ideals]


@dataclass
class CEComplexSlice:
    degree: int
    domain: list
    codomain: list
    rows: list = field(repr=False)

    @property
    def domain_dim(self) -> int:
        return len(self.domain)

    def to_matrix(self) -> ExactMatrix:
        m = len(self.domain)
        return ExactMatrix([[r.get(j, Fraction(0)) for j in range(m)] for r in self.rows], QQ, m)


@dataclass
class CohomologyReport:
    degree: int
    dimension: int
    monomials: list
    representatives: list = field(repr=False)


# ---------------------------------------------------------------------------
# built-in algebras


def from_matrix_basis(mats: Sequence[ExactMatrix], names: Sequence[str] | None = None, name: str = "") -> LieAlgebra:
    """Structure constants of a Lie algebra of matrices closed under commutators."""
    flat = [[x for r in m.rows for x in r] for m in mats]
    basis = ExactMatrix.from_columns(flat, QQ)
    if exact_rank(basis) != len(mats):
        raise LieAlgebraError("matrix basis is linearly dependent")
    brackets = {}
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            coords = exact_solve(basis, [x for r in comm.rows for x in r])
            if coords is None:
                raise LieAlgebraError(f"commutator of basis elements {i}, {j} leaves the span")
            d = {k: v for k, v in enumerate(coords) if v}
            if d:
                brackets[(i, j)] = d
    return LieAlgebra(len(mats), brackets, names, name=name)


def elementary_skew(n: int, a: int, b: int) -> ExactMatrix:
    """``E_ab = e_a e_b^T - e_b e_a^T``."""
    rows = [[0] * n for _ in range(n)]
    rows[a][b] = 1
    rows[b][a] = -1
    return ExactMatrix(rows, QQ)


def so(n: int) -> LieAlgebra:
    """so(n) in the basis ``E_ab`` (a < b, lexicographic).

    For n = 3 the basis is (E_32, E_13, E_21), so that [e1, e2] = e3 cyclically.
    """
    if n < 2:
        raise ValueError("so(n) needs n >= 2")
    if n == 3:
        mats = [elementary_skew(3, 2, 1), elementary_skew(3, 0, 2), elementary_skew(3, 1, 0)]
        return from_matrix_basis(mats, ["e1", "e2", "e3"], name="so3")
    pairs = list(itertools.combinations(range(n), 2))
    mats = [elementary_skew(n, a, b) for a, b in pairs]
    return from_matrix_basis(mats, [f"E{a + 1}{b + 1}" for a, b in pairs], name=f"so{n}")


def so3() -> LieAlgebra:
    return so(3)


def abelian(n: int) -> LieAlgebra:
    return LieAlgebra(n, {}, name=f"abelian{n}")


def heisenberg() -> LieAlgebra:
    return LieAlgebra(3, {(0, 1): {2: 1}}, ["x", "y", "z"], name="heisenberg")


def affine_line() -> LieAlgebra:
    """The 2-dimensional non-abelian algebra ``[x, y] = y``."""
    return LieAlgebra(2, {(0, 1): {1: 1}}, ["x", "y"], name="aff1")


def direct_sum(*algebras: LieAlgebra) -> LieAlgebra:
    brackets = {}
    names = []
    off = 0
    for g in algebras:
        for (i, j), d in g.brackets().items():
            brackets[(i + off, j + off)] = {k + off: v for k, v in d.items()}
        names.extend(f"{g.name or 'g'}.{nm}" for nm in g.basis_names)
        off += g.dim
    return LieAlgebra(off, brackets, names, name="+".join(g.name or "g" for g in algebras))


def rigidity_inputs() -> dict[str, LieAlgebra]:
    """Bundled algebras used in the examples and tests."""
    return {
        "so3": so(3), "so4": so(4), "so5": so(5),
        "heisenberg": heisenberg(), "abelian2": abelian(2), "aff1": affine_line(),
    }
