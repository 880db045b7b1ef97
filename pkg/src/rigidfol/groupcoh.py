"""First group cohomology of finitely presented groups via Fox calculus.

A crossed homomorphism ``psi`` (``psi(gh) = psi(g) + g.psi(h)``) on a free
group is determined by its values on the generators; it descends to the
presented group iff it kills every relator.  Evaluating the Fox derivatives
of the relators in the representation turns that condition into a linear
system whose kernel is Z^1.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dynamics
from .exactnum import QQ, ExactMatrix, SparseEchelon, sparse_kernel

SVD_THRESHOLD = 1e-8
RELATOR_TOL = 1e-9


class InvalidPresentation(ValueError):
    pass


class InvalidRepresentation(ValueError):
    pass


Word = tuple  # of (generator index, +1 | -1)


def _parse_letter(token, names: list[str]) -> tuple[int, int]:
    if isinstance(token, (list, tuple)) and len(token) == 2:
        name, exp = token
    elif isinstance(token, str):
        tok = token.strip()
        if tok.startswith("-"):
            name, exp = tok[1:], -1
        elif tok.endswith("^-1"):
            name, exp = tok[:-3], -1
        else:
            name, exp = tok, 1
    else:
        raise InvalidPresentation(f"cannot parse letter {token!r}")
    if name not in names:
        raise InvalidPresentation(f"letter {token!r} names no declared generator")
    if exp not in (1, -1):
        raise InvalidPresentation(f"letter {token!r} must have exponent +1 or -1")
    return names.index(name), exp


@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relators: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        rels = []
        for r in self.relators:
            word = []
            for letter in r:
                if isinstance(letter, tuple) and len(letter) == 2 and isinstance(letter[0], int):
                    g, e = letter
                    if not 0 <= g < len(self.generators) or e not in (1, -1):
                        raise InvalidPresentation(f"bad letter {letter!r}")
                    word.append((g, e))
                else:
                    word.append(_parse_letter(letter, list(self.generators)))
            rels.append(tuple(word))
        object.__setattr__(self, "relators", tuple(rels))

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def spell(self, word: Word) -> str:
        return " ".join(self.generators[g] + ("" if e == 1 else "^-1") for g, e in word) or "1"

    def to_dict(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [[self.generators[g] if e == 1 else "-" + self.generators[g] for g, e in r]
                         for r in self.relators],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Presentation:
        if "generators" not in doc:
            raise InvalidPresentation("missing field 'generators'")
        return cls(tuple(doc["generators"]), tuple(tuple(r) for r in doc.get("relators", [])))

    @classmethod
    def load(cls, path) -> Presentation:
        return cls.from_dict(json.loads(Path(path).read_text()))


def free_group(k: int, names: Sequence[str] | None = None) -> Presentation:
    names = list(names) if names else [chr(ord("a") + i) for i in range(k)]
    return Presentation(tuple(names), ())


def cyclic_group(order: int) -> Presentation:
    return Presentation(("a",), (tuple([(0, 1)] * order),))


def free_abelian_rank2() -> Presentation:
    return Presentation(("a", "b"), (((0, 1), (1, 1), (0, -1), (1, -1)),))


def surface_group(genus: int) -> Presentation:
    """``<a1, b1, ..., ag, bg | prod [ai, bi]>``."""
    names = []
    word = []
    for i in range(genus):
        names += [f"a{i + 1}", f"b{i + 1}"]
        a, b = 2 * i, 2 * i + 1
        word += [(a, 1), (b, 1), (a, -1), (b, -1)]
    return Presentation(tuple(names), (tuple(word),))


@dataclass
class MatrixRep:
    """Generator images; exact (Fraction ExactMatrix) or float (ndarray)."""

    presentation: Presentation
    matrices: list
    exact: bool = field(init=False)

    def __post_init__(self):
        if len(self.matrices) != self.presentation.ngens:
            raise InvalidRepresentation(
                f"{len(self.matrices)} matrices for {self.presentation.ngens} generators")
        self.exact = all(isinstance(m, ExactMatrix) for m in self.matrices)
        if not self.exact:
            self.matrices = [
                m.to_float() if isinstance(m, ExactMatrix) else np.asarray(m, dtype=float) for m in self.matrices
            ]
        dims = {self._shape(m) for m in self.matrices}
        if len(dims) != 1 or any(a != b for a, b in dims):
            raise InvalidRepresentation(f"generator matrices must be square of one size, got {sorted(dims)}")
        self._inverses = [self._inv(m) for m in self.matrices]
        self.check_relators()

    @staticmethod
    def _shape(m):
        return m.shape

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0] if self.matrices else 0

    def _inv(self, m):
        try:
            return m.inverse() if self.exact else np.linalg.inv(m)
        except (ZeroDivisionError, np.linalg.LinAlgError):
            raise InvalidRepresentation("generator matrix is not invertible") from None

    def identity(self):
        return ExactMatrix.identity(self.dim) if self.exact else np.eye(self.dim)

    def letter(self, g: int, e: int):
        return self.matrices[g] if e == 1 else self._inverses[g]

    def evaluate(self, word: Word):
        out = self.identity()
        for g, e in word:
            out = out @ self.letter(g, e)
        return out

    def check_relators(self):
        for r in self.presentation.relators:
            val = self.evaluate(r)
            if self.exact:
                if val != self.identity():
                    raise InvalidRepresentation(f"relator {self.presentation.spell(r)} is not sent to the identity")
            else:
                res = float(np.max(np.abs(val - np.eye(self.dim)))) if self.dim else 0.0
                if res > RELATOR_TOL:
                    raise InvalidRepresentation(
                        f"relator {self.presentation.spell(r)} has residual {res:.2e} > {RELATOR_TOL:.0e}")

    @classmethod
    def trivial(cls, pres: Presentation, dim: int = 1) -> MatrixRep:
        return cls(pres, [ExactMatrix.identity(dim) for _ in pres.generators])

    @classmethod
    def from_dict(cls, pres: Presentation, doc: dict) -> MatrixRep:
        mats = []
        for name in pres.generators:
            if name not in doc:
                raise InvalidRepresentation(f"no matrix for generator {name!r}")
            m = doc[name]
            if any(isinstance(x, float) for r in m for x in r):
                mats.append(np.array(m, dtype=float))
            else:
                mats.append(ExactMatrix([[QQ.parse(x) for x in r] for r in m], QQ))
        return cls(pres, mats)

    @classmethod
    def load(cls, pres: Presentation, path) -> MatrixRep:
        return cls.from_dict(pres, json.loads(Path(path).read_text()))


def fox_matrix(pres: Presentation, rep: MatrixRep):
    """Fox Jacobian evaluated in the representation.

    Block (r, i) is the image of the Fox derivative of relator r with respect
    to generator i: each occurrence ``u g_i w`` contributes ``pi(u)`` and each
    ``u g_i^-1 w`` contributes ``-pi(u g_i^-1)``.  Returns an ExactMatrix for
    exact representations, an ndarray otherwise.
    """
    n, m = rep.dim, pres.ngens
    nrel = len(pres.relators)
    if rep.exact:
        blocks = [[[[Fraction(0)] * n for _ in range(n)] for _ in range(m)] for _ in range(nrel)]
    else:
        big = np.zeros((nrel * n, m * n))
    for ri, r in enumerate(pres.relators):
        prefix = rep.identity()
        for g, e in r:
            if e == 1:
                contrib, sign = prefix, 1
                prefix = prefix @ rep.letter(g, 1)
            else:
                prefix = prefix @ rep.letter(g, -1)
                contrib, sign = prefix, -1
            if rep.exact:
                blk = blocks[ri][g]
                for a in range(n):
                    row = contrib.rows[a]
                    for b in range(n):
                        if row[b]:
                            blk[a][b] += sign * row[b]
            else:
                big[ri * n:(ri + 1) * n, g * n:(g + 1) * n] += sign * contrib
    if not rep.exact:
        return big
    rows = []
    for ri in range(nrel):
        for a in range(n):
            rows.append([blocks[ri][g][a][b] for g in range(m) for b in range(n)])
    return ExactMatrix(rows, QQ, m * n)


@dataclass
class CocycleSpaceReport:
    dim_z1: int
    dim_b1: int
    dim_h1: int
    cocycle_basis: list          # each: list of per-generator value vectors
    representatives: list        # cocycles spanning a complement of B^1
    path: str                    # "exact" or "svd"
    module_dim: int = 0
    fixed_dim: int = 0
    degree: int | None = None

    def to_dict(self) -> dict:
        d = {
            "dim_Z1": self.dim_z1, "dim_B1": self.dim_b1, "dim_H1": self.dim_h1,
            "module_dim": self.module_dim, "fixed_dim": self.fixed_dim, "rank_path": self.path,
        }
        if self.degree is not None:
            d["degree"] = self.degree
        return d


def _split_values(vec, m: int, n: int) -> list:
    return [list(vec[g * n:(g + 1) * n]) for g in range(m)]


def _null_space(a: np.ndarray, threshold: float) -> np.ndarray:
    if a.shape[1] == 0:
        return np.zeros((0, 0))
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    _, sv, vt = np.linalg.svd(a)
    full = np.zeros(a.shape[1])
    full[: len(sv)] = sv
    return vt[full < threshold].T


def fixed_space_dim(rep: MatrixRep, threshold: float = SVD_THRESHOLD) -> int:
    n = rep.dim
    if rep.exact:
        rows = []
        for mat in rep.matrices:
            for a in range(n):
                row = {b: mat.rows[a][b] - (1 if a == b else 0) for b in range(n)}
                rows.append({b: v for b, v in row.items() if v})
        return len(sparse_kernel(rows, n))
    if not rep.matrices:
        return n
    stacked = np.concatenate([m - np.eye(n) for m in rep.matrices], axis=0)
    return _null_space(stacked, threshold).shape[1]


def coboundary(rep: MatrixRep, v: Sequence) -> list:
    """Per-generator values of ``g -> g.v - v`` (stacked)."""
    out = []
    for mat in rep.matrices:
        if rep.exact:
            gv = mat.apply(list(v))
            out.extend(x - y for x, y in zip(gv, v))
        else:
            out.extend((mat @ np.asarray(v, dtype=float) - np.asarray(v, dtype=float)).tolist())
    return out


def h1_dimension(pres: Presentation, rep: MatrixRep, threshold: float = SVD_THRESHOLD) -> CocycleSpaceReport:
    """dim Z^1 from the Fox kernel, dim B^1 = dim V - dim V^Gamma, and H^1 representatives."""
    if rep.presentation is not pres and rep.presentation != pres:
        raise InvalidRepresentation("representation belongs to another presentation")
    n, m = rep.dim, pres.ngens
    fox = fox_matrix(pres, rep)
    fixed = fixed_space_dim(rep, threshold)
    dim_b1 = n - fixed
    if rep.exact:
        rows = [{j: x for j, x in enumerate(r) if x} for r in fox.rows]
        z1 = sparse_kernel(rows, m * n)
        ech = SparseEchelon(m * n)
        for k in range(n):
            e = [Fraction(int(i == k)) for i in range(n)]
            ech.add({j: x for j, x in enumerate(coboundary(rep, e)) if x})
        reps = [z for z in z1 if ech.add({j: x for j, x in enumerate(z) if x})]
        basis = z1
        path = "exact"
    else:
        ker = _null_space(fox, threshold) if fox.shape[0] else np.eye(m * n)
        basis = [ker[:, k] for k in range(ker.shape[1])]
        # complement of the coboundaries inside Z^1
        cob = np.array([coboundary(rep, np.eye(n)[k]) for k in range(n)]).T.reshape(m * n, n)
        if cob.size:
            u, sv, _ = np.linalg.svd(cob, full_matrices=False)
            cob_basis = u[:, sv > threshold]
        else:
            cob_basis = np.zeros((m * n, 0))
        resid = ker - cob_basis @ (cob_basis.T @ ker)
        if resid.size:
            u, sv, _ = np.linalg.svd(resid, full_matrices=False)
            reps = [u[:, k] for k in range(int(np.sum(sv > threshold)))]
        else:
            reps = []
        path = "svd"
    dim_z1 = len(basis)
    report = CocycleSpaceReport(
        dim_z1, dim_b1, dim_z1 - dim_b1,
        [_split_values(z, m, n) for z in basis],
        [_split_values(z, m, n) for z in reps],
        path, n, fixed,
    )
    if report.dim_h1 != len(reps):
        raise ArithmeticError(
            f"inconsistent ranks: dim Z1 - dim B1 = {report.dim_h1} but {len(reps)} independent classes")
    return report


def cocycle_on_word(rep: MatrixRep, values: Sequence[Sequence], word: Word):
    """Evaluate the crossed-homomorphism extension of generator values on a word, letter by letter."""
    n = rep.dim
    if rep.exact:
        total = [Fraction(0)] * n
        prefix = rep.identity()
        for g, e in word:
            if e == 1:
                step = list(values[g])
            else:
                # psi(g^-1) = -g^-1 psi(g)
                step = [-x for x in rep.letter(g, -1).apply(list(values[g]))]
            moved = prefix.apply(step)
            total = [a + b for a, b in zip(total, moved)]
            prefix = prefix @ rep.letter(g, e)
        return total
    total = np.zeros(n)
    prefix = np.eye(n)
    for g, e in word:
        val = np.asarray(values[g], dtype=float)
        step = val if e == 1 else -(rep.letter(g, -1) @ val)
        total = total + prefix @ step
        prefix = prefix @ rep.letter(g, e)
    return total


# ---------------------------------------------------------------------------
# truncated rigidity check on harmonic spaces


def truncated_rigidity_check(pres: Presentation, embedding: dict | Sequence, degrees: Sequence[int],
                             threshold: float = SVD_THRESHOLD, workers: int = 1,
                             cap: int = dynamics.HARMONIC_CAP) -> list[CocycleSpaceReport]:
    """dim H^1(Gamma, H_d) for each degree, with Gamma acting through SO(n) on harmonic polynomials.

    Vanishing for every tested degree is only that: vanishing up to the
    largest degree tested.
    """
    if isinstance(embedding, dict):
        try:
            mats = [np.asarray(embedding[g], dtype=float) for g in pres.generators]
        except KeyError as exc:
            raise InvalidRepresentation(f"no image for generator {exc.args[0]!r}") from None
    else:
        mats = [np.asarray(g, dtype=float) for g in embedding]
    if len(mats) != pres.ngens:
        raise InvalidRepresentation("one matrix per generator required")
    n = mats[0].shape[0]
    for k, g in enumerate(mats):
        if dynamics.orthogonality_residual(g) > RELATOR_TOL or np.linalg.det(g) < 0:
            raise InvalidRepresentation(f"image of {pres.generators[k]} is not in SO({n})")
    # relators are checked in SO(n) itself
    MatrixRep(pres, mats)

    def one(d: int) -> CocycleSpaceReport:
        space = dynamics.harmonic_space(n, d, cap)
        rhos = dynamics.represent(np.stack(mats), space)
        rep = MatrixRep(pres, list(rhos))
        rep_report = h1_dimension(pres, rep, threshold)
        rep_report.degree = d
        return rep_report

    degrees = list(degrees)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, degrees))
    return [one(d) for d in degrees]
