"""Word balls in compact orthogonal groups and density / spectral-gap diagnostics.

Generators are float orthogonal matrices (typically Galois images of integral
elements).  Polynomials in ``n`` variables carry the representation
``(pi(g) p)(x) = p(g^{-1} x)``; on harmonic polynomials of degree ``d`` this is
an irreducible orthogonal representation once the Fischer inner product
``<x^a, x^b> = a! delta_ab`` is used.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .exactnum import QQ, ExactMatrix, sparse_kernel


class BudgetExceeded(RuntimeError):
    pass


class NotConverged(RuntimeError):
    pass


DEDUP_TOL = 1e-9
ORTHO_TOL = 1e-10
BALL_CAP = 250_000
HARMONIC_CAP = 2000
SVD_THRESHOLD = 1e-8
POWER_TOL = 1e-8
POWER_MAX_ITERS = 500


# ---------------------------------------------------------------------------
# word balls


@dataclass
class WordBall:
    generators: list           # symmetrized generator matrices
    letters: list              # names, parallel to generators
    radius: int
    elements: np.ndarray       # (N, n, n)
    words: list                # tuples of letter indices
    level_starts: list         # index of the first element of each word length
    finite: bool = False       # closure reached before the radius

    def __len__(self):
        return len(self.words)

    @property
    def n(self) -> int:
        return self.elements.shape[1]

    def upto(self, r: int) -> np.ndarray:
        """Elements of word length at most ``r``."""
        if r >= len(self.level_starts) - 1:
            return self.elements
        return self.elements[: self.level_starts[r + 1]]

    def count(self, r: int) -> int:
        return len(self.upto(r))

    def spell(self, word: tuple) -> str:
        return "*".join(self.letters[k] for k in word) if word else "1"

    def input_hash(self) -> str:
        h = hashlib.sha256()
        for g in self.generators:
            h.update(np.ascontiguousarray(g, dtype=np.float64).tobytes())
        h.update(str(self.radius).encode())
        return h.hexdigest()

    def save(self, path):
        """Persist as (word, matrix) records with a content hash."""
        records = [{"word": list(w), "matrix": m.tolist()} for w, m in zip(self.words, self.elements)]
        body = {
            "letters": self.letters,
            "generators": [g.tolist() for g in self.generators],
            "radius": self.radius,
            "level_starts": self.level_starts,
            "finite": self.finite,
            "records": records,
        }
        text = json.dumps(body, sort_keys=True)
        digest = hashlib.sha256(text.encode()).hexdigest()
        Path(path).write_text(json.dumps({"sha256": digest, "ball": body}, sort_keys=True))

    @classmethod
    def load(cls, path) -> WordBall:
        doc = json.loads(Path(path).read_text())
        body = doc["ball"]
        text = json.dumps(body, sort_keys=True)
        if hashlib.sha256(text.encode()).hexdigest() != doc.get("sha256"):
            raise ValueError(f"ball cache {path} failed its integrity check")
        recs = body["records"]
        return cls(
            [np.array(g) for g in body["generators"]],
            body["letters"],
            body["radius"],
            np.array([r["matrix"] for r in recs], dtype=float),
            [tuple(r["word"]) for r in recs],
            body["level_starts"],
            body["finite"],
        )


def orthogonality_residual(g: np.ndarray) -> float:
    return float(np.max(np.abs(g.T @ g - np.eye(g.shape[0]))))


def symmetrize(gens: Sequence[np.ndarray], names: Sequence[str] | None = None,
               tol: float = DEDUP_TOL) -> tuple[list, list]:
    """Append inverses (transposes) missing from the list, each right after its generator."""
    names = list(names) if names is not None else [f"g{k}" for k in range(len(gens))]
    out, out_names = [], []
    present = [np.asarray(g, dtype=float) for g in gens]
    for g, nm in zip(present, names):
        out.append(g)
        out_names.append(nm)
    for g, nm in zip(present, names):
        inv = g.T
        if not any(np.linalg.norm(inv - h) < tol for h in out):
            idx = out_names.index(nm)
            out.insert(idx + 1, inv)
            out_names.insert(idx + 1, nm + "^-1")
    return out, out_names


class _ProjectionIndex:
    """Exact radius queries via a sorted random 1-d projection.

    Any pair within ``tol`` in Frobenius distance is within ``tol`` after
    projecting onto a unit vector, so candidate pairs come from a window in
    the sorted projections and are then checked at full dimension.
    """

    def __init__(self, dim: int):
        rng = np.random.default_rng(12345)
        u = rng.standard_normal(dim)
        self.u = u / np.linalg.norm(u)
        self.points = np.zeros((0, dim))
        self.proj = np.zeros(0)
        self.order = np.zeros(0, dtype=np.int64)
        self.sorted_proj = np.zeros(0)

    def add(self, pts: np.ndarray):
        self.points = np.concatenate([self.points, pts])
        self.proj = np.concatenate([self.proj, pts @ self.u])
        self.order = np.argsort(self.proj, kind="stable")
        self.sorted_proj = self.proj[self.order]

    def pairs_within(self, pts: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (query, stored) at Frobenius distance < tol."""
        p = pts @ self.u
        lo = np.searchsorted(self.sorted_proj, p - tol, side="left")
        hi = np.searchsorted(self.sorted_proj, p + tol, side="right")
        counts = hi - lo
        q = np.repeat(np.arange(len(pts)), counts)
        if not len(q):
            return q, q
        offs = np.arange(len(q)) - np.repeat(np.cumsum(counts) - counts, counts)
        stored = self.order[np.repeat(lo, counts) + offs]
        close = np.linalg.norm(pts[q] - self.points[stored], axis=1) < tol
        return q[close], stored[close]


def _dedup_against(index: _ProjectionIndex, cands: np.ndarray, tol: float) -> np.ndarray:
    """Mask of candidates at distance >= tol from the stored set and from earlier candidates."""
    flat = cands.reshape(len(cands), -1)
    keep = np.ones(len(cands), dtype=bool)
    q, _ = index.pairs_within(flat, tol)
    keep[q] = False
    idx = np.nonzero(keep)[0]
    if len(idx) > 1:
        local = _ProjectionIndex(flat.shape[1])
        local.u = index.u
        local.add(flat[idx])
        a, b = local.pairs_within(flat[idx], tol)
        later = b > a
        a, b = a[later], b[later]
        if len(a):
            drop = np.zeros(len(idx), dtype=bool)
            nbrs: dict[int, list] = {}
            for x, y in zip(a.tolist(), b.tolist()):
                nbrs.setdefault(x, []).append(y)
            for x in range(len(idx)):
                if drop[x]:
                    continue
                for y in nbrs.get(x, ()):
                    drop[y] = True
            keep[idx[drop]] = False
    return keep


def enumerate_ball(gens: Sequence[np.ndarray], radius: int, dedup_tol: float = DEDUP_TOL,
                   cap: int = BALL_CAP, names: Sequence[str] | None = None, workers: int = 1,
                   symmetric: bool = True) -> WordBall:
    """Breadth-first product closure up to word length ``radius``.

    Elements closer than ``dedup_tol`` in Frobenius norm are identified; the
    shortest, then lexicographically first, word is kept.
    """
    gens = [np.asarray(g, dtype=float) for g in gens]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].shape[0]
    for k, g in enumerate(gens):
        if g.shape != (n, n):
            raise ValueError(f"generator {k} has shape {g.shape}")
        if orthogonality_residual(g) > ORTHO_TOL:
            raise ValueError(f"generator {k} is not orthogonal to {ORTHO_TOL}")
    if symmetric:
        gens, names = symmetrize(gens, names, dedup_tol)
    else:
        names = list(names) if names is not None else [f"g{k}" for k in range(len(gens))]
    letters = np.stack(gens)
    elements = [np.eye(n)]
    words: list[tuple] = [()]
    level_starts = [0, 1]
    index = _ProjectionIndex(n * n)
    index.add(np.eye(n).reshape(1, -1))
    frontier = np.eye(n)[None]
    frontier_words: list[tuple] = [()]
    finite = False
    for _ in range(radius):
        # candidates in (frontier word, letter) lexicographic order
        chunks = np.array_split(np.arange(len(frontier)), max(1, workers))

        def products(ix):
            return np.einsum("fij,ljk->flik", frontier[ix], letters).reshape(-1, n, n)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                cands = np.concatenate(list(ex.map(products, chunks)))
        else:
            cands = products(np.arange(len(frontier)))
        cand_words = [w + (l,) for w in frontier_words for l in range(len(letters))]
        keep = _dedup_against(index, cands, dedup_tol)
        new = cands[keep]
        new_words = [w for w, k in zip(cand_words, keep) if k]
        if len(elements) + len(new) > cap:
            raise BudgetExceeded(f"ball exceeds {cap} elements")
        if not len(new):
            finite = True
            level_starts.append(len(words))
            continue
        elements.extend(new)
        words.extend(new_words)
        level_starts.append(len(words))
        index.add(new.reshape(len(new), -1))
        frontier, frontier_words = new, new_words
    return WordBall(gens, list(names), radius, np.stack(elements), words, level_starts, finite)


# ---------------------------------------------------------------------------
# Haar sampling and covering radius


def haar_orthogonal(n: int, count: int, seed: int) -> np.ndarray:
    """Haar-distributed samples of SO(n): QR of Gaussian matrices, R with positive diagonal, det fixed."""
    rng = np.random.default_rng(seed)
    out = np.empty((count, n, n))
    for k in range(count):
        z = rng.standard_normal((n, n))
        q, r = np.linalg.qr(z)
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        out[k] = q
    return out


@dataclass
class DensityReport:
    radii: list
    covering_radii: list
    ball_sizes: list
    probes: int
    seed: int | None
    metric: str = "frobenius"
    finite: bool = False

    def to_dict(self) -> dict:
        return {
            "metric": self.metric, "probes": self.probes, "seed": self.seed, "finite": self.finite,
            "per_radius": [
                {"radius": r, "covering_radius": c, "ball_size": s}
                for r, c, s in zip(self.radii, self.covering_radii, self.ball_sizes)
            ],
        }

    def csv(self) -> str:
        lines = ["radius,covering_radius"]
        lines += [f"{r},{c!r}" for r, c in zip(self.radii, self.covering_radii)]
        return "\n".join(lines) + "\n"

    def weakly_decreasing(self) -> bool:
        c = self.covering_radii
        return all(b <= a for a, b in zip(c, c[1:]))


def covering_radius(ball: WordBall, probes: int | np.ndarray = 500, seed: int = 0,
                    radii: Sequence[int] | None = None) -> DensityReport:
    """Max over probe matrices of the Frobenius distance to the nearest ball element, per radius."""
    n = ball.n
    if isinstance(probes, np.ndarray):
        pts = probes
        seed_used = None
    else:
        pts = haar_orthogonal(n, int(probes), seed)
        seed_used = seed
    flat = pts.reshape(len(pts), -1)
    radii = list(range(1, ball.radius + 1)) if radii is None else list(radii)
    if not radii:
        radii = [0]
    cov, sizes = [], []
    for r in radii:
        elems = ball.upto(r)
        tree = cKDTree(elems.reshape(len(elems), -1))
        dist, _ = tree.query(flat, k=1)
        cov.append(float(np.max(dist)))
        sizes.append(int(len(elems)))
    return DensityReport(radii, cov, sizes, len(pts), seed_used, finite=ball.finite)


# ---------------------------------------------------------------------------
# harmonic polynomials


def monomials(n: int, d: int) -> list[tuple]:
    """Exponent vectors of degree ``d`` in ``n`` variables, in a fixed order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), d):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out


@dataclass
class HarmonicSpace:
    n: int
    degree: int
    monomials: list
    basis: list                       # exact coefficient vectors in the monomial basis
    frame: np.ndarray = field(repr=False)   # Fischer-orthonormal float basis (columns)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def fischer_weights(self) -> np.ndarray:
        return np.array([float(np.prod([factorial(a) for a in m])) for m in self.monomials])


def harmonic_dimension(n: int, d: int) -> int:
    return comb(n + d - 1, d) - (comb(n + d - 3, d - 2) if d >= 2 else 0)


def laplacian_matrix(n: int, d: int) -> ExactMatrix:
    """Exact matrix of the Laplacian from degree ``d`` to degree ``d - 2`` monomials."""
    src = monomials(n, d)
    tgt = monomials(n, d - 2) if d >= 2 else []
    index = {m: k for k, m in enumerate(tgt)}
    rows = [[Fraction(0)] * len(src) for _ in tgt]
    for j, m in enumerate(src):
        for i in range(n):
            if m[i] >= 2:
                t = list(m)
                t[i] -= 2
                rows[index[tuple(t)]][j] += m[i] * (m[i] - 1)
    return ExactMatrix(rows, QQ, len(src))


def harmonic_space(n: int, d: int, cap: int = HARMONIC_CAP) -> HarmonicSpace:
    """Degree-``d`` harmonic polynomials in ``n`` variables (exact Laplacian kernel)."""
    if n < 2 or d < 0:
        raise ValueError("need n >= 2 and d >= 0")
    mons = monomials(n, d)
    if len(mons) > cap:
        raise BudgetExceeded(f"{len(mons)} monomials of degree {d} in {n} variables exceed cap {cap}")
    lap = laplacian_matrix(n, d)
    if lap.nrows:
        rows = [{j: x for j, x in enumerate(r) if x} for r in lap.rows]
        basis = sparse_kernel(rows, len(mons))
    else:
        basis = [[Fraction(int(i == j)) for i in range(len(mons))] for j in range(len(mons))]
    if len(basis) != harmonic_dimension(n, d):
        raise AssertionError("harmonic dimension formula violated")
    w = np.array([float(np.prod([factorial(a) for a in m])) for m in mons])
    b = np.array([[float(x) for x in v] for v in basis]).T.reshape(len(mons), len(basis))
    # orthonormalize under the Fischer inner product
    sw = np.sqrt(w)
    q, _ = np.linalg.qr(sw[:, None] * b)
    frame = q / sw[:, None]
    return HarmonicSpace(n, d, mons, basis, frame)


def _mult_maps(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """For each degree-d monomial: its first variable and the index of the quotient monomial."""
    prev = {m: k for k, m in enumerate(monomials(n, d - 1))}
    first, parent = [], []
    for m in monomials(n, d):
        i = next(k for k in range(n) if m[k])
        t = list(m)
        t[i] -= 1
        first.append(i)
        parent.append(prev[tuple(t)])
    return np.array(first), np.array(parent)


def _times_var(n: int, d: int) -> np.ndarray:
    """``T[j, c]``: index of the degree-d monomial ``x_j * m_c`` for each degree-(d-1) monomial ``m_c``."""
    src = monomials(n, d - 1)
    tgt = {m: k for k, m in enumerate(monomials(n, d))}
    out = np.zeros((n, len(src)), dtype=np.intp)
    for c, m in enumerate(src):
        for j in range(n):
            t = list(m)
            t[j] += 1
            out[j, c] = tgt[tuple(t)]
    return out


def substitution_matrices(hs: np.ndarray, d: int) -> np.ndarray:
    """Matrices of ``p(x) -> p(h x)`` on degree-``d`` monomials for a batch of ``h``."""
    hs = np.asarray(hs, dtype=float)
    single = hs.ndim == 2
    if single:
        hs = hs[None]
    b, n, _ = hs.shape
    # batch axis last keeps the scatter below on contiguous rows
    ht = np.ascontiguousarray(np.transpose(hs, (1, 2, 0)))   # (n, n, b)
    s = np.ones((1, 1, b))
    for k in range(1, d + 1):
        first, parent = _mult_maps(n, k)
        tv = _times_var(n, k)
        # column alpha = sum_j h[first(alpha), j] * (x_j * column of parent(alpha))
        prev = s[:, parent, :]                                 # (rows_{k-1}, cols_k, b)
        new = np.zeros((len(first), len(first), b))
        for j in range(n):
            # multiplication by x_j is injective on monomials, so fancy-index accumulation is safe
            new[tv[j]] += prev * ht[first, j][None]
        s = new
    s = np.transpose(s, (2, 0, 1))
    return s[0] if single else s


def represent(gs: np.ndarray, space: HarmonicSpace) -> np.ndarray:
    """Orthogonal matrices of ``pi(g)`` on the harmonic space (Fischer-orthonormal frame)."""
    gs = np.asarray(gs, dtype=float)
    single = gs.ndim == 2
    if single:
        gs = gs[None]
    inv = np.transpose(gs, (0, 2, 1))
    s = substitution_matrices(inv, space.degree)
    w = space.fischer_weights
    f = space.frame
    rho = np.einsum("ra,r,brc,cs->bas", f, w, s, f, optimize=True)
    return rho[0] if single else rho


# ---------------------------------------------------------------------------
# averaging operator


@dataclass
class GapEstimate:
    degree: int
    estimate: float | None
    gap: float | None
    iterations: int
    tol: float
    converged: bool
    invariant_dim: int
    space_dim: int
    path: str

    def to_dict(self) -> dict:
        return {
            "degree": self.degree, "norm_estimate": self.estimate, "gap": self.gap,
            "iterations": self.iterations, "tol": self.tol, "converged": self.converged,
            "invariant_dim": self.invariant_dim, "space_dim": self.space_dim, "invariant_path": self.path,
        }


def _is_integer_matrix(g: np.ndarray) -> bool:
    return bool(np.all(g == np.round(g)))


def invariant_subspace(rhos: np.ndarray, gens: Sequence[np.ndarray] | None = None,
                       space: HarmonicSpace | None = None,
                       threshold: float = SVD_THRESHOLD) -> tuple[np.ndarray, str]:
    """Orthonormal basis (columns) of the joint fixed space, and which path computed it."""
    k = rhos.shape[1]
    if gens is not None and space is not None and all(_is_integer_matrix(g) for g in gens):
        # integer generators act by integer substitutions: solve exactly in monomial coordinates
        rows = []
        nb = len(space.basis)
        for g in gens:
            s = substitution_matrices(np.asarray(g).T, space.degree)
            s = np.round(s).astype(np.int64)
            # (S - I) B c = 0 in monomial coordinates
            for r in range(s.shape[0]):
                row = {}
                for c in range(nb):
                    val = Fraction(0)
                    for m, coef in enumerate(space.basis[c]):
                        if coef:
                            val += (int(s[r, m]) - (1 if r == m else 0)) * coef
                    if val:
                        row[c] = val
                if row:
                    rows.append(row)
        coeffs = sparse_kernel(rows, nb)
        if not coeffs:
            return np.zeros((k, 0)), "exact"
        # express in the orthonormal frame coordinates
        b = np.array([[float(x) for x in v] for v in space.basis]).T
        vecs = b @ np.array([[float(x) for x in c] for c in coeffs]).T
        w = space.fischer_weights
        coords = space.frame.T @ (w[:, None] * vecs)
        q, _ = np.linalg.qr(coords)
        return q, "exact"
    stacked = np.concatenate([r - np.eye(k) for r in rhos], axis=0)
    _, sv, vt = np.linalg.svd(stacked)
    sv_full = np.zeros(k)
    sv_full[: len(sv)] = sv
    null = vt[sv_full < threshold].T
    return null, "svd"


def averaging_operator_norm(gens: Sequence[np.ndarray], space: HarmonicSpace, tol: float = POWER_TOL,
                            max_iters: int = POWER_MAX_ITERS, symmetric: bool = True,
                            seed: int = 0, threshold: float = SVD_THRESHOLD) -> GapEstimate:
    """Spectral norm of ``(1/|Q|) sum pi(s)`` on the complement of the invariant vectors."""
    gens = [np.asarray(g, dtype=float) for g in gens]
    if symmetric:
        gens, _ = symmetrize(gens)
    rhos = represent(np.stack(gens), space)
    inv, path = invariant_subspace(rhos, gens, space, threshold)
    k = rhos.shape[1]
    # orthonormal basis of the orthogonal complement
    if inv.shape[1]:
        q, _ = np.linalg.qr(np.concatenate([inv, np.eye(k)], axis=1))
        comp = q[:, inv.shape[1]:k]
    else:
        comp = np.eye(k)
    if comp.shape[1] == 0:
        return GapEstimate(space.degree, None, None, 0, tol, True, inv.shape[1], k, path)
    avg = rhos.mean(axis=0)
    dc = comp.T @ avg @ comp
    m = dc.T @ dc
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    lam = float(x @ m @ x)
    for it in range(1, max_iters + 1):
        y = m @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return GapEstimate(space.degree, 0.0, 1.0, it, tol, True, inv.shape[1], k, path)
        x = y / ny
        new = float(x @ m @ x)
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            est = float(np.sqrt(max(new, 0.0)))
            return GapEstimate(space.degree, est, 1.0 - est, it, tol, True, inv.shape[1], k, path)
        lam = new
    raise NotConverged(f"power iteration did not converge in {max_iters} iterations (degree {space.degree})")


def weyl_sums(ball: WordBall, space: HarmonicSpace, radius: int | None = None, batch: int = 2000) -> float:
    """Spectral norm of the average of ``pi(g)`` over the ball on a nontrivial harmonic space.

    For degree >= 1 the harmonic space has no SO(n)-invariant vectors, so the
    average tends to 0 as the ball equidistributes toward Haar measure.
    """
    elems = ball.upto(ball.radius if radius is None else radius)
    if space.degree == 0:
        return 0.0
    # pi is linear in the substitution matrix, so sum those first and project once
    total = np.zeros((len(space.monomials), len(space.monomials)))
    for start in range(0, len(elems), batch):
        chunk = np.transpose(elems[start:start + batch], (0, 2, 1))
        total += substitution_matrices(chunk, space.degree).sum(axis=0)
    w = space.fischer_weights
    avg = space.frame.T @ (w[:, None] * total) @ space.frame / len(elems)
    return float(np.linalg.norm(avg, 2))


def rotation2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def plane_rotation(n: int, i: int, j: int, theta: float) -> np.ndarray:
    g = np.eye(n)
    c, s = np.cos(theta), np.sin(theta)
    g[i, i], g[i, j], g[j, i], g[j, j] = c, -s, s, c
    return g
