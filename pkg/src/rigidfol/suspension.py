"""Suspension foliations: finite orbit models, Maurer-Cartan checks, obstruction reports."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import liealg
from .groupcoh import Presentation
from .liealg import LieAlgebra, Subspace

DEFAULT_H = (1e-2, 5e-3, 2.5e-3)
CHART_RADIUS = 0.5
ORTHO_TOL = 1e-8
COND_LIMIT = 1e12
SERIES_TERMS = 40


class InvalidAction(ValueError):
    pass


class SingularSample(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# finite models


@dataclass
class FiniteAction:
    """Permutation action of a finitely generated group on ``{0, ..., m-1}``."""

    generators: tuple
    images: list
    relators: tuple = ()

    def __post_init__(self):
        self.generators = tuple(self.generators)
        self.images = [list(map(int, p)) for p in self.images]
        if len(self.images) != len(self.generators):
            raise InvalidAction(f"{len(self.images)} permutations for {len(self.generators)} generators")
        sizes = {len(p) for p in self.images}
        if len(sizes) > 1:
            raise InvalidAction(f"permutations act on sets of different sizes {sorted(sizes)}")
        m = self.size
        for name, p in zip(self.generators, self.images):
            if sorted(p) != list(range(m)):
                raise InvalidAction(f"image of {name!r} is not a bijection of {{0..{m - 1}}}")
        if self.relators:
            pres = Presentation(self.generators, self.relators)
            self.relators = pres.relators
            for r in pres.relators:
                if self.evaluate(r) != list(range(m)):
                    raise InvalidAction(f"relator {pres.spell(r)} does not act trivially")

    @property
    def size(self) -> int:
        return len(self.images[0]) if self.images else 0

    def _inverse(self, p: list) -> list:
        inv = [0] * len(p)
        for i, j in enumerate(p):
            inv[j] = i
        return inv

    def evaluate(self, word) -> list:
        """Permutation of a word, acting on the left (rightmost letter first)."""
        out = list(range(self.size))
        for g, e in reversed(word):
            p = self.images[g] if e == 1 else self._inverse(self.images[g])
            out = [p[x] for x in out]
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> FiniteAction:
        for key in ("generators", "images"):
            if key not in doc:
                raise InvalidAction(f"missing field {key!r}")
        return cls(tuple(doc["generators"]), doc["images"], tuple(tuple(r) for r in doc.get("relators", [])))

    @classmethod
    def load(cls, path) -> FiniteAction:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"generators": list(self.generators), "images": self.images}


@dataclass
class OrbitReport:
    orbits: list
    stabilizer_index: list
    compact_leaf: list

    @property
    def sizes(self) -> list[int]:
        return [len(o) for o in self.orbits]

    def to_dict(self) -> dict:
        return {"orbits": self.orbits, "stabilizer_index": self.stabilizer_index, "compact_leaf": self.compact_leaf}


def orbits(action: FiniteAction) -> OrbitReport:
    """Orbits of the action by union-find; each orbit is one leaf of the suspension."""
    m = action.size
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in action.images:
        for i, j in enumerate(p):
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    orbs = sorted(groups.values())
    # orbit-stabilizer: [Gamma : Stab(t)] = |Orb(t)|
    return OrbitReport(orbs, [len(o) for o in orbs], [True] * len(orbs))


# ---------------------------------------------------------------------------
# Maurer-Cartan residuals


def so_basis(n: int) -> list[np.ndarray]:
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            e = np.zeros((n, n))
            e[b, a], e[a, b] = 1.0, -1.0
            out.append(e)
    return out


def _dexp_left(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Left-trivialized derivative of exp: ``exp(X)^-1 d/dt exp(X + tY)`` at t=0.

    Series ``sum_k (-1)^k ad_X^k(Y) / (k+1)!``; exact when X and Y commute.
    """
    term = y
    out = y.copy()
    for k in range(1, SERIES_TERMS):
        term = (x @ term - term @ x) * (-1.0 / (k + 1))
        if not term.any():
            break
        out = out + term
    return out


def _expm(x: np.ndarray) -> np.ndarray:
    from scipy.linalg import expm

    return expm(x)


@dataclass
class MCChart:
    """Exponential chart ``(b, x) -> (b, exp(sum x_i E_i))`` on ``R^base_dim x SO(n)``.

    ``form`` optionally replaces the connection form: a callable taking the
    chart coordinates (base then group) and returning one Lie algebra matrix
    per coordinate.
    """

    n: int
    base_dim: int = 0
    hs: tuple = DEFAULT_H
    samples: int = 8
    radius: float = CHART_RADIUS
    seed: int = 0
    form: Callable | None = None
    basis: list = field(default=None)

    def __post_init__(self):
        hs = tuple(float(h) for h in self.hs)
        if len(hs) < 3 or any(b >= a for a, b in zip(hs, hs[1:])) or hs[-1] <= 0:
            raise ValueError("step sizes must be positive, strictly decreasing, at least three")
        if not 0 < self.radius <= CHART_RADIUS:
            raise ValueError(f"chart radius must lie in (0, {CHART_RADIUS}]")
        self.hs = hs
        if self.basis is None:
            self.basis = so_basis(self.n)
        rng = np.random.default_rng(self.seed)
        pts = rng.normal(size=(self.samples, self.group_dim))
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        # margin so that every stencil point stays inside the chart
        scale = (self.radius - 2 * hs[0]) * rng.uniform(size=(self.samples, 1)) ** (1 / max(self.group_dim, 1))
        self.grid = pts / norms * scale
        self.base_grid = rng.normal(size=(self.samples, self.base_dim))

    @property
    def group_dim(self) -> int:
        return len(self.basis)

    @property
    def coord_dim(self) -> int:
        return self.base_dim + self.group_dim

    def algebra_element(self, x: Sequence[float]) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for c, e in zip(x, self.basis):
            out = out + c * e
        return out

    def point(self, x: Sequence[float]) -> np.ndarray:
        g = _expm(self.algebra_element(x))
        if np.linalg.cond(g) > COND_LIMIT:
            raise SingularSample(f"chart point {list(x)} gives a singular matrix")
        res = float(np.max(np.abs(g.T @ g - np.eye(self.n))))
        if res > ORTHO_TOL:
            raise SingularSample(f"chart point has orthogonality residual {res:.1e}")
        return g

    def omega(self, coords: np.ndarray) -> list[np.ndarray]:
        """Components of the connection form on the coordinate vector fields."""
        if self.form is not None:
            return [np.asarray(w, dtype=float) for w in self.form(coords)]
        x = self.algebra_element(coords[self.base_dim:])
        zero = np.zeros((self.n, self.n))
        return [zero] * self.base_dim + [_dexp_left(x, e) for e in self.basis]


@dataclass
class MCResidualReport:
    hs: list
    residuals: list
    orders: list
    order: float | None
    exact_zero: bool

    def to_dict(self) -> dict:
        return {"h": self.hs, "residual": self.residuals, "orders": self.orders,
                "order": self.order, "exact_zero": self.exact_zero}


def _residual_at(chart: MCChart, coords: np.ndarray, h: float) -> float:
    d = chart.coord_dim
    shifted = {}
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        shifted[i] = (chart.omega(coords + e), chart.omega(coords - e))
    w0 = chart.omega(coords)
    worst = 0.0
    for i in range(d):
        for j in range(i + 1, d):
            di_wj = (shifted[i][0][j] - shifted[i][1][j]) / (2 * h)
            dj_wi = (shifted[j][0][i] - shifted[j][1][i]) / (2 * h)
            # d omega(X, Y) + 1/2 [omega, omega](X, Y), with [omega, omega](X, Y) = 2 [omega X, omega Y]
            r = di_wj - dj_wi + (w0[i] @ w0[j] - w0[j] @ w0[i])
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


def mc_residual(chart: MCChart) -> MCResidualReport:
    """Max-norm residual of ``d omega + 1/2 [omega, omega]`` over the chart grid, per step size."""
    pts = [np.concatenate([b, x]) for b, x in zip(chart.base_grid, chart.grid)]
    for p in pts:
        if chart.form is None:
            chart.point(p[chart.base_dim:])
    residuals = [max(_residual_at(chart, p, h) for p in pts) for h in chart.hs]
    exact = all(r == 0.0 for r in residuals)
    orders = []
    for (h0, r0), (h1, r1) in zip(zip(chart.hs, residuals), zip(chart.hs[1:], residuals[1:])):
        if r0 > 0 and r1 > 0:
            orders.append(math.log(r0 / r1) / math.log(h0 / h1))
    order = float(np.mean(orders)) if orders and not exact else None
    return MCResidualReport(list(chart.hs), residuals, orders, order, exact)


def _tangent_samples(rng: np.random.Generator, g: np.ndarray, count: int) -> list[np.ndarray]:
    out = []
    for _ in range(count):
        a = rng.normal(size=g.shape)
        out.append(g @ ((a - a.T) / 2))
    return out


def invariance_residual(chart: MCChart, gamma_image, tangents: int = 4, seed: int | None = None) -> float:
    """Max deviation between the form at ``(b, g)`` and its pullback by left translation by gamma."""
    gamma = np.asarray(gamma_image, dtype=float)
    if np.linalg.cond(gamma) > COND_LIMIT:
        raise SingularSample("translation matrix is singular")
    rng = np.random.default_rng(chart.seed + 1 if seed is None else seed)
    worst = 0.0
    for x in chart.grid:
        g = chart.point(x)
        tg = gamma @ g
        if np.linalg.cond(tg) > COND_LIMIT:
            raise SingularSample("translated sample is singular")
        for w in _tangent_samples(rng, g, tangents):
            lhs = np.linalg.solve(g, w)
            rhs = np.linalg.solve(tg, gamma @ w)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# ---------------------------------------------------------------------------
# algebra-level obstructions


@dataclass
class ObstructionReport:
    name: str
    dim: int
    is_perfect: bool
    h1_dim: int
    is_semisimple: bool
    is_compact_type: bool
    ideal_dims: list | None
    so3_factor: bool | None
    thm_d_applicable: bool
    ideal: dict | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "dim": self.dim, "is_perfect": self.is_perfect, "h1_dim": self.h1_dim,
            "is_semisimple": self.is_semisimple, "is_compact_type": self.is_compact_type,
            "ideal_dims": self.ideal_dims, "so3_factor": self.so3_factor,
            "thm_d_hypothesis": self.thm_d_applicable, "ideal": self.ideal, "notes": self.notes,
        }

    def summary(self) -> str:
        lines = [f"algebra {self.name or '?'} (dim {self.dim})",
                 f"perfect: {self.is_perfect} (dim H1 = {self.h1_dim})",
                 f"semisimple: {self.is_semisimple}", f"compact type: {self.is_compact_type}"]
        if self.ideal_dims is not None:
            lines.append(f"simple ideals: {self.ideal_dims}")
        if self.so3_factor:
            lines.append("so(3) factor detected")
        lines.append("Thm D hypothesis: " + ("satisfied" if self.thm_d_applicable else "not satisfied"))
        if self.ideal is not None:
            lines.append(f"ideal of dim {self.ideal['dim']}: dim H1 = {self.ideal['h1_dim']}, "
                         f"reduction preserves infinitesimal rigidity: {self.ideal['reduction_preserves_rigidity']}")
        lines.extend(self.notes)
        return "\n".join(lines)


def rigidity_pipeline(g: LieAlgebra, ideal: Subspace | None = None,
                      budget: int = liealg.CE_BUDGET) -> ObstructionReport:
    h1 = g.ce_cohomology(1, budget).dimension
    perfect = g.is_perfect()
    semisimple = g.is_semisimple()
    compact = g.is_compact_type()
    notes = []
    if not perfect:
        notes.append("not perfect: a Lie foliation with this structure algebra cannot be infinitesimally rigid")
    if compact and not semisimple:
        notes.append("compact type without semisimplicity is impossible; check the input")
    dims = so3 = None
    if semisimple:
        dec = g.simple_decomposition()
        dims = dec.dims
        so3 = any(lab.is_so3 for lab in dec.labels)
    applicable = bool(perfect and semisimple and compact and so3 is False)
    ideal_doc = None
    if ideal is not None:
        if not g.is_ideal(ideal):
            raise liealg.NotAnIdeal("given subspace is not an ideal")
        sub = g.subalgebra(ideal)
        quo, _ = g.quotient_by_ideal(ideal)
        h1_ideal = sub.ce_cohomology(1).dimension if sub.dim else 0
        ideal_doc = {
            "dim": ideal.dim, "h1_dim": h1_ideal, "quotient_dim": quo.dim,
            "quotient_h1_dim": quo.ce_cohomology(1).dimension if quo.dim else 0,
            "reduction_preserves_rigidity": h1_ideal == 0,
        }
    return ObstructionReport(g.name, g.dim, perfect, h1, semisimple, compact, dims, so3, applicable, ideal_doc, notes)
