"""Exact arithmetic over Q, Q(sqrt2) and Q(cbrt2), plus dense exact linear algebra.

Rationals are :class:`fractions.Fraction`.  ``QuadElement`` is ``a + b*sqrt(2)``,
``CubicElement`` is ``a + b*cbrt(2) + c*cbrt(4)``.  All values are immutable.

Matrices are :class:`ExactMatrix` instances holding entries of one field.
Rank and echelon forms use fraction-free (Bareiss) elimination.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence

import mpmath
import numpy as np

Rational = Fraction

# 80-bit effective precision is the floor; use a comfortable margin.
EMBED_DPS = 40


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, _RationalABC)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot coerce {x!r} to a rational")


# ---------------------------------------------------------------------------
# Q(sqrt 2)


@total_ordering
class QuadElement:
    """Element ``a + b*sqrt(2)`` of Q(sqrt 2)."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        object.__setattr__(self, "a", _q(a))
        object.__setattr__(self, "b", _q(b))

    def __setattr__(self, name, value):
        raise AttributeError("QuadElement is immutable")

    @classmethod
    def coerce(cls, x) -> QuadElement:
        if isinstance(x, QuadElement):
            return x
        if isinstance(x, (list, tuple)):
            a, b = x
            return cls(a, b)
        return cls(x, 0)

    def __repr__(self):
        return f"QuadElement({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        sign = "+" if self.b > 0 else "-"
        return f"{self.a}{sign}{abs(self.b)}*sqrt2"

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash(("Q(sqrt2)", self.a, self.b))

    def __eq__(self, other):
        try:
            o = QuadElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other):
        return (self - QuadElement.coerce(other)).sign() < 0

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __neg__(self):
        return QuadElement(-self.a, -self.b)

    def __pos__(self):
        return self

    def __add__(self, other):
        try:
            o = QuadElement.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadElement(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = QuadElement.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadElement(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return QuadElement.coerce(other) - self

    def __mul__(self, other):
        try:
            o = QuadElement.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadElement(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """Field norm ``a^2 - 2 b^2``."""
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> QuadElement:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(sqrt2)")
        return QuadElement(self.a / n, -self.b / n)

    def __truediv__(self, other):
        try:
            o = QuadElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return QuadElement.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = QuadElement(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> QuadElement:
        return QuadElement(self.a, -self.b)

    def is_integral(self) -> bool:
        """Membership in Z[sqrt2], the ring of integers of Q(sqrt2)."""
        return self.a.denominator == 1 and self.b.denominator == 1

    def height(self) -> int:
        """Max absolute numerator; meaningful for integral elements."""
        return max(abs(self.a), abs(self.b)).__ceil__()

    def sign(self) -> int:
        """Exact sign of the real number ``a + b*sqrt(2)``."""
        a, b = self.a, self.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with 2b^2
        return sa if a * a > 2 * b * b else sb

    def to_tuple(self) -> list[str]:
        return [str(self.a), str(self.b)]

    def __float__(self):
        return float(self.embed(1).real_part)

    def embed(self, embedding_id: int = 1) -> EmbeddingImage:
        if embedding_id not in (1, 2):
            raise ValueError(f"Q(sqrt2) has embeddings 1 and 2, got {embedding_id}")
        with mpmath.workdps(EMBED_DPS):
            s = mpmath.sqrt(2) if embedding_id == 1 else -mpmath.sqrt(2)
            val = _mpq(self.a) + _mpq(self.b) * s
            return EmbeddingImage(val, mpmath.mpf(0), embedding_id)


def galois_conjugate(x) -> QuadElement:
    """The nontrivial automorphism ``a + b sqrt2 -> a - b sqrt2``."""
    return QuadElement.coerce(x).conjugate()


# ---------------------------------------------------------------------------
# Q(cbrt 2)


class CubicElement:
    """Element ``a + b*t + c*t^2`` of Q(t) with ``t^3 = 2``."""

    __slots__ = ("a", "b", "c")

    def __init__(self, a=0, b=0, c=0):
        object.__setattr__(self, "a", _q(a))
        object.__setattr__(self, "b", _q(b))
        object.__setattr__(self, "c", _q(c))

    def __setattr__(self, name, value):
        raise AttributeError("CubicElement is immutable")

    @classmethod
    def coerce(cls, x) -> CubicElement:
        if isinstance(x, CubicElement):
            return x
        if isinstance(x, (list, tuple)):
            a, b, c = x
            return cls(a, b, c)
        return cls(x, 0, 0)

    def __repr__(self):
        return f"CubicElement({self.a}, {self.b}, {self.c})"

    def __hash__(self):
        if self.b == 0 and self.c == 0:
            return hash(self.a)
        return hash(("Q(cbrt2)", self.a, self.b, self.c))

    def __eq__(self, other):
        try:
            o = CubicElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b and self.c == o.c

    def __bool__(self):
        return bool(self.a) or bool(self.b) or bool(self.c)

    def __neg__(self):
        return CubicElement(-self.a, -self.b, -self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        try:
            o = CubicElement.coerce(other)
        except TypeError:
            return NotImplemented
        return CubicElement(self.a + o.a, self.b + o.b, self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = CubicElement.coerce(other)
        except TypeError:
            return NotImplemented
        return CubicElement(self.a - o.a, self.b - o.b, self.c - o.c)

    def __rsub__(self, other):
        return CubicElement.coerce(other) - self

    def __mul__(self, other):
        try:
            o = CubicElement.coerce(other)
        except TypeError:
            return NotImplemented
        a1, b1, c1 = self.a, self.b, self.c
        a2, b2, c2 = o.a, o.b, o.c
        # t^3 = 2, t^4 = 2t
        return CubicElement(
            a1 * a2 + 2 * (b1 * c2 + c1 * b2),
            a1 * b2 + b1 * a2 + 2 * c1 * c2,
            a1 * c2 + b1 * b2 + c1 * a2,
        )

    __rmul__ = __mul__

    def _mult_matrix(self) -> list[list[Fraction]]:
        # columns: images of 1, t, t^2 under multiplication by self
        a, b, c = self.a, self.b, self.c
        return [[a, 2 * c, 2 * b], [b, a, 2 * c], [c, b, a]]

    def norm(self) -> Fraction:
        a, b, c = self.a, self.b, self.c
        return a**3 + 2 * b**3 + 4 * c**3 - 6 * a * b * c

    def inverse(self) -> CubicElement:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(cbrt2)")
        a, b, c = self.a, self.b, self.c
        # first column of the adjugate of the multiplication matrix
        return CubicElement((a * a - 2 * b * c) / n, (2 * c * c - a * b) / n, (b * b - a * c) / n)

    def __truediv__(self, other):
        try:
            o = CubicElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return CubicElement.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = CubicElement(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_integral(self) -> bool:
        """Membership in Z[cbrt2]."""
        return all(x.denominator == 1 for x in (self.a, self.b, self.c))

    def height(self) -> int:
        return max(abs(self.a), abs(self.b), abs(self.c)).__ceil__()

    def sign(self) -> int:
        """Exact sign under the real embedding (precision raised until decisive)."""
        if not self:
            return 0
        dps = EMBED_DPS
        while True:
            with mpmath.workdps(dps):
                t = mpmath.cbrt(2)
                v = _mpq(self.a) + _mpq(self.b) * t + _mpq(self.c) * t * t
                bound = (abs(_mpq(self.a)) + 2 * abs(_mpq(self.b)) + 2 * abs(_mpq(self.c)) + 1) * mpmath.mpf(10) ** (8 - dps)
                if abs(v) > bound:
                    return 1 if v > 0 else -1
            dps *= 2

    def to_tuple(self) -> list[str]:
        return [str(self.a), str(self.b), str(self.c)]

    def embed(self, embedding_id: int = 1) -> EmbeddingImage:
        return cubic_embed(self, embedding_id)


def _mpq(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class EmbeddingImage:
    real_part: mpmath.mpf
    imag_part: mpmath.mpf
    embedding_id: int

    @property
    def value(self) -> complex:
        return complex(float(self.real_part), float(self.imag_part))

    def mpc(self):
        return mpmath.mpc(self.real_part, self.imag_part)


def cubic_embed(x, embedding_id: int) -> EmbeddingImage:
    """Image of ``x`` in C under embedding 1 (real), 2 (t -> t*e^{2 pi i/3}) or 3 (conjugate)."""
    if embedding_id not in (1, 2, 3):
        raise ValueError(f"Q(cbrt2) has embeddings 1, 2, 3, got {embedding_id}")
    x = CubicElement.coerce(x)
    with mpmath.workdps(EMBED_DPS):
        t = mpmath.cbrt(2)
        if embedding_id == 2:
            t = t * mpmath.expjpi(mpmath.mpf(2) / 3)
        elif embedding_id == 3:
            t = t * mpmath.expjpi(mpmath.mpf(-2) / 3)
        v = mpmath.mpc(_mpq(x.a)) + _mpq(x.b) * t + _mpq(x.c) * t * t
        return EmbeddingImage(+v.real, +v.imag, embedding_id)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class Field:
    """Coefficient field tag: ``"Q"``, ``"Q(sqrt2)"`` or ``"Q(cbrt2)"``."""

    name: str

    @property
    def degree(self) -> int:
        return {"Q": 1, "Q(sqrt2)": 2, "Q(cbrt2)": 3}[self.name]

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def coerce(self, x):
        if self.name == "Q":
            if isinstance(x, (QuadElement, CubicElement)):
                raise TypeError(f"{x!r} is not rational")
            return _q(x)
        if self.name == "Q(sqrt2)":
            return QuadElement.coerce(x)
        return CubicElement.coerce(x)

    def parse(self, token):
        """Parse the serialized form: ``"p/q"``, ``[a, b]`` or ``[a, b, c]``."""
        if isinstance(token, (list, tuple)):
            if len(token) != self.degree:
                raise ValueError(f"{self.name} expects {self.degree} coefficients, got {token!r}")
            coeffs = [_q(t) for t in token]
            if self.name == "Q":
                return coeffs[0]
            return self.coerce(coeffs)
        if isinstance(token, float):
            raise ValueError(f"floating coefficient {token!r} is not exact")
        return self.coerce(_q(token))

    def serialize(self, x):
        x = self.coerce(x)
        if self.name == "Q":
            return str(x)
        return x.to_tuple()

    def is_integral(self, x) -> bool:
        x = self.coerce(x)
        if self.name == "Q":
            return x.denominator == 1
        return x.is_integral()

    def embeddings(self) -> list[int]:
        return list(range(1, self.degree + 1))

    def is_real_embedding(self, eid: int) -> bool:
        return self.name != "Q(cbrt2)" or eid == 1

    def conjugate(self, x, eid: int):
        """Apply a field automorphism (only meaningful for Q and Q(sqrt2))."""
        x = self.coerce(x)
        if eid == 1 or self.name == "Q":
            return x
        if self.name == "Q(sqrt2)":
            return x.conjugate()
        raise ValueError("Q(cbrt2) has no nontrivial automorphism; use embed()")

    def embed(self, x, eid: int = 1):
        """High-precision mpmath image (mpf for real embeddings, mpc otherwise)."""
        x = self.coerce(x)
        if self.name == "Q":
            with mpmath.workdps(EMBED_DPS):
                return _mpq(x)
        img = x.embed(eid)
        return img.real_part if self.is_real_embedding(eid) else img.mpc()

    def sign(self, x, eid: int = 1) -> int:
        """Exact sign under a real embedding."""
        x = self.coerce(x)
        if self.name == "Q":
            return (x > 0) - (x < 0)
        if self.name == "Q(sqrt2)":
            return (x if eid == 1 else x.conjugate()).sign()
        if eid != 1:
            raise ValueError("embedding is not real")
        return x.sign()


QQ = Field("Q")
QSQRT2 = Field("Q(sqrt2)")
QCBRT2 = Field("Q(cbrt2)")
FIELDS = {f.name: f for f in (QQ, QSQRT2, QCBRT2)}


def field_of(x) -> Field:
    if isinstance(x, QuadElement):
        return QSQRT2
    if isinstance(x, CubicElement):
        return QCBRT2
    return QQ


def get_field(name: str) -> Field:
    try:
        return FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; expected one of {sorted(FIELDS)}") from None


# ---------------------------------------------------------------------------
# matrices


class ExactMatrix:
    """Immutable dense matrix over a single exact field."""

    __slots__ = ("field", "_rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Sequence], field: Field | None = None, ncols: int | None = None):
        rows = [list(r) for r in rows]
        if field is None:
            field = QQ
            for r in rows:
                for x in r:
                    f = field_of(x)
                    if f.degree > field.degree:
                        field = f
        self.field = field
        self._rows = tuple(tuple(field.coerce(x) for x in r) for r in rows)
        self.nrows = len(rows)
        if self.nrows:
            self.ncols = len(self._rows[0])
            if any(len(r) != self.ncols for r in self._rows):
                raise ValueError("ragged rows")
        else:
            self.ncols = ncols or 0

    @classmethod
    def identity(cls, n: int, field: Field = QQ) -> ExactMatrix:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], field)

    @classmethod
    def zeros(cls, m: int, n: int, field: Field = QQ) -> ExactMatrix:
        return cls([[0] * n for _ in range(m)], field, ncols=n)

    @classmethod
    def diag(cls, entries: Sequence, field: Field | None = None) -> ExactMatrix:
        n = len(entries)
        if field is None:
            field = ExactMatrix([list(entries)]).field if n else QQ
        zero = field.zero()
        return cls([[entries[i] if i == j else zero for j in range(n)] for i in range(n)], field)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], field: Field = QQ, nrows: int | None = None) -> ExactMatrix:
        if not cols:
            return cls([[] for _ in range(nrows or 0)], field)
        return cls([list(r) for r in zip(*cols)], field)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def rows(self) -> tuple[tuple, ...]:
        return self._rows

    def __getitem__(self, idx):
        i, j = idx
        return self._rows[i][j]

    def column(self, j: int) -> list:
        return [r[j] for r in self._rows]

    def columns(self) -> list[list]:
        return [self.column(j) for j in range(self.ncols)]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._rows]

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        return f"ExactMatrix({self.field.name}, {self.nrows}x{self.ncols})"

    def _unify(self, other: ExactMatrix) -> Field:
        return self.field if self.field.degree >= other.field.degree else other.field

    @property
    def T(self) -> ExactMatrix:
        return ExactMatrix(list(zip(*self._rows)) if self.nrows else [], self.field, ncols=self.nrows)

    def __add__(self, other: ExactMatrix) -> ExactMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        f = self._unify(other)
        return ExactMatrix([[x + y for x, y in zip(r, s)] for r, s in zip(self._rows, other._rows)], f, self.ncols)

    def __sub__(self, other: ExactMatrix) -> ExactMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        f = self._unify(other)
        return ExactMatrix([[x - y for x, y in zip(r, s)] for r, s in zip(self._rows, other._rows)], f, self.ncols)

    def __neg__(self):
        return ExactMatrix([[-x for x in r] for r in self._rows], self.field, self.ncols)

    def scale(self, c) -> ExactMatrix:
        f = self.field
        if field_of(c).degree > f.degree:
            f = field_of(c)
        c = f.coerce(c)
        return ExactMatrix([[c * x for x in r] for r in self._rows], f, self.ncols)

    def __matmul__(self, other: ExactMatrix) -> ExactMatrix:
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        f = self._unify(other)
        zero = f.zero()
        cols = other.columns()
        out = []
        for r in self._rows:
            row = []
            for c in cols:
                s = zero
                for x, y in zip(r, c):
                    if x and y:
                        s = s + x * y
                row.append(s)
            out.append(row)
        return ExactMatrix(out, f, other.ncols)

    def apply(self, vec: Sequence) -> list:
        zero = self.field.zero()
        out = []
        for r in self._rows:
            s = zero
            for x, y in zip(r, vec):
                if x and y:
                    s = s + x * y
            out.append(s)
        return out

    def is_zero(self) -> bool:
        return not any(x for r in self._rows for x in r)

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and all(
            self._rows[i][j] == self._rows[j][i] for i in range(self.nrows) for j in range(i)
        )

    def map(self, fn, field: Field | None = None) -> ExactMatrix:
        return ExactMatrix([[fn(x) for x in r] for r in self._rows], field or self.field, self.ncols)

    def trace(self):
        s = self.field.zero()
        for i in range(min(self.nrows, self.ncols)):
            s = s + self._rows[i][i]
        return s

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> ExactMatrix:
        return ExactMatrix([[self._rows[i][j] for j in cols] for i in rows], self.field, len(cols))

    def to_float(self, embedding_id: int = 1) -> np.ndarray:
        """Float image under a real embedding (evaluated at high precision, then rounded)."""
        if not self.field.is_real_embedding(embedding_id):
            raise ValueError("complex embedding; use to_complex")
        return np.array(
            [[float(self.field.embed(x, embedding_id)) for x in r] for r in self._rows], dtype=float
        ).reshape(self.nrows, self.ncols)

    def to_complex(self, embedding_id: int) -> np.ndarray:
        return np.array(
            [[complex(self.field.embed(x, embedding_id)) for x in r] for r in self._rows], dtype=complex
        ).reshape(self.nrows, self.ncols)

    def det(self):
        return determinant(self)

    def rank(self) -> int:
        return exact_rank(self)

    def kernel(self) -> list[list]:
        return exact_kernel(self)

    def inverse(self) -> ExactMatrix:
        n = self.nrows
        if n != self.ncols:
            raise ValueError("inverse of non-square matrix")
        cols = [exact_solve(self, [1 if i == j else 0 for i in range(n)]) for j in range(n)]
        if any(c is None for c in cols):
            raise ZeroDivisionError("singular matrix")
        return ExactMatrix.from_columns(cols, self.field)

    def serialize(self) -> list[list]:
        return [[self.field.serialize(x) for x in r] for r in self._rows]


def as_matrix(m, field: Field | None = None) -> ExactMatrix:
    if isinstance(m, ExactMatrix):
        if field is not None and field != m.field:
            return ExactMatrix(m.rows, field, m.ncols)
        return m
    return ExactMatrix(m, field)


# ---------------------------------------------------------------------------
# elimination


def _exact_div(x, y):
    # Bareiss divisions are exact in the ring generated by the entries
    if isinstance(x, int) and isinstance(y, int):
        q, r = divmod(x, y)
        assert r == 0, "inexact Bareiss division"
        return q
    return x / y


def _integerize(m: ExactMatrix) -> list[list]:
    """Rows of ``m`` scaled by positive integers; for Q the result is all ints."""
    rows = []
    for r in m.rows:
        if m.field is QQ:
            den = 1
            for x in r:
                den = den * x.denominator // _gcd(den, x.denominator)
            rows.append([int(x * den) for x in r])
        else:
            rows.append(list(r))
    return rows


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def bareiss_echelon(m: ExactMatrix) -> tuple[list[list], list[int], int]:
    """Fraction-free row echelon form.

    Returns ``(rows, pivot_columns, sign)`` where ``rows`` is the echelon form
    (rows scaled so that entries stay in the ring generated by the input) and
    ``sign`` is the parity of the row swaps performed.
    """
    a = _integerize(m)
    nr, nc = m.nrows, m.ncols
    zero = 0 if m.field is QQ else m.field.zero()
    prev = 1 if m.field is QQ else m.field.one()
    pivots: list[int] = []
    sign = 1
    r = 0
    for c in range(nc):
        if r >= nr:
            break
        piv = None
        for i in range(r, nr):
            if a[i][c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
            sign = -sign
        p = a[r][c]
        prow = a[r]
        for i in range(r + 1, nr):
            row = a[i]
            f = row[c]
            if f:
                for j in range(c + 1, nc):
                    row[j] = _exact_div(p * row[j] - f * prow[j], prev)
            else:
                for j in range(c + 1, nc):
                    if row[j]:
                        row[j] = _exact_div(p * row[j], prev)
            row[c] = zero
        # columns skipped before c are already zero in rows below
        prev = p
        pivots.append(c)
        r += 1
    return a, pivots, sign


def exact_rank(m: ExactMatrix) -> int:
    if m.nrows == 0 or m.ncols == 0:
        return 0
    if m.nrows > m.ncols:
        m = m.T
    _, pivots, _ = bareiss_echelon(m)
    return len(pivots)


def determinant(m: ExactMatrix):
    n = m.nrows
    if n != m.ncols:
        raise ValueError("determinant of non-square matrix")
    if n == 0:
        return m.field.one()
    rows, pivots, sign = bareiss_echelon(m)
    if len(pivots) < n:
        return m.field.zero()
    d = rows[n - 1][n - 1]
    if m.field is QQ:
        scale = Fraction(1)
        for r in m.rows:
            den = 1
            for x in r:
                den = den * x.denominator // _gcd(den, x.denominator)
            scale *= den
        return Fraction(sign * d) / scale
    return d if sign > 0 else -d


def _back_substitute(rows: list[list], pivots: list[int], ncols: int, field: Field, free_col: int | None, rhs=None):
    """Solve the echelon system; either a kernel vector for ``free_col`` or ``rows x = rhs``."""
    to_f = field.coerce
    x = [field.zero()] * ncols
    if free_col is not None:
        x[free_col] = field.one()
    for k in range(len(pivots) - 1, -1, -1):
        c = pivots[k]
        row = rows[k]
        s = to_f(rhs[k]) if rhs is not None else field.zero()
        for j in range(c + 1, ncols):
            if row[j] and x[j]:
                s = s - to_f(row[j]) * x[j]
        x[c] = s / to_f(row[c])
    return x


def exact_kernel(m: ExactMatrix) -> list[list]:
    """Basis of the right null space; one vector per non-pivot column."""
    if m.nrows == 0:
        return [[m.field.one() if i == j else m.field.zero() for i in range(m.ncols)] for j in range(m.ncols)]
    rows, pivots, _ = bareiss_echelon(m)
    pivset = set(pivots)
    return [
        _back_substitute(rows, pivots, m.ncols, m.field, f)
        for f in range(m.ncols)
        if f not in pivset
    ]


def exact_solve(m: ExactMatrix, b: Sequence):
    """One solution of ``m x = b`` or ``None`` when inconsistent."""
    f = m.field
    aug = ExactMatrix([list(r) + [bi] for r, bi in zip(m.rows, b)], f)
    rows, pivots, _ = bareiss_echelon(aug)
    if pivots and pivots[-1] == m.ncols:
        return None
    rhs = [r[m.ncols] for r in rows[: len(pivots)]]
    return _back_substitute(rows, pivots, m.ncols, f, None, rhs)


def column_space_basis(vectors: Sequence[Sequence], field: Field = QQ) -> list[list]:
    """Linearly independent subset spanning the same space (pivot columns)."""
    vectors = [list(v) for v in vectors]
    if not vectors:
        return []
    m = ExactMatrix.from_columns(vectors, field)
    _, pivots, _ = bareiss_echelon(m)
    return [vectors[j] for j in pivots]


def rref(m: ExactMatrix) -> tuple[ExactMatrix, list[int]]:
    """Reduced row echelon form over the field (nonzero rows only)."""
    rows, pivots, _ = bareiss_echelon(m)
    f = m.field
    rows = [[f.coerce(x) for x in r] for r in rows[: len(pivots)]]
    for k in range(len(pivots) - 1, -1, -1):
        c = pivots[k]
        inv = f.one() / rows[k][c]
        rows[k] = [x * inv for x in rows[k]]
        for i in range(k):
            fac = rows[i][c]
            if fac:
                rows[i] = [x - fac * y for x, y in zip(rows[i], rows[k])]
    return ExactMatrix(rows, f, m.ncols), pivots


# ---------------------------------------------------------------------------
# sparse elimination (large, sparse systems such as coboundary operators)


class SparseEchelon:
    """Incrementally maintained reduced echelon basis of a row space.

    Rows are ``{column: value}`` dicts over any exact field.  Each stored row
    has a pivot entry 1 and no other pivot columns.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivots: dict[int, dict] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: dict) -> dict:
        row = {c: v for c, v in row.items() if v}
        for c in [c for c in row if c in self.pivots]:
            f = row.get(c)
            if not f:
                continue
            for cc, vv in self.pivots[c].items():
                nv = row.get(cc, 0) - f * vv
                if nv:
                    row[cc] = nv
                else:
                    row.pop(cc, None)
        return row

    def add(self, row: dict) -> bool:
        """Insert a row; returns False when it was already in the span."""
        row = self.reduce(row)
        if not row:
            return False
        # sparsest-fill heuristic: lowest column index is deterministic and cheap
        p = min(row)
        inv = 1 / row[p] if not isinstance(row[p], int) else Fraction(1, row[p])
        row = {c: v * inv for c, v in row.items()}
        for prow in self.pivots.values():
            f = prow.get(p)
            if f:
                for cc, vv in row.items():
                    nv = prow.get(cc, 0) - f * vv
                    if nv:
                        prow[cc] = nv
                    else:
                        prow.pop(cc, None)
        self.pivots[p] = row
        return True

    def kernel(self, one=Fraction(1)) -> list[dict]:
        """Null space of the stored rows, as sparse vectors."""
        basis = []
        for f in range(self.ncols):
            if f in self.pivots:
                continue
            vec = {f: one}
            for p, row in self.pivots.items():
                v = row.get(f)
                if v:
                    vec[p] = -v
            basis.append(vec)
        return basis


def sparse_rows(m: ExactMatrix) -> list[dict]:
    return [{j: x for j, x in enumerate(r) if x} for r in m.rows]


def sparse_rank(rows: Iterable[dict], ncols: int) -> int:
    ech = SparseEchelon(ncols)
    for r in rows:
        ech.add(r)
    return ech.rank


def sparse_kernel(rows: Iterable[dict], ncols: int, field: Field = QQ) -> list[list]:
    ech = SparseEchelon(ncols)
    for r in rows:
        ech.add(r)
    zero = field.zero()
    out = []
    for vec in ech.kernel(field.one()):
        dense = [zero] * ncols
        for c, v in vec.items():
            dense[c] = field.coerce(v)
        out.append(dense)
    return out
