"""Exact rational and integer linear algebra.

Everything in this package runs on arbitrary-precision rationals
(`fractions.Fraction`) and Python integers; there is no floating point
anywhere.  This module provides the shared substrate: dense matrices over Q,
deterministic row reduction, rational and integer kernels, primitive integer
vectors, and canonical subspace algebra.

Determinism conventions, fixed once for the whole package:

* row reduction always picks the leftmost nonzero pivot column and the
  topmost available row (no magnitude heuristics);
* kernel basis vectors are scaled to primitive integer vectors with the
  first nonzero entry positive, ordered by their free column;
* integer kernels are returned as the row Hermite normal form of the kernel
  lattice, which is a canonical basis;
* subspaces are stored in reduced row-echelon form, so subspace equality is
  representation equality.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

Vector = tuple[Fraction, ...]
IntVector = tuple[int, ...]


def _fraction_rows(entries) -> tuple[Vector, ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in entries)


class RationalMatrix:
    """Immutable dense matrix over Q, entries kept in lowest terms."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        ent = _fraction_rows(entries)
        if ent:
            width = len(ent[0])
            if any(len(r) != width for r in ent):
                raise ValueError("ragged matrix")
        else:
            width = 0
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "rows", len(ent))
        object.__setattr__(self, "cols", width)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMatrix is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, RationalMatrix)
            and self.entries == other.entries
            and self.cols == other.cols
        )

    def __hash__(self):
        return hash((self.cols, self.entries))

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in row) for row in self.entries)
        return f"RationalMatrix({self.rows}x{self.cols}: {body})"

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(list(zip(*self.entries)) if self.entries else [])

    def mul_vector(self, v) -> Vector:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.entries)

    @staticmethod
    def identity(n: int) -> "RationalMatrix":
        return RationalMatrix(
            [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
        )


def _rref_rows(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """In-place Gauss-Jordan; returns (rows, pivot column list)."""
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        pr = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                pr = i
                break
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = 1 / rows[r][c]
        if inv != 1:
            rows[r] = [x * inv for x in rows[r]]
        prow = rows[r]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], prow)]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def rref(m: RationalMatrix) -> tuple[RationalMatrix, int]:
    """Reduced row-echelon form and rank, with deterministic pivoting."""
    rows = [list(r) for r in m.entries]
    rows, pivots = _rref_rows(rows, m.cols)
    return RationalMatrix(rows), len(pivots)


def rank(m: RationalMatrix) -> int:
    return rref(m)[1]


def primitive(v) -> IntVector:
    """Scale a nonzero rational vector to a primitive integer vector.

    Direction is preserved; the result has gcd of entries equal to 1.
    """
    fr = [Fraction(x) for x in v]
    if all(x == 0 for x in fr):
        raise ValueError("zero vector has no primitive form")
    den = 1
    for x in fr:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return tuple(x // g for x in ints)


def _sign_normalize(v: IntVector) -> IntVector:
    for x in v:
        if x > 0:
            return v
        if x < 0:
            return tuple(-y for y in v)
    return v


def _int_echelon(rows: list[list[int]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form over Z (forward elimination only).

    Rows are combined by cross-multiplication and divided by their gcd to
    control coefficient growth.  Returns (echelon rows, pivot columns).
    """
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        pr = None
        for i in range(r, nrows):
            if rows[i][c]:
                pr = i
                break
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        prow = rows[r]
        a = prow[c]
        for i in range(r + 1, nrows):
            b = rows[i][c]
            if b:
                ri = rows[i]
                new = [a * x - b * y for x, y in zip(ri, prow)]
                g = 0
                for x in new:
                    if x:
                        g = gcd(g, x)
                        if g == 1:
                            break
                if g > 1:
                    new = [x // g for x in new]
                rows[i] = new
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows[:r], pivots


def nullspace_of_int_rows(rows: list[list[int]], ncols: int) -> list[IntVector]:
    """Kernel basis over Q of an integer matrix, primitive and sign-normalized.

    Fast path used by the sweep; semantics identical to `right_nullspace` on
    the same matrix.
    """
    ech, pivots = _int_echelon([r[:] for r in rows], ncols)
    pivset = set(pivots)
    basis: list[IntVector] = []
    for free in range(ncols):
        if free in pivset:
            continue
        x: list[Fraction] = [Fraction(0)] * ncols
        x[free] = Fraction(1)
        # back-substitute pivot variables bottom-up
        for j in range(len(pivots) - 1, -1, -1):
            p = pivots[j]
            row = ech[j]
            s = sum(row[c] * x[c] for c in range(p + 1, ncols) if x[c])
            x[p] = -s / row[p]
        basis.append(_sign_normalize(primitive(x)))
    return basis


def right_nullspace(m: RationalMatrix) -> list[IntVector]:
    """Basis of {x : m.x = 0}, one primitive integer vector per free column."""
    if m.cols == 0:
        return []
    if all(x.denominator == 1 for row in m.entries for x in row):
        return nullspace_of_int_rows([[int(x) for x in row] for row in m.entries], m.cols)
    rows = [list(r) for r in m.entries]
    rows, pivots = _rref_rows(rows, m.cols)
    pivset = set(pivots)
    basis: list[IntVector] = []
    for free in range(m.cols):
        if free in pivset:
            continue
        x = [Fraction(0)] * m.cols
        x[free] = Fraction(1)
        for j, p in enumerate(pivots):
            x[p] = -rows[j][free]
        basis.append(_sign_normalize(primitive(x)))
    return basis


def left_nullspace(m: RationalMatrix) -> list[IntVector]:
    """Basis of {c : c.m = 0}, normalized as in right_nullspace."""
    return right_nullspace(m.transpose())


def _row_hnf_transform(a: list[list[int]], ncols: int) -> tuple[list[list[int]], list[list[int]], list[int]]:
    """Row Hermite normal form with unimodular transform: U*A = H.

    Pivots are positive, entries above each pivot are reduced into
    [0, pivot).  Returns (H, U, pivot columns).
    """
    h = [r[:] for r in a]
    n = len(h)
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    r = 0
    pivots: list[int] = []
    for c in range(ncols):
        # Euclid on the entries of column c below row r
        while True:
            idx = [i for i in range(r, n) if h[i][c]]
            if not idx:
                break
            imin = min(idx, key=lambda i: (abs(h[i][c]), i))
            h[r], h[imin] = h[imin], h[r]
            u[r], u[imin] = u[imin], u[r]
            done = True
            for i in range(r + 1, n):
                if h[i][c]:
                    q = h[i][c] // h[r][c]
                    if q:
                        h[i] = [x - q * y for x, y in zip(h[i], h[r])]
                        u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if h[i][c]:
                        done = False
            if done:
                break
        if r < n and h[r][c]:
            if h[r][c] < 0:
                h[r] = [-x for x in h[r]]
                u[r] = [-x for x in u[r]]
            p = h[r][c]
            for i in range(r):
                q = h[i][c] // p
                if q:
                    h[i] = [x - q * y for x, y in zip(h[i], h[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
            pivots.append(c)
            r += 1
    return h, u, pivots


def hermite_normal_form(rows) -> list[IntVector]:
    """Canonical row Hermite normal form of the lattice spanned by the rows."""
    a = [[int(x) for x in row] for row in rows]
    if not a:
        return []
    h, _, pivots = _row_hnf_transform(a, len(a[0]))
    return [tuple(r) for r in h[: len(pivots)]]


def integer_kernel(rows) -> list[IntVector]:
    """Basis of the kernel lattice {x in Z^cols : m.x = 0}.

    Computed by Hermite reduction of the transposed system; the result is
    returned in canonical row Hermite form, so it is a full lattice basis
    (saturated, hence each member primitive) and deterministic.
    """
    a = [[int(x) for x in row] for row in rows]
    nrows = len(a)
    if nrows == 0:
        raise ValueError("integer_kernel needs at least one row to fix the column count")
    ncols = len(a[0])
    at = [[a[i][j] for i in range(nrows)] for j in range(ncols)]
    h, u, pivots = _row_hnf_transform(at, nrows)
    kernel_rows = [u[i] for i in range(len(pivots), ncols)]
    return hermite_normal_form(kernel_rows) if kernel_rows else []


def solve_linear(a_rows, b) -> Vector | None:
    """One exact solution of A.x = b (free variables set to 0), or None."""
    arows = _fraction_rows(a_rows)
    bvec = tuple(Fraction(x) for x in b)
    if len(arows) != len(bvec):
        raise ValueError("dimension mismatch")
    if not arows:
        return ()
    ncols = len(arows[0])
    aug = [list(r) + [bv] for r, bv in zip(arows, bvec)]
    aug, pivots = _rref_rows(aug, ncols)
    # inconsistent iff a pivot appears in the augmented column
    npiv = len(pivots)
    for i in range(npiv, len(aug)):
        if aug[i][ncols] != 0:
            return None
    x = [Fraction(0)] * ncols
    for j, p in enumerate(pivots):
        x[p] = aug[j][ncols]
    return tuple(x)


def integer_solve(a_rows, b) -> IntVector | None:
    """One integer solution of A.x = b, or None if no integral solution exists."""
    a = [[int(x) for x in row] for row in a_rows]
    bvec = [Fraction(x) for x in b]
    if any(x.denominator != 1 for x in bvec):
        return None
    bint = [int(x) for x in bvec]
    if not a:
        return ()
    nrows, ncols = len(a), len(a[0])
    at = [[a[i][j] for i in range(nrows)] for j in range(ncols)]
    h, u, pivots = _row_hnf_transform(at, nrows)
    # b must be an integer combination of the rows of H (= image lattice of A)
    y = [0] * len(pivots)
    residue = bint[:]
    for j, p in enumerate(pivots):
        if residue[p] % h[j][p] != 0:
            return None
        y[j] = residue[p] // h[j][p]
        if y[j]:
            residue = [x - y[j] * v for x, v in zip(residue, h[j])]
    if any(residue):
        return None
    x = [0] * ncols
    for j, yj in enumerate(y):
        if yj:
            x = [xi + yj * ui for xi, ui in zip(x, u[j])]
    return tuple(x)


class SubspaceBasis:
    """Subspace of Q^n stored as a reduced row-echelon basis.

    Canonical form makes equality of subspaces equal representation
    equality, which the rest of the package relies on.
    """

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis=()):
        rows = [list(r) for r in _fraction_rows(basis)]
        for r in rows:
            if len(r) != ambient_dim:
                raise ValueError("basis vector of wrong length")
        rows, pivots = _rref_rows(rows, ambient_dim)
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", tuple(tuple(r) for r in rows[: len(pivots)]))

    def __setattr__(self, name, value):
        raise AttributeError("SubspaceBasis is immutable")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other):
        return (
            isinstance(other, SubspaceBasis)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        rows = "; ".join("(" + ", ".join(str(x) for x in r) + ")" for r in self.basis)
        return f"SubspaceBasis(dim {self.dim} in Q^{self.ambient_dim}: {rows})"

    def contains(self, v) -> bool:
        vec = [Fraction(x) for x in v]
        if len(vec) != self.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        for row in self.basis:
            p = next(i for i, x in enumerate(row) if x == 1)
            if vec[p] != 0:
                f = vec[p]
                vec = [x - f * y for x, y in zip(vec, row)]
        return all(x == 0 for x in vec)

    def contains_subspace(self, other: "SubspaceBasis") -> bool:
        return all(self.contains(r) for r in other.basis)


def span(vectors, ambient_dim: int) -> SubspaceBasis:
    return SubspaceBasis(ambient_dim, vectors)


def subspace_sum(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return SubspaceBasis(a.ambient_dim, a.basis + b.basis)


def annihilator(a: SubspaceBasis) -> SubspaceBasis:
    """The subspace {u : u.v = 0 for all v in a} under the standard pairing."""
    if not a.basis:
        return SubspaceBasis(a.ambient_dim, RationalMatrix.identity(a.ambient_dim).entries)
    return SubspaceBasis(a.ambient_dim, right_nullspace(RationalMatrix(a.basis)))


def intersect(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return annihilator(subspace_sum(annihilator(a), annihilator(b)))
