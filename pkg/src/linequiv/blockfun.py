"""Block operator matrix functions with polynomial, product and Schur entries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import MatrixPolynomial, cmatrix, poly_eval, rcond
from .errors import DimensionMismatch, EvaluationAtExcludedPoint

SCHUR_RCOND = 1e-12


@dataclass(frozen=True)
class SpaceLayout:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise DimensionMismatch("negative space dimension")
        object.__setattr__(self, "dims", dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)]))

    @property
    def total(self) -> int:
        return sum(self.dims)

    def __len__(self):
        return len(self.dims)

    def span(self, i: int) -> range:
        o = self.offsets
        return range(o[i], o[i + 1])


@dataclass(frozen=True)
class ExcludedSet:
    points: tuple[complex, ...] = ()
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(complex(p) for p in self.points))

    def union(self, other: "ExcludedSet") -> "ExcludedSet":
        pts = self.points + tuple(p for p in other.points if p not in self.points)
        parts = [d for d in self.description.split(" u ") + other.description.split(" u ") if d]
        desc = " u ".join(dict.fromkeys(parts))
        return ExcludedSet(pts, desc)

    def near(self, lam, radius: float) -> bool:
        return any(abs(lam - p) <= radius for p in self.points)

    def __len__(self):
        return len(self.points)


EMPTY = ExcludedSet((), "")
ZERO_POINT = ExcludedSet((0j,), "{0}")


class Entry:
    kind: str
    shape: tuple[int, int]

    def eval(self, lam) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class PolyEntry(Entry):
    P: MatrixPolynomial
    kind = "polynomial"

    @property
    def shape(self):
        return self.P.shape

    def eval(self, lam):
        return poly_eval(self.P, lam)

    @property
    def is_zero(self):
        return self.P.is_zero


@dataclass(frozen=True, eq=False)
class ProductEntry(Entry):
    """M_1(lam) M_2(lam) ... M_n(lam)."""

    factors: tuple[MatrixPolynomial, ...]
    kind = "product"

    def __post_init__(self):
        fs = tuple(self.factors)
        if not fs:
            raise DimensionMismatch("product needs at least one factor")
        for a, b in zip(fs, fs[1:]):
            if a.cols != b.rows:
                raise DimensionMismatch(f"factor chain breaks: {a.shape} then {b.shape}")
        object.__setattr__(self, "factors", fs)

    @property
    def shape(self):
        return (self.factors[0].rows, self.factors[-1].cols)

    def eval(self, lam):
        out = poly_eval(self.factors[-1], lam)
        for f in reversed(self.factors[:-1]):
            out = poly_eval(f, lam) @ out
        return out

    def expand(self) -> MatrixPolynomial:
        out = self.factors[0]
        for f in self.factors[1:]:
            out = out @ f
        return out


@dataclass(frozen=True, eq=False)
class SchurEntry(Entry):
    """A(lam) - B(lam) D(lam)^{-1} C(lam)."""

    A: MatrixPolynomial
    B: MatrixPolynomial
    C: MatrixPolynomial
    D: MatrixPolynomial
    kind = "schur"

    def __post_init__(self):
        A, B, C, D = self.A, self.B, self.C, self.D
        if D.rows != D.cols:
            raise DimensionMismatch("D must be square")
        if B.shape != (A.rows, D.rows) or C.shape != (D.cols, A.cols):
            raise DimensionMismatch(
                f"Schur blocks do not chain: A{A.shape} B{B.shape} C{C.shape} D{D.shape}")

    @property
    def shape(self):
        return self.A.shape

    def eval(self, lam):
        d = poly_eval(self.D, lam)
        rc = rcond(d)
        if rc < SCHUR_RCOND:
            raise EvaluationAtExcludedPoint(f"D(lam) is singular at lam={lam} (rcond {rc:.2e})")
        return poly_eval(self.A, lam) - poly_eval(self.B, lam) @ np.linalg.solve(d, poly_eval(self.C, lam))


@dataclass(frozen=True, eq=False)
class FunctionEntry(Entry):
    """Entry given by an expression node; only produced internally."""

    node: object
    kind = "function"

    @property
    def shape(self):
        return tuple(self.node.shape)

    def eval(self, lam):
        return self.node(lam)


def as_entry(x, shape=None) -> Entry:
    if isinstance(x, Entry):
        return x
    if isinstance(x, MatrixPolynomial):
        return PolyEntry(x)
    if x is None or (np.isscalar(x) and x == 0):
        return PolyEntry(MatrixPolynomial.zeros(*shape))
    return PolyEntry(MatrixPolynomial.const(x))


def zero_entry(rows: int, cols: int) -> PolyEntry:
    return PolyEntry(MatrixPolynomial.zeros(rows, cols))


class BlockOperatorFunction:
    """Grid of entries acting between direct sums of spaces.

    Grids need not be square; rectangular pieces are used as the X, Y, Z
    corner blocks of embeddings.
    """

    def __init__(self, entries: Sequence[Sequence], row_dims: Sequence[int] | None = None,
                 col_dims: Sequence[int] | None = None):
        nr = len(entries)
        nc = len(entries[0]) if nr else 0
        rd = list(row_dims) if row_dims is not None else [None] * nr
        cd = list(col_dims) if col_dims is not None else [None] * nc
        for i in range(nr):
            if len(entries[i]) != nc:
                raise DimensionMismatch("ragged entry grid")
            for j in range(nc):
                e = entries[i][j]
                if e is None or (np.isscalar(e) and e == 0):
                    continue
                shp = as_entry(e).shape
                if rd[i] is None:
                    rd[i] = shp[0]
                if cd[j] is None:
                    cd[j] = shp[1]
        if any(d is None for d in rd) or any(d is None for d in cd):
            raise DimensionMismatch("dims of an all-zero row or column must be given")
        grid = []
        for i in range(nr):
            row = []
            for j in range(nc):
                e = as_entry(entries[i][j], (rd[i], cd[j]))
                if e.shape != (rd[i], cd[j]):
                    raise DimensionMismatch(f"entry ({i},{j}) is {e.shape}, slot is {(rd[i], cd[j])}")
                row.append(e)
            grid.append(tuple(row))
        self.entries = tuple(grid)
        self.rows_layout = SpaceLayout(tuple(rd))
        self.cols_layout = SpaceLayout(tuple(cd))

    # shape helpers

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (len(self.rows_layout), len(self.cols_layout))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows_layout.total, self.cols_layout.total)

    @property
    def row_dims(self):
        return self.rows_layout.dims

    @property
    def col_dims(self):
        return self.cols_layout.dims

    def __getitem__(self, ij) -> Entry:
        i, j = ij
        return self.entries[i][j]

    def __repr__(self):
        return f"BlockOperatorFunction(grid={self.grid_shape}, dims={self.row_dims}x{self.col_dims})"

    # queries

    @property
    def is_polynomial(self) -> bool:
        return all(e.kind == "polynomial" for row in self.entries for e in row)

    def polys(self) -> list[list[MatrixPolynomial]]:
        out = []
        for row in self.entries:
            r = []
            for e in row:
                if e.kind != "polynomial":
                    raise TypeError(f"entry kind {e.kind} is not polynomial")
                r.append(e.P)
            out.append(r)
        return out

    def mask(self) -> np.ndarray:
        return np.array([[0 if e.is_zero else 1 for e in row] for row in self.entries], dtype=int)

    def excluded(self) -> ExcludedSet:
        out = EMPTY
        for row in self.entries:
            for e in row:
                out = out.union(entry_excluded_points(e))
        return out

    def eval(self, lam) -> np.ndarray:
        return block_eval(self, lam)

    __call__ = eval

    # structural operations

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "BlockOperatorFunction":
        return BlockOperatorFunction(
            [[self.entries[i][j] for j in cols] for i in rows],
            [self.row_dims[i] for i in rows], [self.col_dims[j] for j in cols])

    def permuted(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "BlockOperatorFunction":
        """New grid whose block row a is old block row row_perm[a]."""
        return self.submatrix(row_perm, col_perm)

    def structurally_equal(self, other: "BlockOperatorFunction", tol: float = 0.0) -> bool:
        if self.row_dims != other.row_dims or self.col_dims != other.col_dims:
            return False
        for a_row, b_row in zip(self.entries, other.entries):
            for a, b in zip(a_row, b_row):
                if not entries_equal(a, b, tol):
                    return False
        return True

    @staticmethod
    def from_blocks(blocks: Sequence[Sequence["BlockOperatorFunction | None"]]) -> "BlockOperatorFunction":
        """Concatenate a grid of block functions (None means zeros)."""
        nr, nc = len(blocks), len(blocks[0])
        rl = [None] * nr
        cl = [None] * nc
        for i in range(nr):
            for j in range(nc):
                b = blocks[i][j]
                if b is not None:
                    rl[i] = rl[i] or b.row_dims
                    cl[j] = cl[j] or b.col_dims
        if any(x is None for x in rl) or any(x is None for x in cl):
            raise DimensionMismatch("every block row and column needs one non-empty block")
        rows = []
        for i in range(nr):
            for a in range(len(rl[i])):
                row = []
                for j in range(nc):
                    b = blocks[i][j]
                    for c in range(len(cl[j])):
                        row.append(b.entries[a][c] if b is not None else zero_entry(rl[i][a], cl[j][c]))
                rows.append(row)
        return BlockOperatorFunction(rows, [d for x in rl for d in x], [d for x in cl for d in x])

    @staticmethod
    def from_polys(grid: Sequence[Sequence[MatrixPolynomial]]) -> "BlockOperatorFunction":
        return BlockOperatorFunction([[PolyEntry(p) for p in row] for row in grid],
                                     [row[0].rows for row in grid], [p.cols for p in grid[0]])

    @staticmethod
    def pencil(T, dims: Sequence[int]) -> "BlockOperatorFunction":
        """T - lam as a block function over the given diagonal layout."""
        T = cmatrix(T)
        off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        n = len(dims)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                blk = T[off[i]:off[i + 1], off[j]:off[j + 1]]
                cs = [blk]
                if i == j:
                    cs.append(-np.eye(dims[i]))
                row.append(PolyEntry(MatrixPolynomial.from_coeffs(cs)))
            rows.append(row)
        return BlockOperatorFunction(rows, dims, dims)

    @staticmethod
    def single(e, ) -> "BlockOperatorFunction":
        e = as_entry(e)
        return BlockOperatorFunction([[e]], [e.shape[0]], [e.shape[1]])

    @staticmethod
    def zeros(row_dims: Sequence[int], col_dims: Sequence[int]) -> "BlockOperatorFunction":
        return BlockOperatorFunction([[zero_entry(r, c) for c in col_dims] for r in row_dims],
                                     row_dims, col_dims)


def entries_equal(a: Entry, b: Entry, tol: float = 0.0) -> bool:
    if a is b:
        return True
    if a.kind != b.kind or a.shape != b.shape:
        return False
    if a.kind == "polynomial":
        if tol == 0.0:
            return a.P.coeffs.shape == b.P.coeffs.shape and np.array_equal(a.P.coeffs, b.P.coeffs)
        return a.P.allclose(b.P, tol)
    if a.kind == "product":
        return len(a.factors) == len(b.factors) and all(
            entries_equal(PolyEntry(x), PolyEntry(y), tol) for x, y in zip(a.factors, b.factors))
    if a.kind == "schur":
        return all(entries_equal(PolyEntry(getattr(a, k)), PolyEntry(getattr(b, k)), tol) for k in "ABCD")
    return a.node is b.node


def block_eval(F: BlockOperatorFunction, lam) -> np.ndarray:
    out = np.zeros(F.shape, complex)
    ro, co = F.rows_layout.offsets, F.cols_layout.offsets
    for i, row in enumerate(F.entries):
        for j, e in enumerate(row):
            if e.is_zero:
                continue
            out[ro[i]:ro[i + 1], co[j]:co[j + 1]] = e.eval(lam)
    return out


def entry_excluded_points(e: Entry) -> ExcludedSet:
    if e.kind != "schur":
        return EMPTY
    from .spectra import det_poly_roots

    roots = det_poly_roots(BlockOperatorFunction.single(PolyEntry(e.D)))
    return ExcludedSet(tuple(roots), "sigma(D)")


def polynomial_unfolding(F: BlockOperatorFunction):
    """Clear products and Schur complements.

    Products are multiplied out in place.  A Schur entry at (j, i) becomes A
    and gains a new row after j and a new column after i carrying B, C, D.
    The determinant of the result is det F times the product of det D, so
    the returned excluded set lists the roots to discard.
    """
    grid = [list(r) for r in F.entries]
    rd, cd = list(F.row_dims), list(F.col_dims)
    excluded = EMPTY
    # multiply out products first
    for i in range(len(grid)):
        for j in range(len(grid[i])):
            e = grid[i][j]
            if e.kind == "product":
                grid[i][j] = PolyEntry(e.expand())
            elif e.kind == "function":
                raise TypeError("function entries have no polynomial unfolding")
    while True:
        hit = next(((i, j) for i in range(len(grid)) for j in range(len(grid[i]))
                    if grid[i][j].kind == "schur"), None)
        if hit is None:
            break
        j, i = hit
        s = grid[j][i]
        excluded = excluded.union(entry_excluded_points(s))
        m = s.D.rows
        for r in range(len(grid)):
            grid[r].insert(i + 1, zero_entry(rd[r], m))
        new_row = [zero_entry(m, c) for c in cd[: i + 1]] + [zero_entry(m, m)] + \
            [zero_entry(m, c) for c in cd[i + 1:]]
        cd.insert(i + 1, m)
        grid.insert(j + 1, new_row)
        rd.insert(j + 1, m)
        grid[j][i] = PolyEntry(s.A)
        grid[j][i + 1] = PolyEntry(s.B)
        grid[j + 1][i] = PolyEntry(s.C)
        grid[j + 1][i + 1] = PolyEntry(s.D)
    return BlockOperatorFunction(grid, rd, cd), excluded
