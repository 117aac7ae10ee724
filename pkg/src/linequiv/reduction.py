"""Column reduction: left-multiply a polynomial grid until each column peaks on its diagonal.

Degrees use NEG_INF for the zero polynomial.  A difference entry whose
diagonal is zero but whose own entry is not is POS_INF.  All degrees are
recomputed from the trimmed polynomials after every step; the f-calculus
below is only used to bound them.

Both algorithms work in conjugated coordinates (the column being fixed is
moved to the front and the others are sorted), so the trace holds
PermuteDiag steps alongside the row operations.  Replaying a trace on the
input grid reproduces the output grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import expr as X_
from .algebra import NEG_INF, MatrixPolynomial, poly_block, poly_left_divide, poly_trim, random_poly
from .blockfun import BlockOperatorFunction
from .equivalence import EquivalenceCertificate
from .errors import (LinearizationError, NonTerminating, PostconditionFailed, PreconditionViolated,
                     SingularLeadingCoefficient)

POS_INF = float("inf")

Grid = list[list[MatrixPolynomial]]


# degree calculus


def _deg(P: MatrixPolynomial):
    return NEG_INF if P.is_zero else P.degree


def degree_matrix(grid: Sequence[Sequence[MatrixPolynomial]]) -> list[list]:
    return [[_deg(p) for p in row] for row in grid]


def difference_matrix(grid: Sequence[Sequence[MatrixPolynomial]]) -> list[list]:
    D = degree_matrix(grid)
    n = len(D)
    out = []
    for j in range(n):
        row = []
        for i in range(n):
            if D[j][i] == NEG_INF:
                row.append(NEG_INF)
            elif D[i][i] == NEG_INF:
                row.append(POS_INF)
            else:
                row.append(D[j][i] - D[i][i])
        out.append(row)
    return out


def f(x, y, z):
    """max(x, y + z) when y >= 0, else x."""
    if y < 0 or z == NEG_INF:
        return x
    return max(x, y + z)


def f0(x, y, z, w):
    a = f(x, y, z)
    if a == NEG_INF:
        return NEG_INF
    return a - f(0, w, z)


def format_matrix(M) -> str:
    def cell(v):
        return "-inf" if v == NEG_INF else ("inf" if v == POS_INF else str(int(v)))
    return "\n".join(" ".join(f"{cell(v):>5}" for v in row) for row in M)


# trace steps


@dataclass(frozen=True, eq=False)
class KStep:
    """row j -= K @ row i (working coordinates); `at` gives the original block labels."""
    j: int
    i: int
    K: MatrixPolynomial
    at: tuple = ()

    @property
    def trivial(self) -> bool:
        return self.K.is_zero


@dataclass(frozen=True)
class SwapRows:
    i: int
    j: int


@dataclass(frozen=True)
class PermuteDiag:
    """Conjugation: new block a is old block perm[a], rows and columns alike."""
    perm: tuple


Step = Union[KStep, SwapRows, PermuteDiag]


def make_K(grid: Sequence[Sequence[MatrixPolynomial]], j: int, i: int) -> KStep:
    if i == j:
        raise ValueError("no reduction step on the diagonal")
    Pji, Pii = grid[j][i], grid[i][i]
    if Pji.is_zero or (not Pii.is_zero and Pji.degree < Pii.degree):
        return KStep(j, i, MatrixPolynomial.zeros(Pji.rows, Pii.rows))
    try:
        K, _ = poly_left_divide(Pji, Pii)
    except SingularLeadingCoefficient as e:
        raise SingularLeadingCoefficient(f"reducing entry ({j},{i}): {e}") from None
    return KStep(j, i, K)


def step_guard(grid: Sequence[Sequence[MatrixPolynomial]]) -> int:
    """Bound on nontrivial K steps before a reduction is declared non-terminating."""
    D = [d for row in degree_matrix(grid) for d in row if d != NEG_INF]
    n = len(grid)
    return 4 * n * n * (max(D, default=0) + 1) ** 2


class _Work:
    """Grid plus accumulated factors: grid = E P0 Pi and P0 Pi = Einv grid."""

    def __init__(self, grid: Sequence[Sequence[MatrixPolynomial]], guard: int | None = None,
                 repair: bool = False):
        self.repair = repair
        self.repair_sweeps = 0
        self.grid: Grid = [list(r) for r in grid]
        n = len(self.grid)
        self.n = n
        self.dims = [self.grid[i][i].rows for i in range(n)]
        self.E: Grid = [[_ident_or_zero(self.dims, a, b) for b in range(n)] for a in range(n)]
        self.Einv: Grid = [[_ident_or_zero(self.dims, a, b) for b in range(n)] for a in range(n)]
        self.label = list(range(n))
        self.steps: list[Step] = []
        self.nontrivial = 0
        self.guard = step_guard(self.grid) if guard is None else guard

    def delta(self):
        return difference_matrix(self.grid)

    def kstep(self, j: int, i: int, step: KStep | None = None) -> KStep:
        if step is None:
            step = make_K(self.grid, j, i)
        step = KStep(j, i, step.K, (self.label[j], self.label[i]))
        self.steps.append(step)
        if step.trivial:
            return step
        self.nontrivial += 1
        if self.nontrivial > self.guard:
            raise NonTerminating(f"more than {self.guard} reduction steps; last at ({j},{i})")
        K = step.K
        before = degree_matrix(self.grid)
        dji = self.delta()[j][i]
        Pii = self.grid[i][i]
        for m in range(self.n):
            upd = _sub_trim(self.grid[j][m], K @ self.grid[i][m])
            if m == i:
                # the division removes every coefficient from deg P_ii upward exactly
                upd = poly_trim(MatrixPolynomial(upd.coeffs[:Pii.degree], upd.rows, upd.cols),
                                scale=self.grid[j][m].scale())
            self.grid[j][m] = upd
        after = degree_matrix(self.grid)
        for m in range(self.n):
            if m != i and after[j][m] > f(before[j][m], dji, before[i][m]):
                raise PostconditionFailed(
                    f"degree of ({j},{m}) grew to {after[j][m]} beyond the bound after step ({j},{i})")
        for c in range(self.n):
            self.E[j][c] = _sub_trim(self.E[j][c], K @ self.E[i][c])
        for r in range(self.n):
            self.Einv[r][i] = _sub_trim(self.Einv[r][i], -(self.Einv[r][j] @ K))
        return step

    def swap_rows(self, a: int, b: int) -> None:
        if a == b:
            return
        if self.dims[a] != self.dims[b]:
            raise PreconditionViolated(f"cannot swap rows {a} and {b} of different dimension")
        self.steps.append(SwapRows(a, b))
        self.grid[a], self.grid[b] = self.grid[b], self.grid[a]
        self.E[a], self.E[b] = self.E[b], self.E[a]
        for row in self.Einv:
            row[a], row[b] = row[b], row[a]

    def permute(self, perm: Sequence[int]) -> None:
        perm = tuple(int(p) for p in perm)
        if perm == tuple(range(self.n)):
            return
        self.steps.append(PermuteDiag(perm))
        self.grid = [[self.grid[a][b] for b in perm] for a in perm]
        self.dims = [self.dims[a] for a in perm]
        self.E = [self.E[a] for a in perm]
        self.Einv = [[row[b] for b in perm] for row in self.Einv]
        self.label = [self.label[a] for a in perm]


def _sub_trim(a: MatrixPolynomial, b: MatrixPolynomial) -> MatrixPolynomial:
    """a - b with trailing coefficients dropped relative to the operands, not the result."""
    return poly_trim(a - b, scale=max(a.scale(), b.scale()))


def _ident_or_zero(dims, a, b) -> MatrixPolynomial:
    if a == b:
        return MatrixPolynomial.identity(dims[a])
    return MatrixPolynomial.zeros(dims[a], dims[b])


@dataclass(eq=False)
class ReductionTrace:
    input: Grid
    steps: list
    final: Grid
    E: Grid          # E @ input == final
    E_inv: Grid      # input == E_inv @ final
    algorithm: str = ""
    repair_sweeps: int = 0

    @property
    def ksteps(self) -> list[KStep]:
        return [s for s in self.steps if isinstance(s, KStep) and not s.trivial]

    def E_poly(self) -> MatrixPolynomial:
        return poly_block(self.E)

    def E_inv_poly(self) -> MatrixPolynomial:
        return poly_block(self.E_inv)


def _trace(w: _Work, grid0, algorithm: str) -> ReductionTrace:
    if w.label != list(range(w.n)):
        raise PostconditionFailed("conjugations were not undone")
    return ReductionTrace([list(r) for r in grid0], list(w.steps), w.grid, w.E, w.Einv, algorithm,
                          w.repair_sweeps)


def replay(grid: Sequence[Sequence[MatrixPolynomial]], steps: Sequence[Step]) -> Grid:
    """Apply a recorded trace (stored K factors, not recomputed)."""
    w = _Work(grid, guard=10**9)
    for s in steps:
        if isinstance(s, KStep):
            w.kstep(s.j, s.i, s)
        elif isinstance(s, SwapRows):
            w.swap_rows(s.i, s.j)
        else:
            w.permute(s.perm)
    return w.grid


# row and diagonal reduction steps


def _row_reduce(w: _Work, k: int, delta=None) -> None:
    D = w.delta()
    for j in range(k):
        for i in range(k):
            if i != j and D[j][i] >= 0:
                raise PreconditionViolated(f"entry ({j},{i}) above row {k} is not reduced")
    if delta is None:
        delta = max((D[k][i] for i in range(k)), default=NEG_INF)
    if delta < 0:
        return
    if delta == POS_INF:
        raise SingularLeadingCoefficient(f"zero diagonal entry while reducing row {k}")
    for _ in range(int(delta) + 1):
        for i in range(k):
            w.kstep(k, i)
    _settle(w, k + 1, k, "row reduction")


def _diag_reduce(w: _Work, k: int) -> None:
    D = w.delta()
    for j in range(k + 1):
        for i in range(1, k + 1):
            if i != j and D[j][i] >= 0:
                raise PreconditionViolated(f"entry ({j},{i}) is not reduced")
    col = [D[j][0] for j in range(1, k + 1)]
    if any(a > b for a, b in zip(col, col[1:])):
        raise PreconditionViolated("first column is not sorted below the diagonal")
    delta = D[k][0] if k >= 1 else NEG_INF
    if delta < 0:
        return
    if delta == POS_INF:
        raise SingularLeadingCoefficient("zero diagonal entry in the leading column")
    if delta == 0:
        for j in range(1, k + 1):
            w.kstep(j, 0)
    else:
        for _ in range(int(delta) - 1):
            for q in range(k):
                for j in range(q + 1, k + 1):
                    w.kstep(j, q)
        for q in range(k):
            for j in range(k + 1):
                if j != q:
                    w.kstep(j, q)
    _settle(w, k + 1, k + 1, "diagonal reduction")


def _unreduced(w: _Work, nrows: int, ncols: int):
    D = w.delta()
    return [(j, i) for j in range(nrows) for i in range(ncols) if i != j and D[j][i] >= 0]


def _settle(w: _Work, nrows: int, ncols: int, what: str) -> None:
    """Check the leading block; in repair mode sweep it until it is reduced.

    Equal differences in the sorted column make the leading terms of the
    affected rows proportional, so a later step can cancel a diagonal lead
    and undo the degree bookkeeping.  A repair sweep reduces every column of
    the block in every other row; it stops when a sweep changes nothing.
    """
    bad = _unreduced(w, nrows, ncols)
    while bad and w.repair:
        before = w.nontrivial
        for q in range(ncols):
            for j in range(nrows):
                if j != q:
                    w.kstep(j, q)
        w.repair_sweeps += 1
        bad = _unreduced(w, nrows, ncols)
        if w.nontrivial == before:
            break
    if bad:
        j, i = bad[0]
        raise PostconditionFailed(f"{what} left entry ({j},{i}) with difference {w.delta()[j][i]}")


def row_reduce(grid: Sequence[Sequence[MatrixPolynomial]], k: int, delta=None,
               repair: bool = False) -> ReductionTrace:
    """Reduce row k against columns 0..k-1 by delta+1 sweeps."""
    w = _Work(grid, repair=repair)
    _row_reduce(w, k, delta)
    return _trace(w, grid, "row")


def diag_reduce(grid: Sequence[Sequence[MatrixPolynomial]], k: int,
                repair: bool = False) -> ReductionTrace:
    """Reduce the leading (k+1) x (k+1) block given reduced columns 1..k and a sorted column 0."""
    w = _Work(grid, repair=repair)
    _diag_reduce(w, k)
    return _trace(w, grid, "diag")


def _fix_column_k(w: _Work, k: int) -> None:
    """Move column k to the front, sort, reduce the leading block, move back."""
    if k == 0:
        return
    swap = list(range(w.n))
    swap[0], swap[k] = k, 0
    w.permute(swap)
    D = w.delta()
    order = sorted(range(1, k + 1), key=lambda r: D[r][0])
    sort = [0] + order + list(range(k + 1, w.n))
    w.permute(sort)
    _diag_reduce(w, k)
    w.permute(np.argsort(sort))
    w.permute(swap)


def _check_reduced(grid) -> None:
    D = difference_matrix(grid)
    for j in range(len(D)):
        for i in range(len(D)):
            if i != j and D[j][i] >= 0:
                raise PostconditionFailed(f"entry ({j},{i}) is not below its diagonal degree")


def column_reduce_same_space(grid: Sequence[Sequence[MatrixPolynomial]], repair: bool = True):
    """Pivoting algorithm for grids whose spaces all have the same dimension.

    With repair=False the prescribed step sequence runs as is and a tie that
    defeats it surfaces as PostconditionFailed.
    """
    w = _Work(grid, repair=repair)
    if len(set(w.dims)) > 1:
        raise PreconditionViolated(f"spaces differ in dimension: {w.dims}")
    n = w.n
    try:
        for k in range(n):
            if k < n - 1:
                degs = degree_matrix(w.grid)
                col = [degs[l][k] for l in range(k, n)]
                p = k + int(np.argmax(col))  # first index attaining the max
                w.swap_rows(k, p)
                for j in range(k + 1, n):
                    w.kstep(j, k)
            _fix_column_k(w, k)
        _check_reduced(w.grid)
    except LinearizationError as e:
        _tag_failure(w, e)
        raise
    tr = _trace(w, grid, "same-space")
    return tr.final, tr


def column_reduce_general(grid: Sequence[Sequence[MatrixPolynomial]], repair: bool = True):
    """Row-then-diagonal algorithm; spaces may differ."""
    w = _Work(grid, repair=repair)
    try:
        for k in range(1, w.n):
            _row_reduce(w, k)
            _fix_column_k(w, k)
        _check_reduced(w.grid)
    except LinearizationError as e:
        _tag_failure(w, e)
        raise
    tr = _trace(w, grid, "general")
    return tr.final, tr


def column_reduce(grid, algorithm: str = "general", repair: bool = True):
    if algorithm == "same-space":
        return column_reduce_same_space(grid, repair)
    if algorithm == "general":
        return column_reduce_general(grid, repair)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _tag_failure(w: _Work, e: LinearizationError) -> None:
    e.step_index = len(w.steps)


def reduction_certificate(trace: ReductionTrace) -> EquivalenceCertificate:
    """P = E_inv . P_hat . I as a certificate (no extension)."""
    lhs = BlockOperatorFunction.from_polys(trace.input)
    rhs = BlockOperatorFunction.from_polys(trace.final)
    E = X_.poly(trace.E_inv_poly())
    return EquivalenceCertificate(lhs, rhs, None, None, E, X_.eye(rhs.shape[1]),
                                  label=f"column reduction ({trace.algorithm})")


# random instances


def diagonal_dominates(D) -> bool:
    """True when the identity is the unique heaviest assignment of the degree matrix.

    Then the diagonal term carries the generic determinant degree and no
    reduction step has to build a diagonal lead out of a product through a
    smaller space.
    """
    n = len(D)
    ident = tuple(range(n))

    def weight(p):
        return sum(D[p[i]][i] for i in range(n))

    top = weight(ident)
    return top != NEG_INF and all(weight(p) < top for p in itertools.permutations(range(n)) if p != ident)


def random_grid(rng: np.random.Generator, dims: Sequence[int], max_degree: int = 3,
                dense: bool = True) -> Grid:
    """Random polynomial grid; sparse grids may have zero entries off the diagonal."""
    n = len(dims)
    lo = 0 if dense else -1
    D = [[int(rng.integers(lo, max_degree + 1)) for _ in range(n)] for _ in range(n)]
    return [[random_poly(rng, dims[j], dims[i], D[j][i]) for i in range(n)] for j in range(n)]


def random_dominant_grid(rng: np.random.Generator, dims: Sequence[int], max_degree: int = 3,
                         max_tries: int = 10_000) -> Grid:
    """Rejection-sample degree patterns whose diagonal dominates, then fill with random coefficients."""
    n = len(dims)
    for _ in range(max_tries):
        D = [[int(rng.integers(-1, max_degree + 1)) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            D[i][i] = int(rng.integers(1, max_degree + 1))
        D = [[NEG_INF if d < 0 else d for d in row] for row in D]
        if diagonal_dominates(D):
            return [[random_poly(rng, dims[j], dims[i], -1 if D[j][i] == NEG_INF else D[j][i])
                     for i in range(n)] for j in range(n)]
    raise RuntimeError("no dominant degree pattern found")
