"""Schur-complement extension and product linearization, standalone and embedded."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as X_
from .algebra import MatrixPolynomial
from .blockfun import (BlockOperatorFunction, ExcludedSet, PolyEntry, ProductEntry, SchurEntry,
                       entry_excluded_points, zero_entry)
from .equivalence import EquivalenceCertificate, embed_corner
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class SchurLinearizationPlan:
    A: MatrixPolynomial
    B: MatrixPolynomial
    C: MatrixPolynomial
    D: MatrixPolynomial

    def __post_init__(self):
        SchurEntry(self.A, self.B, self.C, self.D)  # dimension check

    @property
    def entry(self) -> SchurEntry:
        return SchurEntry(self.A, self.B, self.C, self.D)

    @cached_property
    def excluded(self) -> ExcludedSet:
        return entry_excluded_points(self.entry)

    @property
    def unfolding(self) -> BlockOperatorFunction:
        return BlockOperatorFunction([[self.A, self.B], [self.C, self.D]])

    @staticmethod
    def from_entry(e: SchurEntry) -> "SchurLinearizationPlan":
        return SchurLinearizationPlan(e.A, e.B, e.C, e.D)


@dataclass(frozen=True, eq=False)
class ProductLinearizationPlan:
    factors: tuple[MatrixPolynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        ProductEntry(self.factors)  # chain check

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def entry(self) -> ProductEntry:
        return ProductEntry(self.factors)

    @property
    def inner_dims(self) -> list[int]:
        """dims of H_1 .. H_{n-1}"""
        return [f.cols for f in self.factors[:-1]]

    @staticmethod
    def from_entry(e: ProductEntry) -> "ProductLinearizationPlan":
        return ProductLinearizationPlan(e.factors)


def schur_extend(p: SchurLinearizationPlan) -> EquivalenceCertificate:
    """S + D = E [A B; C D] F with E = [I, -B D^-1; 0, I], F = [I, 0; -D^-1 C, I]."""
    A, B, C, D = p.A, p.B, p.C, p.D
    lhs = BlockOperatorFunction.single(p.entry)
    rhs = p.unfolding
    Dn = X_.poly(D)
    nA_r, nA_c, m = A.rows, A.cols, D.rows
    E = X_.block([[X_.eye(nA_r), X_.neg(X_.mul(X_.poly(B), X_.inv(Dn)))],
                  [None, X_.eye(m)]], [nA_r, m], [nA_r, m])
    F = X_.block([[X_.eye(nA_c), None],
                  [X_.neg(X_.mul(X_.inv(Dn), X_.poly(C))), X_.eye(m)]], [nA_c, m], [nA_c, m])
    return EquivalenceCertificate(lhs, rhs, Dn, None, E, F, p.excluded, label="schur-extend")


def _corner_layouts(S_rows, S_cols, Xb, Yb, Zb):
    if Xb.row_dims != tuple(S_rows) or Yb.col_dims != tuple(S_cols):
        raise DimensionMismatch("X/Y do not fit the entry being embedded")


def schur_embed(p: SchurLinearizationPlan, Xb: BlockOperatorFunction, Yb: BlockOperatorFunction,
                Zb: BlockOperatorFunction) -> EquivalenceCertificate:
    """[S X; Y Z] ~ [A B X; C D 0; Y 0 Z] after D-extension (interleaved)."""
    inner = schur_extend(p)
    _corner_layouts((p.A.rows,), (p.A.cols,), Xb, Yb, Zb)
    m = p.D.rows
    rhs_X = BlockOperatorFunction.from_blocks(
        [[Xb], [BlockOperatorFunction.zeros([m], Zb.col_dims)]])
    rhs_Y = BlockOperatorFunction.from_blocks(
        [[Yb, BlockOperatorFunction.zeros(Zb.row_dims, [m])]])
    return embed_corner(inner, Xb, Yb, Zb, rhs_X=rhs_X, rhs_Y=rhs_Y, label="schur-embed")


def _partial(factors: Sequence[MatrixPolynomial], a: int, b: int, dim: int) -> MatrixPolynomial:
    """factors[a] @ ... @ factors[b-1]; identity of size dim when a == b."""
    if a >= b:
        return MatrixPolynomial.identity(dim)
    out = factors[a]
    for f in factors[a + 1 : b]:
        out = out @ f
    return out


def bidiagonal_T(p: ProductLinearizationPlan) -> BlockOperatorFunction:
    Ms = p.factors
    n = p.n
    rows_d = [Ms[0].rows] + p.inner_dims
    cols_d = p.inner_dims + [Ms[-1].cols]
    grid = []
    for r in range(n):
        row = []
        for c in range(n):
            if r == c:
                row.append(PolyEntry(Ms[r]))
            elif r == c + 1:
                row.append(PolyEntry(MatrixPolynomial.const(-np.eye(rows_d[r]))))
            else:
                row.append(zero_entry(rows_d[r], cols_d[c]))
        grid.append(row)
    return BlockOperatorFunction(grid, rows_d, cols_d)


def product_linearize(p: ProductLinearizationPlan) -> EquivalenceCertificate:
    """M + I_H = E T F with T bidiagonal (M_k on the diagonal, -I below)."""
    Ms = p.factors
    n = p.n
    lhs = BlockOperatorFunction.single(p.entry)
    if n == 1:
        rhs = BlockOperatorFunction.single(PolyEntry(Ms[0]))
        return EquivalenceCertificate(lhs, rhs, None, None, X_.eye(Ms[0].rows), X_.eye(Ms[0].cols),
                                      label="product-identity")
    rhs = bidiagonal_T(p)
    hd = [Ms[0].rows] + p.inner_dims       # H_0 .. H_{n-1}
    tc = p.inner_dims + [Ms[-1].cols]      # H_1 .. H_n
    # E[r][c] = M_{r+1} ... M_c (1-based), upper unitriangular
    Eg = [[X_.poly(_partial(Ms, r, c, hd[r])) if c >= r else None for c in range(n)] for r in range(n)]
    E = X_.block(Eg, hd, hd)
    # F rows follow T's columns (H_1..H_n); columns follow lhs (H_n, H_1..H_{n-1})
    fc = [Ms[-1].cols] + p.inner_dims
    Fg = [[None] * n for _ in range(n)]
    for t in range(n):
        Fg[t][0] = X_.poly(_partial(Ms, t + 1, n, tc[t]))
        if t + 1 < n:
            Fg[t][t + 1] = X_.const(-np.eye(tc[t]))
    F = X_.block(Fg, tc, fc)
    W = X_.eye(sum(p.inner_dims))
    return EquivalenceCertificate(lhs, rhs, W, None, E, F, label="product-linearize")


def product_embed(p: ProductLinearizationPlan, Xb: BlockOperatorFunction, Yb: BlockOperatorFunction,
                  Zb: BlockOperatorFunction) -> EquivalenceCertificate:
    """[M X; Y Z] ~ bidiagonal T with X in the H_0 row and Y in the H_n column."""
    inner = product_linearize(p)
    Ms = p.factors
    _corner_layouts((Ms[0].rows,), (Ms[-1].cols,), Xb, Yb, Zb)
    T = inner.rhs
    n_ext_r = T.row_dims[1:]
    n_ext_c = T.col_dims[:-1]
    if n_ext_r:
        rhs_X = BlockOperatorFunction.from_blocks(
            [[Xb], [BlockOperatorFunction.zeros(n_ext_r, Zb.col_dims)]])
        rhs_Y = BlockOperatorFunction.from_blocks(
            [[BlockOperatorFunction.zeros(Zb.row_dims, n_ext_c), Yb]])
    else:
        rhs_X, rhs_Y = Xb, Yb
    return embed_corner(inner, Xb, Yb, Zb, rhs_X=rhs_X, rhs_Y=rhs_Y, label="product-embed")
