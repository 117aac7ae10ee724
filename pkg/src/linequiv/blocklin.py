"""Block companion linearization of an n x n matrix polynomial grid.

Column i must carry its strictly highest degree d_i on the diagonal.  The
pencil T stacks one companion block per column; off-diagonal coupling lives
in the first block row of T_{j,i}.  With every l_i < d_i the factors are
written down directly.  Otherwise the certificate is assembled by embedding
one column at a time, which also works for l_i < d_i and serves as a second
route to the same T.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as X_
from .algebra import NEG_INF, MatrixPolynomial
from .blockfun import EMPTY, ZERO_POINT, BlockOperatorFunction, PolyEntry, SpaceLayout
from .companion import (CompanionSpec, alpha_row, beta_row, bidiagonal_W, companion_embed,
                        companion_factors, companion_matrix, invert_lead)
from .equivalence import EquivalenceCertificate, compose_certificates, permutation_certificate
from .errors import DiagonalDegreeViolation, DimensionMismatch


def _deg(P: MatrixPolynomial) -> int:
    return NEG_INF if P.is_zero else P.degree


@dataclass(frozen=True, eq=False)
class BlockPolySpec:
    P: tuple
    l: tuple = ()

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.P)
        object.__setattr__(self, "P", grid)
        n = len(grid)
        if any(len(r) != n for r in grid):
            raise DimensionMismatch("block polynomial grid must be square")
        l = tuple(self.l) if len(self.l) else (0,) * n
        if len(l) != n:
            raise DimensionMismatch(f"{len(l)} indices l for {n} columns")
        object.__setattr__(self, "l", l)
        dims = self.dims
        for j in range(n):
            for i in range(n):
                if grid[j][i].shape != (dims[j], dims[i]):
                    raise DimensionMismatch(f"entry ({j},{i}) is {grid[j][i].shape}")
        for i in range(n):
            di = _deg(grid[i][i])
            if di < 1:
                raise DiagonalDegreeViolation(f"diagonal entry {i} has degree {di} < 1")
            for j in range(n):
                if j != i and _deg(grid[j][i]) >= di:
                    raise DiagonalDegreeViolation(
                        f"deg P[{j}][{i}] = {_deg(grid[j][i])} is not below deg P[{i}][{i}] = {di}")
            if not 0 <= l[i] <= di:
                raise ValueError(f"l[{i}] = {l[i]} outside 0..{di}")
        self.lead_invs

    @property
    def n(self) -> int:
        return len(self.P)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.P[i][i].rows for i in range(len(self.P)))

    @property
    def d(self) -> tuple[int, ...]:
        return tuple(self.P[i][i].degree for i in range(self.n))

    @property
    def L(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.l[i] == self.d[i])

    @cached_property
    def lead_invs(self) -> tuple[np.ndarray, ...]:
        return tuple(invert_lead(self.P[i][i].lead, f"leading coefficient of diagonal entry {i}")
                     for i in range(self.n))

    def lead_inv(self, i: int) -> np.ndarray:
        return self.lead_invs[i]

    def column_spec(self, i: int) -> CompanionSpec:
        return CompanionSpec(self.P[i][i], self.l[i])

    @staticmethod
    def from_function(F: BlockOperatorFunction, l: Sequence[int] = ()) -> "BlockPolySpec":
        return BlockPolySpec(F.polys(), tuple(l))

    def as_function(self) -> BlockOperatorFunction:
        return BlockOperatorFunction.from_polys(self.P)


@dataclass(eq=False)
class BlockCompanionResult:
    T: np.ndarray
    W: X_.Node
    P_d_extra: np.ndarray | None
    layout: SpaceLayout
    slots: list = field(default_factory=list)  # slots[i][s] -> block index in layout

    def slot(self, i: int, s: int) -> range:
        return self.layout.span(self.slots[i][s])


def block_layout(spec: BlockPolySpec) -> tuple[SpaceLayout, list[list[int]]]:
    dims, slots, k = [], [], 0
    for i in range(spec.n):
        slots.append(list(range(k, k + spec.d[i])))
        dims += [spec.dims[i]] * spec.d[i]
        k += spec.d[i]
    return SpaceLayout(tuple(dims)), slots


def block_T(spec: BlockPolySpec) -> np.ndarray:
    layout, slots = block_layout(spec)
    T = np.zeros((layout.total, layout.total), complex)
    for i in range(spec.n):
        cols = np.arange(layout.offsets[slots[i][0]], layout.offsets[slots[i][-1] + 1])
        for j in range(spec.n):
            top = layout.span(slots[j][0])
            if i == j:
                T[np.ix_(cols, cols)] = companion_matrix(spec.column_spec(i))
                continue
            Pji = spec.P[j][i]
            di, m = spec.d[i], spec.dims[i]
            for c in range(di):
                T[top.start:top.stop, cols[0] + c * m:cols[0] + (c + 1) * m] = \
                    -spec.lead_inv(j) @ Pji.coeff(di - 1 - c)
    return T


def block_W(spec: BlockPolySpec) -> X_.Node:
    return X_.direct_sum(*[bidiagonal_W(spec.dims[i], spec.d[i], spec.l[i]) for i in range(spec.n)])


def _interleave(spec: BlockPolySpec) -> np.ndarray:
    """lhs arrangement: H_1, W_1, H_2, W_2, ... as indices into BD(P, W)."""
    nP = sum(spec.dims)
    idx, p_off, w_off = [], 0, nP
    for i in range(spec.n):
        m, wsize = spec.dims[i], spec.dims[i] * max(spec.d[i] - 1, spec.l[i])
        idx.append(np.arange(p_off, p_off + m))
        idx.append(np.arange(w_off, w_off + wsize))
        p_off += m
        w_off += wsize
    return np.concatenate(idx).astype(int)


def _explicit_factors(spec: BlockPolySpec):
    layout, slots = block_layout(spec)
    nb = len(layout)
    Eg = [[None] * nb for _ in range(nb)]
    Fg = [[None] * nb for _ in range(nb)]
    for i in range(spec.n):
        Ei, Fi = companion_factors(spec.column_spec(i))
        di = spec.d[i]
        Eii = _split(Ei, [spec.dims[i]] * di)
        Fii = _split(Fi, [spec.dims[i]] * di)
        for a in range(di):
            for b in range(di):
                Eg[slots[i][a]][slots[i][b]] = Eii[a][b]
                Fg[slots[i][a]][slots[i][b]] = Fii[a][b]
        for j in range(spec.n):
            if j == i:
                continue
            cs = [spec.P[j][i].coeff(k) for k in range(di)] + \
                [np.zeros((spec.dims[j], spec.dims[i]), complex)]
            row = alpha_row(cs, di, spec.l[i]) + beta_row(cs, spec.l[i])
            for b, node in enumerate(row):
                Eg[slots[j][0]][slots[i][b]] = node
    dims = list(layout.dims)
    return X_.block(Eg, dims, dims), X_.block(Fg, dims, dims)


def _split(node: X_.Node, dims: list[int]) -> list[list[X_.Node]]:
    if isinstance(node, X_.Block) and list(node.row_dims) == dims and list(node.col_dims) == dims:
        return [[g if g is not None else X_.zeros(dims[a], dims[b]) for b, g in enumerate(row)]
                for a, row in enumerate(node.grid)]
    off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    return [[X_.select(node, np.arange(off[a], off[a + 1]), np.arange(off[b], off[b + 1]))
             for b in range(len(dims))] for a in range(len(dims))]


def _excluded(spec: BlockPolySpec):
    return ZERO_POINT if any(spec.l) else EMPTY


def block_companion(spec: BlockPolySpec, method: str = "auto"):
    """(BlockCompanionResult, certificate of P + W ~ T - lam, or P_d + (T - lam) when L is nonempty)."""
    if method not in ("auto", "explicit", "compositional"):
        raise ValueError(f"unknown method {method!r}")
    if method == "explicit" and spec.L:
        raise ValueError("explicit factors exist only when every l_i < d_i")
    layout, slots = block_layout(spec)
    T = block_T(spec)
    W = block_W(spec)
    extra = None
    if spec.L:
        from scipy.linalg import block_diag as _bd
        extra = _bd(*[spec.P[i][i].lead for i in spec.L])
    result = BlockCompanionResult(T, W, extra, layout, slots)
    if method == "compositional" or spec.L:
        cert = _compositional(spec)
        return result, cert
    E, F = _explicit_factors(spec)
    lhs = spec.as_function()
    rhs = BlockOperatorFunction.pencil(T, layout.dims)
    order = _interleave(spec)
    cert = EquivalenceCertificate(lhs, rhs, W, None, E, F, _excluded(spec), order, order,
                                  label="block-companion")
    return result, cert


def _compositional(spec: BlockPolySpec) -> EquivalenceCertificate:
    """Linearize column by column, each time moving the column's diagonal block to the corner."""
    G = spec.as_function()
    # owner[b]: (column, slot) of current block b; slot None means not yet linearized
    owner = [(i, None) for i in range(spec.n)]
    cert = None
    for i in range(spec.n):
        p = owner.index((i, None))
        nb = len(owner)
        rest = [b for b in range(nb) if b != p]
        perm = [p] + rest
        c1 = permutation_certificate(G, perm, perm, label=f"move column {i}")
        H = c1.rhs
        k = len(rest) + 1
        S_rest = list(range(1, k))
        Q = H.submatrix(S_rest, [0])
        Xb = H.submatrix([0], S_rest)
        Zb = H.submatrix(S_rest, S_rest)
        c2 = companion_embed(spec.column_spec(i), Q, Xb, Zb)
        # rhs of c2: d_i new blocks first, then the rest in order; put them back at position p
        di = spec.d[i]
        before = [di + t for t in range(p)]
        after = [di + t for t in range(p, len(rest))]
        back = before + list(range(di)) + after
        c3 = permutation_certificate(c2.rhs, back, back, label=f"restore column {i}")
        step = compose_certificates(compose_certificates(c1, c2), c3)
        cert = step if cert is None else compose_certificates(cert, step)
        G = c3.rhs
        owner = owner[:p] + [(i, s) for s in range(di)] + owner[p + 1:]
    cert.label = "block-companion (column by column)"
    cert.excluded = _excluded(spec).union(cert.excluded)
    return cert


def degree_pad(grid: Sequence[Sequence[MatrixPolynomial]]):
    """Multiply column i by lam^(d - d_i) so every column reaches the top degree d.

    Returns the padded grid and the number of spurious eigenvalues at 0.
    """
    grid = [list(r) for r in grid]
    n = len(grid)
    cd = [max(_deg(grid[j][i]) for j in range(n)) for i in range(n)]
    d = max(cd)
    spurious = 0
    for i in range(n):
        s = d - cd[i] if cd[i] != NEG_INF else 0
        if s > 0:
            for j in range(n):
                grid[j][i] = grid[j][i].shift(s)
            spurious += s * grid[i][i].cols
    return grid, spurious
